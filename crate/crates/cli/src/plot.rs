//! Self-contained SVG scatter of log-ratios.

use std::fmt::Write as _;
use std::path::Path;

use relstable::domains::Domain;
use relstable::verify::{RatioReport, ReportConfig};
use serde::{Deserialize, Serialize};

use crate::emit::write_file;
use crate::error::CliError;

/// Horizontal coordinate of each point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlotAxis {
    /// `t` when every record has one, otherwise `|x - y|`.
    #[default]
    Auto,
    T,
    Separation,
    /// `min(δ(x), δ(y))`.
    Delta,
}

pub const GENERATOR: &str = concat!("relstable-cli ", env!("CARGO_PKG_VERSION"));

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn report_domain(report: &RatioReport) -> Option<Domain<f64>> {
    match &report.config {
        ReportConfig::Sweep(c) => c.domain.build().ok(),
        ReportConfig::GreenComparison(c) => c.domain.build().ok(),
        ReportConfig::ExitCheck(_) => None,
    }
}

fn axis_values(report: &RatioReport, axis: PlotAxis) -> Result<(PlotAxis, Vec<f64>), CliError> {
    let recs = &report.records;
    let axis = match axis {
        PlotAxis::Auto if recs.iter().all(|r| r.t.is_some()) => PlotAxis::T,
        PlotAxis::Auto => PlotAxis::Separation,
        a => a,
    };
    let vals = match axis {
        PlotAxis::T => recs
            .iter()
            .map(|r| r.t.ok_or_else(|| CliError::Config("plot axis `t`: records carry no time".into())))
            .collect::<Result<_, _>>()?,
        PlotAxis::Separation => recs
            .iter()
            .map(|r| r.x.iter().zip(&r.y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect(),
        PlotAxis::Delta => {
            let dom = report_domain(report)
                .ok_or_else(|| CliError::Config("plot axis `delta` needs a report with a domain".into()))?;
            recs.iter().map(|r| dom.delta(&r.x).min(dom.delta(&r.y))).collect()
        }
        PlotAxis::Auto => unreachable!(),
    };
    Ok((axis, vals))
}

fn label(axis: PlotAxis) -> &'static str {
    match axis {
        PlotAxis::T => "t",
        PlotAxis::Separation => "|x - y|",
        PlotAxis::Delta => "min(δ(x), δ(y))",
        PlotAxis::Auto => "",
    }
}

fn span(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 * (1.0 + lo.abs()) {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

pub fn render_svg(report: &RatioReport, axis: PlotAxis) -> Result<String, CliError> {
    if report.records.is_empty() {
        return Err(CliError::Config("cannot plot a report without records".into()));
    }
    let (axis, xs) = axis_values(report, axis)?;
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(&report.records)
        .filter(|(x, r)| x.is_finite() && r.ratio > 0.0 && r.ratio.is_finite())
        .map(|(&x, r)| (x, r.ratio.ln()))
        .collect();
    if pts.is_empty() {
        return Err(CliError::Config("no record has a positive finite ratio to plot".into()));
    }
    let skipped = report.records.len() - pts.len();
    let log_x = pts.iter().all(|p| p.0 > 0.0) && {
        let (lo, hi) = pts.iter().fold((f64::INFINITY, 0.0f64), |a, p| (a.0.min(p.0), a.1.max(p.0)));
        hi / lo > 20.0
    };
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let band = report.summary.fitted.c.filter(|c| c.is_finite() && *c >= 1.0).map(f64::ln);

    let (xlo, xhi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(tx(p.0)), a.1.max(tx(p.0))));
    let (mut ylo, mut yhi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, p| (a.0.min(p.1), a.1.max(p.1)));
    if let Some(b) = band {
        ylo = ylo.min(-b);
        yhi = yhi.max(b);
    }
    let (xlo, xhi) = span(xlo, xhi);
    let (ylo, yhi) = span(ylo, yhi);
    let px = |x: f64| LEFT + (tx(x) - xlo) / (xhi - xlo) * (W - LEFT - RIGHT);
    let pxt = |v: f64| LEFT + (v - xlo) / (xhi - xlo) * (W - LEFT - RIGHT);
    let py = |y: f64| TOP + (yhi - y) / (yhi - ylo) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, "<?xml version=\"1.0\" encoding=\"UTF-8\"?>");
    let _ = writeln!(s, "<!-- generator: {GENERATOR} -->");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(s, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
    let _ = writeln!(s, "<rect x=\"{x0}\" y=\"{y0}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", x1 - x0, y1 - y0);
    for k in 0..=4 {
        let v = xlo + (xhi - xlo) * k as f64 / 4.0;
        let shown = if log_x { 10f64.powf(v) } else { v };
        let x = pxt(v);
        let _ = writeln!(s, "<line x1=\"{x:.2}\" y1=\"{y1}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y1 + 4.0);
        let _ = writeln!(s, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>", y1 + 16.0, fmt_tick(shown));
        let v = ylo + (yhi - ylo) * k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(s, "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/>", x0 - 4.0);
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>", x0 - 6.0, y + 4.0, fmt_tick(v));
    }
    let scale = if log_x { " (log scale)" } else { "" };
    let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}{scale}</text>", (x0 + x1) / 2.0, H - 12.0, label(axis));
    let _ = writeln!(
        s,
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">ln(estimate / comparator)</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    );
    if let Some(b) = band {
        for (v, class) in [(b, "band-upper"), (-b, "band-lower")] {
            let y = py(v);
            let _ = writeln!(
                s,
                "<line class=\"{class}\" x1=\"{x0}\" y1=\"{y:.2}\" x2=\"{x1}\" y2=\"{y:.2}\" stroke=\"firebrick\" stroke-dasharray=\"6 4\"/>"
            );
        }
        let _ = writeln!(s, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" fill=\"firebrick\">±ln C, C = {:.4}</text>", x1 - 4.0, py(b) - 4.0, b.exp());
    }
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{0:.2}\" x2=\"{x1}\" y2=\"{0:.2}\" stroke=\"gray\" stroke-width=\"0.5\"/>", py(0.0));
    let _ = writeln!(s, "<g class=\"points\" fill=\"steelblue\" fill-opacity=\"0.7\">");
    for &(x, y) in &pts {
        let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\"/>", px(x), py(y));
    }
    let _ = writeln!(s, "</g>");
    if skipped > 0 {
        let _ = writeln!(s, "<!-- {skipped} records without a positive finite ratio not drawn -->");
    }
    let _ = writeln!(s, "</svg>");
    Ok(s)
}

pub fn emit_plot_svg(report: &RatioReport, path: &Path, axis: PlotAxis) -> Result<(), CliError> {
    write_file(path, render_svg(report, axis)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use relstable::bounds::TheoremTag;
    use relstable::verify::{summarize, DomainSpec, RatioRecord, SweepConfig, Verdict};

    fn report(ts: &[f64], c: Option<f64>) -> RatioReport {
        let records: Vec<RatioRecord> = ts
            .iter()
            .enumerate()
            .map(|(i, &t)| RatioRecord {
                d: 1,
                alpha: 1.0,
                m: 1.0,
                t: Some(t),
                x: vec![0.1 + 0.1 * i as f64],
                y: vec![1.5],
                comparator: 1.0,
                estimate: 1.0 + i as f64,
                std_err: 0.0,
                ratio: 1.0 + i as f64,
            })
            .collect();
        let mut summary = summarize(&records);
        summary.fitted.c = c;
        let dom = DomainSpec::IntervalUnion { intervals: vec![[0.0, 2.0]] };
        RatioReport {
            config: ReportConfig::Sweep(SweepConfig::new(TheoremTag::Thm11SmallTime, dom, 1, 1.0)),
            records,
            dropped: vec![],
            summary,
            verdict: Verdict::Pass,
            reason: None,
        }
    }

    fn circles(svg: &str) -> Vec<(f64, f64)> {
        svg.lines()
            .filter(|l| l.starts_with("<circle"))
            .map(|l| {
                let get = |k: &str| -> f64 {
                    let i = l.find(&format!("{k}=\"")).unwrap() + k.len() + 2;
                    l[i..].split('"').next().unwrap().parse().unwrap()
                };
                (get("cx"), get("cy"))
            })
            .collect()
    }

    fn band_ys(svg: &str) -> Vec<f64> {
        svg.lines()
            .filter(|l| l.contains("class=\"band-"))
            .map(|l| {
                let i = l.find("y1=\"").unwrap() + 4;
                l[i..].split('"').next().unwrap().parse().unwrap()
            })
            .collect()
    }

    #[test]
    fn band_lines_sit_at_plus_minus_log_c() {
        let svg = render_svg(&report(&[0.1, 0.2, 0.4], Some(4.0)), PlotAxis::T).unwrap();
        assert!(svg.contains("<!-- generator: relstable-cli"));
        assert!(!svg.contains("href"));
        let b = band_ys(&svg);
        assert_eq!(b.len(), 2);
        // The point with ratio 1 lies midway between the band lines.
        let mid = circles(&svg)[0].1;
        assert!(((b[0] + b[1]) / 2.0 - mid).abs() < 0.02);
        // The ratio-3 point sits at ln 3 / ln 4 of the way up from 0.
        let up = circles(&svg)[2].1;
        assert!(((mid - up) / (mid - b[0]) - 3f64.ln() / 4f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn single_point_renders() {
        let svg = render_svg(&report(&[0.3], None), PlotAxis::Auto).unwrap();
        assert_eq!(circles(&svg).len(), 1);
        assert!(band_ys(&svg).is_empty());
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn axis_choice_is_honoured() {
        let r = report(&[0.1, 0.2, 0.4], Some(4.0));
        let by_t = render_svg(&r, PlotAxis::T).unwrap();
        let by_sep = render_svg(&r, PlotAxis::Separation).unwrap();
        let by_delta = render_svg(&r, PlotAxis::Delta).unwrap();
        assert!(by_t.contains(">t</text>"));
        assert!(by_sep.contains(">|x - y|</text>"));
        assert!(by_delta.contains("δ(x)"));
        // Separation shrinks as x moves towards y, so the order flips.
        let (a, b) = (circles(&by_t), circles(&by_sep));
        assert!(a[0].0 < a[2].0 && b[0].0 > b[2].0);
    }

    #[test]
    fn time_axis_needs_times() {
        let mut r = report(&[0.1], None);
        r.records[0].t = None;
        assert!(render_svg(&r, PlotAxis::T).is_err());
        assert!(render_svg(&r, PlotAxis::Auto).is_ok());
    }
}
