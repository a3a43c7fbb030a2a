//! Executes a validated [`RunConfig`] and writes its artifacts.

use std::path::PathBuf;

use relstable::domains::Domain;
use relstable::estimators::{
    estimate_exit_cdf, estimate_green, estimate_killed_kernel, estimate_lambda1, estimate_survival,
};
use relstable::freekernel::{free_kernel_comparator, free_kernel_radial};
use relstable::levy::{levy_density, removed_density};
use relstable::rng::RngStream;
use relstable::simulate::{sample_killed_path, ThinningSampler};
use relstable::verify::{run_exit_check, run_green_comparison, run_sweep, RatioReport, Verdict};
use relstable::QuadratureConfig;
use serde_json::json;

use crate::config::{prepare_output_dir, EstimateSpec, Job, Quantity, RunConfig, Sampler, SimulateSpec};
use crate::emit::{emit_csv, emit_report_json, parse_csv, parse_report_json, write_file, write_records};
use crate::error::CliError;
use crate::plot::emit_plot_svg;

/// Result of one run: the verdict for commands that produce one and the
/// files written.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Option<Verdict>,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Some(Verdict::Fail) => 2,
            _ => 0,
        }
    }
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CliError> {
    prepare_output_dir(&cfg.output.dir)?;
    match &cfg.job {
        Job::Levy(spec) => {
            let p = cfg.params()?;
            let mut out = csv_writer();
            out.write_record(["r", "density", "removed_density"])?;
            for &r in &spec.r {
                out.write_record([f(r), f(levy_density(r, p)?), f(removed_density(r, p)?)])?;
            }
            table_outcome(cfg, out, spec.r.len())
        }
        Job::Kernel(spec) => {
            let p = cfg.params()?;
            let q = QuadratureConfig::default();
            let mut out = csv_writer();
            out.write_record(["t", "r", "kernel", "comparator"])?;
            for &t in &spec.t {
                for &r in &spec.r {
                    let k = free_kernel_radial(t, r, p, &q)?;
                    out.write_record([f(t), f(r), f(k), f(free_kernel_comparator(t, r, p)?)])?;
                }
            }
            table_outcome(cfg, out, spec.t.len() * spec.r.len())
        }
        Job::Simulate(spec) => simulate(cfg, spec),
        Job::Estimate(spec) => estimate(cfg, spec),
        Job::Sweep(s) => report_outcome(cfg, run_sweep(s)?),
        Job::GreenComparison(g) => report_outcome(cfg, run_green_comparison(g)?),
        Job::ExitCheck(e) => report_outcome(cfg, run_exit_check(e)?),
        Job::Report(spec) => {
            let read = |p: &PathBuf| std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())));
            let json = parse_report_json(&read(&spec.json)?)?;
            let csv_path = spec.csv.clone().unwrap_or_else(|| spec.json.with_extension("csv"));
            let records = parse_csv(&read(&csv_path)?)?;
            let report = RatioReport {
                config: json.config,
                records,
                dropped: Vec::new(),
                summary: json.summary,
                verdict: json.verdict,
                reason: json.reason,
            };
            let mut files = Vec::new();
            if cfg.output.plot && !report.records.is_empty() {
                let path = cfg.output_path("svg");
                emit_plot_svg(&report, &path, cfg.output.plot_axis)?;
                files.push(path);
            }
            Ok(Outcome {
                verdict: Some(report.verdict),
                summary: describe(&report, json.dropped_points),
                files,
            })
        }
    }
}

fn f(v: f64) -> String {
    format!("{v:?}")
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new())
}

fn table_outcome(cfg: &RunConfig, out: csv::Writer<Vec<u8>>, rows: usize) -> Result<Outcome, CliError> {
    let bytes = out.into_inner().map_err(|e| CliError::Csv(e.to_string()))?;
    let path = cfg.output_path("csv");
    write_file(&path, &bytes)?;
    Ok(Outcome {
        verdict: None,
        summary: format!("{}: {rows} rows", cfg.command.name()),
        files: vec![path],
    })
}

fn describe(report: &RatioReport, dropped: usize) -> String {
    let s = &report.summary;
    let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
    let mut line = format!(
        "verdict {:?}: {} retained, {dropped} dropped, ratios [{}, {}], C {}",
        report.verdict,
        report.records.len(),
        opt(s.min_ratio),
        opt(s.max_ratio),
        opt(s.fitted.c)
    );
    if let Some(g) = s.fitted.gamma {
        line.push_str(&format!(", gamma {g:.4e}"));
    }
    if let Some(l) = s.fitted.lambda1 {
        line.push_str(&format!(", lambda1 {l:.4}"));
    }
    if let Some(r) = &report.reason {
        line.push_str(&format!(" ({r})"));
    }
    line.to_lowercase()
}

fn report_outcome(cfg: &RunConfig, report: RatioReport) -> Result<Outcome, CliError> {
    let csv = cfg.output_path("csv");
    emit_csv(&report, &csv)?;
    let dropped = cfg.output.dir.join(format!("{}_dropped.csv", cfg.stem()));
    let mut buf = Vec::new();
    write_records(&report.dropped, &mut buf)?;
    write_file(&dropped, &buf)?;
    let json = cfg.output_path("json");
    emit_report_json(&report, &json)?;
    let mut files = vec![csv, dropped, json];
    if cfg.output.plot && !report.records.is_empty() {
        let svg = cfg.output_path("svg");
        emit_plot_svg(&report, &svg, cfg.output.plot_axis)?;
        files.push(svg);
    }
    Ok(Outcome {
        verdict: Some(report.verdict),
        summary: describe(&report, report.dropped_points()),
        files,
    })
}

fn simulate(cfg: &RunConfig, spec: &SimulateSpec) -> Result<Outcome, CliError> {
    let p = cfg.params()?;
    let start = spec.start.clone().unwrap_or_else(|| vec![0.0; p.d()]);
    if start.len() != p.d() {
        return Err(CliError::Config(format!("`simulate.start` must have {} coordinates", p.d())));
    }
    let dom = match &cfg.domain {
        Some(d) => d.build()?,
        None => Domain::full_space(p.d())?,
    };
    let thinning = match spec.sampler {
        Sampler::Thinning => Some(ThinningSampler::new(p, spec.jump_cut)?),
        Sampler::Subordination => None,
    };
    let mut out = csv_writer();
    out.write_record(["path", "exit_time", "endpoint"])?;
    for i in 0..spec.paths {
        let mut rng = RngStream::new(cfg.seed, i as u64).rng();
        let (exit, end) = match &thinning {
            None => {
                let path = sample_killed_path(&dom, spec.t, spec.grid_steps, &start, p, &mut rng)?;
                (path.exit_time(), path.endpoint().to_vec())
            }
            Some(s) => {
                let path = s.sample_path(spec.t, spec.grid_steps, &mut rng)?;
                let shift = |x: &[f64]| -> Vec<f64> { x.iter().zip(&start).map(|(a, b)| a + b).collect() };
                let hit = path.positions.iter().position(|x| !dom.is_inside(&shift(x)));
                match hit {
                    Some(k) => (Some(path.times[k]), shift(&path.positions[k])),
                    None => (None, shift(path.endpoint())),
                }
            }
        };
        let coords = end.iter().map(|&c| f(c)).collect::<Vec<_>>().join(";");
        out.write_record([i.to_string(), exit.map(f).unwrap_or_default(), coords])?;
    }
    table_outcome(cfg, out, spec.paths)
}

fn estimate(cfg: &RunConfig, spec: &EstimateSpec) -> Result<Outcome, CliError> {
    let p = cfg.params()?;
    let dom = cfg.domain()?.build()?;
    let need = |v: &Option<Vec<f64>>, k: &str| {
        v.clone()
            .ok_or_else(|| CliError::Config(format!("`estimate.{k}` is required for this quantity")))
    };
    let need_t = || spec.t.ok_or_else(|| CliError::Config("`estimate.t` is required for this quantity".into()));
    let mc = &cfg.mc;
    let (name, result) = match spec.quantity {
        Quantity::KilledKernel => (
            "killed_kernel",
            json!(estimate_killed_kernel(&dom, need_t()?, &need(&spec.x, "x")?, &need(&spec.y, "y")?, p, mc)?),
        ),
        Quantity::Survival => ("survival", json!(estimate_survival(&dom, need_t()?, &need(&spec.x, "x")?, p, mc)?)),
        Quantity::Lambda1 => ("lambda1", json!(estimate_lambda1(&dom, p, mc)?)),
        Quantity::Green => ("green", json!(estimate_green(&dom, &need(&spec.x, "x")?, &need(&spec.y, "y")?, p, mc)?)),
        Quantity::ExitCdf => (
            "exit_cdf",
            json!(estimate_exit_cdf(&dom, &need(&spec.x, "x")?, p, need_t()?, mc)?),
        ),
    };
    let doc = json!({
        "quantity": name,
        "params": p,
        "domain": cfg.domain()?,
        "mc": mc,
        "result": result,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let path = cfg.output_path("json");
    write_file(&path, text.as_bytes())?;
    Ok(Outcome {
        verdict: None,
        summary: format!("estimate {name}: {}", result),
        files: vec![path],
    })
}
