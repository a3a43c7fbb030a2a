//! Sweeps comparing estimates against comparators, with ratio statistics
//! and pass/fail verdicts.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{ComparatorSpec, TheoremTag};
use crate::domains::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_exit_cdf, estimate_lambda1, GreenEstimator, KilledKernelEstimator, MonteCarloConfig,
};
use crate::freekernel::free_kernel_radial;
use crate::quad::QuadratureConfig;
use crate::rng::RngStream;
use crate::specialfns::ModelParams;

/// Serializable description of a [`Domain`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    FullSpace { d: usize },
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_in: f64, r_out: f64 },
    HalfSpace { d: usize, a: f64 },
    BumpHalfSpace { d: usize, a: f64, b: f64, width: f64 },
    IntervalUnion { intervals: Vec<[f64; 2]> },
    BallComplement { center: Vec<f64>, radius: f64 },
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain<f64>> {
        match self {
            DomainSpec::FullSpace { d } => Domain::full_space(*d),
            DomainSpec::Ball { center, radius } => Domain::ball(center.clone(), *radius),
            DomainSpec::Annulus { center, r_in, r_out } => Domain::annulus(center.clone(), *r_in, *r_out),
            DomainSpec::HalfSpace { d, a } => Domain::half_space(*d, *a),
            DomainSpec::BumpHalfSpace { d, a, b, width } => Domain::bump_half_space(*d, *a, *b, *width),
            DomainSpec::IntervalUnion { intervals } => {
                Domain::interval_union(intervals.iter().map(|&[a, b]| (a, b)).collect())
            }
            DomainSpec::BallComplement { center, radius } => Domain::ball_complement(center.clone(), *radius),
        }
    }
}

/// Source of the numerator in each ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    #[default]
    MonteCarlo,
    /// Uses the comparator itself; every ratio is 1.
    SelfTest,
}

/// Estimator paired with each comparator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    KilledKernel,
    Green,
    FreeKernelQuadrature,
}

pub fn estimator_for(tag: TheoremTag) -> EstimatorKind {
    match tag {
        TheoremTag::Thm11SmallTime | TheoremTag::Thm11LargeTime => EstimatorKind::KilledKernel,
        TheoremTag::VAlpha | TheoremTag::Vtilde | TheoremTag::HalfspaceDGe2 | TheoremTag::HalfspaceD1 => {
            EstimatorKind::Green
        }
        TheoremTag::FreeKernel => EstimatorKind::FreeKernelQuadrature,
    }
}

fn default_pairs() -> usize {
    10
}

fn default_max_rel_se() -> f64 {
    0.25
}

/// One sweep over masses, times and point pairs for a single theorem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub theorem_tag: TheoremTag,
    pub domain: DomainSpec,
    pub d: usize,
    pub alpha: f64,
    pub m_grid: Vec<f64>,
    /// Upper end `M` of the mass range the estimate is uniform over.
    pub m_max: f64,
    /// Times; ignored by Green sweeps and filled from the fit window for
    /// large-time sweeps when empty.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Separations `|x - y|` for free-kernel sweeps.
    #[serde(default)]
    pub r_grid: Vec<f64>,
    #[serde(default = "default_pairs")]
    pub pairs_per_cell: usize,
    #[serde(default)]
    pub mc: MonteCarloConfig,
    /// Records with larger relative standard error are dropped.
    #[serde(default = "default_max_rel_se")]
    pub max_rel_se: f64,
    /// Largest fitted band constant that passes.
    pub c_cap: f64,
    /// Optional cap on `ln(max ratio / min ratio)`.
    #[serde(default)]
    pub max_log_spread: Option<f64>,
    /// Smallest fraction of records that must survive the SE filter.
    #[serde(default)]
    pub min_retained: f64,
    /// Fit the inner constant of `φ` instead of fixing it at 1.
    #[serde(default)]
    pub fit_c2: bool,
    #[serde(default)]
    pub mode: EstimatorMode,
}

impl SweepConfig {
    pub fn new(theorem_tag: TheoremTag, domain: DomainSpec, d: usize, alpha: f64) -> Self {
        Self {
            theorem_tag,
            domain,
            d,
            alpha,
            m_grid: vec![1.0],
            m_max: 1.0,
            t_grid: Vec::new(),
            r_grid: Vec::new(),
            pairs_per_cell: default_pairs(),
            mc: MonteCarloConfig::default(),
            max_rel_se: default_max_rel_se(),
            c_cap: if estimator_for(theorem_tag) == EstimatorKind::Green {
                50.0
            } else {
                200.0
            },
            max_log_spread: None,
            min_retained: 0.0,
            fit_c2: false,
            mode: EstimatorMode::MonteCarlo,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.m_grid.is_empty() {
            return bad("m_grid must not be empty".into());
        }
        if !(self.m_max > 0.0) {
            return bad("m_max must be positive".into());
        }
        if let Some(&m) = self.m_grid.iter().find(|&&m| !(m >= 0.0) || m > self.m_max) {
            return bad(format!("mass {m} outside [0, m_max = {}]", self.m_max));
        }
        let kind = estimator_for(self.theorem_tag);
        let needs_t = matches!(self.theorem_tag, TheoremTag::Thm11SmallTime | TheoremTag::FreeKernel);
        if needs_t && self.t_grid.is_empty() {
            return bad("t_grid must not be empty".into());
        }
        if self.t_grid.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return bad("times must be positive".into());
        }
        if self.theorem_tag == TheoremTag::FreeKernel && self.r_grid.is_empty() {
            return bad("r_grid must not be empty".into());
        }
        if self.r_grid.iter().any(|&r| !(r >= 0.0) || !r.is_finite()) {
            return bad("separations must be finite and >= 0".into());
        }
        if kind != EstimatorKind::FreeKernelQuadrature && self.pairs_per_cell == 0 {
            return bad("pairs_per_cell must be positive".into());
        }
        if !(self.max_rel_se > 0.0) || !(self.c_cap >= 1.0) {
            return bad("max_rel_se must be positive and c_cap at least 1".into());
        }
        if let Some(s) = self.max_log_spread {
            if !(s > 0.0) {
                return bad("max_log_spread must be positive".into());
            }
        }
        if !(0.0..=1.0).contains(&self.min_retained) {
            return bad("min_retained must lie in [0, 1]".into());
        }
        self.mc.validate()
    }

    fn params(&self, m: f64) -> Result<ModelParams<f64>> {
        ModelParams::new(self.d, self.alpha, m)
    }
}

/// One estimate next to its comparator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub d: usize,
    pub alpha: f64,
    pub m: f64,
    /// Absent for Green functions.
    pub t: Option<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub comparator: f64,
    pub estimate: f64,
    pub std_err: f64,
    pub ratio: f64,
}

/// Fitted constants; absent entries do not apply to the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Fitted {
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub c2_inner: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct RatioSummary {
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub geo_mean: Option<f64>,
    pub log_spread: Option<f64>,
    pub fitted: Fitted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Configuration a report was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportConfig {
    Sweep(SweepConfig),
    ExitCheck(ExitCheckConfig),
    GreenComparison(GreenComparisonConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub config: ReportConfig,
    pub records: Vec<RatioRecord>,
    pub dropped: Vec<RatioRecord>,
    pub summary: RatioSummary,
    pub verdict: Verdict,
    pub reason: Option<String>,
}

impl RatioReport {
    pub fn dropped_points(&self) -> usize {
        self.dropped.len()
    }
}

/// `C = exp(max |ln ratio|)` over the records, together with the inner
/// constant they were evaluated with.
pub fn fit_band(records: &[RatioRecord], c2_inner: f64) -> (f64, f64) {
    (max_abs_log(records.iter().map(|r| r.ratio)).exp(), c2_inner)
}

fn max_abs_log(ratios: impl Iterator<Item = f64>) -> f64 {
    ratios.map(|r| r.ln().abs()).fold(0.0, f64::max)
}

/// Ratio statistics over retained records.
pub fn summarize(records: &[RatioRecord]) -> RatioSummary {
    if records.is_empty() {
        return RatioSummary::default();
    }
    let lo = records.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let hi = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let geo = (records.iter().map(|r| r.ratio.ln()).sum::<f64>() / records.len() as f64).exp();
    RatioSummary {
        min_ratio: Some(lo),
        max_ratio: Some(hi),
        geo_mean: Some(geo),
        log_spread: Some((hi / lo).ln()),
        fitted: Fitted {
            c: Some(fit_band(records, 1.0).0),
            ..Fitted::default()
        },
    }
}

/// One of three placements of a point pair relative to the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Interior,
    OneNear,
    BothNear,
}

/// Stratum of pair `i` out of `n`: about 40% interior, 30% each near.
pub fn stratum_of(i: usize, n: usize) -> Stratum {
    let interior = (2 * n).div_ceil(5);
    let one = interior + (n - interior).div_ceil(2);
    if i < interior {
        Stratum::Interior
    } else if i < one {
        Stratum::OneNear
    } else {
        Stratum::BothNear
    }
}

fn bounding_box(dom: &Domain<f64>) -> (Vec<f64>, Vec<f64>) {
    match dom.kind() {
        DomainKind::FullSpace { d } => (vec![-2.0; *d], vec![2.0; *d]),
        DomainKind::Ball { center, radius } => (
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        ),
        DomainKind::Annulus { center, r_out, .. } => (
            center.iter().map(|c| c - r_out).collect(),
            center.iter().map(|c| c + r_out).collect(),
        ),
        DomainKind::BallComplement { center, radius } => (
            center.iter().map(|c| c - 3.0 * radius).collect(),
            center.iter().map(|c| c + 3.0 * radius).collect(),
        ),
        DomainKind::HalfSpace { d, a } => {
            let mut lo = vec![-2.0; *d];
            let mut hi = vec![2.0; *d];
            lo[d - 1] = *a;
            hi[d - 1] = a + 4.0;
            (lo, hi)
        }
        DomainKind::BumpHalfSpace { d, a, b, .. } => {
            let mut lo = vec![-2.0; *d];
            let mut hi = vec![2.0; *d];
            lo[d - 1] = a.min(*b);
            hi[d - 1] = a.max(*b) + 4.0;
            (lo, hi)
        }
        DomainKind::IntervalUnion { intervals } => (
            vec![intervals.iter().map(|i| i.0).fold(f64::INFINITY, f64::min)],
            vec![intervals.iter().map(|i| i.1).fold(f64::NEG_INFINITY, f64::max)],
        ),
    }
}

/// Uniform point of the bounding box with `lo ≤ δ_D ≤ hi`, by rejection.
pub fn sample_point_with_delta(dom: &Domain<f64>, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let (a, b) = bounding_box(dom);
    let mut x = vec![0.0; a.len()];
    for _ in 0..2_000_000 {
        for i in 0..x.len() {
            x[i] = a[i] + (b[i] - a[i]) * rng.random::<f64>();
        }
        if dom.is_inside(&x) {
            let d = dom.delta(&x);
            if d >= lo && d <= hi {
                return Ok(x);
            }
        }
    }
    Err(Error::InsufficientData(format!("no point with boundary distance in [{lo}, {hi}]")))
}

/// Largest boundary distance attained in `dom`, capped at 2 for unbounded sets.
fn max_delta(dom: &Domain<f64>) -> f64 {
    match dom.deepest_point() {
        Some(c) => dom.delta(&c),
        None => 2.0,
    }
}

/// Boundary-distance ranges `(interior, near)` for a reference length `s`,
/// keeping near-boundary points at least `floor` from the boundary.
fn strata_ranges(dom: &Domain<f64>, s: f64, floor: f64) -> ((f64, f64), (f64, f64)) {
    let top = max_delta(dom);
    let interior = ((s).min(0.5 * top), top);
    let near_hi = (s / 4.0).min(0.25 * top);
    let near_lo = (s / 16.0).max(floor).min(0.5 * near_hi);
    (interior, (near_lo, near_hi))
}

fn sample_pairs(
    dom: &Domain<f64>,
    n: usize,
    s: f64,
    floor: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    let (inner, near) = strata_ranges(dom, s, floor);
    (0..n)
        .map(|i| {
            let (rx, ry) = match stratum_of(i, n) {
                Stratum::Interior => (inner, inner),
                Stratum::OneNear => (inner, near),
                Stratum::BothNear => (near, near),
            };
            let x = sample_point_with_delta(dom, rx.0, rx.1, rng)?;
            let y = sample_point_with_delta(dom, ry.0, ry.1, rng)?;
            Ok((x, y))
        })
        .collect()
}

fn check_compatible(cfg: &SweepConfig, dom: &Domain<f64>) -> Result<()> {
    let half_line = matches!(dom.kind(), DomainKind::HalfSpace { d: 1, a } if *a == 0.0);
    let upper_half = matches!(dom.kind(), DomainKind::HalfSpace { a, .. } if *a == 0.0) && cfg.d >= 2;
    let half_like = matches!(dom.kind(), DomainKind::HalfSpace { .. } | DomainKind::BumpHalfSpace { .. });
    let ok = match cfg.theorem_tag {
        TheoremTag::Thm11SmallTime => !matches!(dom.kind(), DomainKind::FullSpace { .. }),
        TheoremTag::Thm11LargeTime | TheoremTag::VAlpha => dom.is_bounded(),
        TheoremTag::Vtilde => half_like,
        TheoremTag::HalfspaceDGe2 => upper_half,
        TheoremTag::HalfspaceD1 => half_line,
        TheoremTag::FreeKernel => matches!(dom.kind(), DomainKind::FullSpace { .. }),
    };
    if !ok {
        return Err(Error::Incompatible(format!(
            "{} cannot be checked on {:?}",
            cfg.theorem_tag.name(),
            cfg.domain
        )));
    }
    if dom.dim() != cfg.d {
        return Err(Error::DimensionMismatch {
            expected: cfg.d,
            got: dom.dim(),
        });
    }
    let needs_mass = matches!(
        cfg.theorem_tag,
        TheoremTag::Vtilde | TheoremTag::HalfspaceDGe2 | TheoremTag::HalfspaceD1
    );
    if needs_mass && cfg.m_grid.iter().any(|&m| m == 0.0) {
        return Err(Error::Incompatible("half-space Green comparators need m > 0".into()));
    }
    Ok(())
}

/// Raw record before ratio and filtering.
struct Entry {
    params: ModelParams<f64>,
    t: Option<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    estimate: f64,
    std_err: f64,
}

/// Runs the sweep described by `cfg`.
pub fn run_sweep(cfg: &SweepConfig) -> Result<RatioReport> {
    cfg.validate()?;
    let dom = cfg.domain.build()?;
    check_compatible(cfg, &dom)?;
    let mut spec = ComparatorSpec::<f64>::new(cfg.theorem_tag);
    let mut lambda_fit = None;
    let entries = match estimator_for(cfg.theorem_tag) {
        EstimatorKind::FreeKernelQuadrature => free_kernel_entries(cfg)?,
        EstimatorKind::KilledKernel if cfg.theorem_tag == TheoremTag::Thm11LargeTime => {
            let (entries, lambdas) = large_time_entries(cfg, &dom, &mut spec)?;
            lambda_fit = Some(lambdas);
            entries
        }
        EstimatorKind::KilledKernel => small_time_entries(cfg, &dom, &spec)?,
        EstimatorKind::Green => green_entries(cfg, &dom, &spec)?,
    };

    let comparator = |e: &Entry, spec: &ComparatorSpec<f64>, lambda: Option<f64>| -> Result<f64> {
        let s = match lambda {
            Some(l) => spec.with_lambda1(l),
            None => *spec,
        };
        s.evaluate(e.t.unwrap_or(1.0), &e.x, &e.y, &dom, &e.params)
    };
    let lambda_of = |e: &Entry| -> Option<f64> {
        lambda_fit
            .as_ref()
            .and_then(|v: &Vec<(f64, f64)>| v.iter().find(|(m, _)| *m == e.params.m()).map(|p| p.1))
    };
    let keep = |e: &Entry| e.estimate > 0.0 && e.std_err <= cfg.max_rel_se * e.estimate;

    let mut c2 = 1.0;
    if cfg.fit_c2 && cfg.theorem_tag == TheoremTag::Thm11SmallTime {
        let kept: Vec<&Entry> = entries.iter().filter(|e| keep(e)).collect();
        if !kept.is_empty() {
            let mut best = (f64::INFINITY, 1.0);
            for k in 0..=60 {
                let cand = 10f64.powf(-2.0 + 3.0 * k as f64 / 60.0);
                let s = spec.with_c2_inner(cand);
                let mut worst: f64 = 0.0;
                for e in &kept {
                    worst = worst.max((e.estimate / comparator(e, &s, None)?).ln().abs());
                }
                if worst < best.0 {
                    best = (worst, cand);
                }
            }
            c2 = best.1;
        }
    }
    spec = spec.with_c2_inner(c2);

    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for e in &entries {
        let q = match cfg.mode {
            EstimatorMode::SelfTest => e.estimate,
            EstimatorMode::MonteCarlo => comparator(e, &spec, lambda_of(e))?,
        };
        let rec = RatioRecord {
            d: cfg.d,
            alpha: cfg.alpha,
            m: e.params.m(),
            t: e.t,
            x: e.x.clone(),
            y: e.y.clone(),
            comparator: q,
            estimate: e.estimate,
            std_err: e.std_err,
            ratio: e.estimate / q,
        };
        if keep(e) && rec.ratio.is_finite() && rec.ratio > 0.0 {
            records.push(rec);
        } else {
            dropped.push(rec);
        }
    }

    let mut summary = summarize(&records);
    if cfg.theorem_tag == TheoremTag::Thm11SmallTime {
        summary.fitted.c2_inner = Some(c2);
    }
    if let Some(l) = &lambda_fit {
        summary.fitted.lambda1 = l.first().map(|p| p.1);
    }
    let total = records.len() + dropped.len();
    let (verdict, reason) = verdict_for(cfg, &summary, records.len(), total);
    Ok(RatioReport {
        config: ReportConfig::Sweep(cfg.clone()),
        records,
        dropped,
        summary,
        verdict,
        reason,
    })
}

fn verdict_for(cfg: &SweepConfig, s: &RatioSummary, kept: usize, total: usize) -> (Verdict, Option<String>) {
    let fail = |m: String| (Verdict::Fail, Some(m));
    if kept == 0 {
        return fail("no records survived the standard-error filter".into());
    }
    let frac = kept as f64 / total as f64;
    if frac < cfg.min_retained {
        return fail(format!("retained fraction {frac:.3} below {}", cfg.min_retained));
    }
    let c = s.fitted.c.unwrap_or(f64::INFINITY);
    if !(c <= cfg.c_cap) {
        return fail(format!("fitted C = {c:.4} exceeds cap {}", cfg.c_cap));
    }
    if let (Some(cap), Some(spread)) = (cfg.max_log_spread, s.log_spread) {
        if spread > cap {
            return fail(format!("log spread {spread:.4} exceeds {cap}"));
        }
    }
    (Verdict::Pass, None)
}

fn cell_rng(cfg: &SweepConfig, cell: usize) -> ChaCha8Rng {
    RngStream::new(cfg.mc.seed, 1_000_000 + cell as u64).rng()
}

fn self_test_entry(
    spec: &ComparatorSpec<f64>,
    dom: &Domain<f64>,
    params: ModelParams<f64>,
    t: Option<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
) -> Result<Entry> {
    let v = spec.evaluate(t.unwrap_or(1.0), &x, &y, dom, &params)?;
    Ok(Entry {
        params,
        t,
        x,
        y,
        estimate: v,
        std_err: 0.0,
    })
}

fn free_kernel_entries(cfg: &SweepConfig) -> Result<Vec<Entry>> {
    let qc = QuadratureConfig::default();
    let mut out = Vec::new();
    for &m in &cfg.m_grid {
        let params = cfg.params(m)?;
        for &t in &cfg.t_grid {
            for &r in &cfg.r_grid {
                let x = vec![0.0; cfg.d];
                let mut y = vec![0.0; cfg.d];
                y[0] = r;
                let estimate = match free_kernel_radial(t, r, &params, &qc) {
                    Ok(v) => v,
                    Err(Error::Quadrature { estimate, .. }) => estimate,
                    Err(e) => return Err(e),
                };
                out.push(Entry {
                    params,
                    t: Some(t),
                    x,
                    y,
                    estimate,
                    std_err: 0.0,
                });
            }
        }
    }
    Ok(out)
}

fn small_time_entries(cfg: &SweepConfig, dom: &Domain<f64>, spec: &ComparatorSpec<f64>) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    let mut cell = 0;
    for &m in &cfg.m_grid {
        let params = cfg.params(m)?;
        for &t in &cfg.t_grid {
            let s = t.powf(1.0 / cfg.alpha);
            let floor = 2.0 * (t / cfg.mc.grid_steps as f64).powf(1.0 / cfg.alpha);
            let pairs = sample_pairs(dom, cfg.pairs_per_cell, s, floor, &mut cell_rng(cfg, cell))?;
            cell += 1;
            if cfg.mode == EstimatorMode::SelfTest {
                for (x, y) in pairs {
                    out.push(self_test_entry(spec, dom, params, Some(t), x, y)?);
                }
                continue;
            }
            let est = KilledKernelEstimator::new(dom, &params, t, &cfg.mc)?;
            for (x, y) in pairs {
                let k = est.estimate(&x, &y)?;
                out.push(Entry {
                    params,
                    t: Some(t),
                    x,
                    y,
                    estimate: k.value,
                    std_err: k.std_err,
                });
            }
        }
    }
    Ok(out)
}

/// Large-time entries at `t ∈ {T, 2T, 3T}` (or the configured times) and the
/// fitted eigenvalue for every mass.
fn large_time_entries(
    cfg: &SweepConfig,
    dom: &Domain<f64>,
    spec: &mut ComparatorSpec<f64>,
) -> Result<(Vec<Entry>, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    let mut lambdas = Vec::new();
    for (cell, &m) in cfg.m_grid.iter().enumerate() {
        let params = cfg.params(m)?;
        let fit = estimate_lambda1(dom, &params, &cfg.mc)?;
        lambdas.push((m, fit.lambda1));
        let times = if cfg.t_grid.is_empty() {
            let t0 = fit.window.0;
            vec![t0, 2.0 * t0, 3.0 * t0]
        } else {
            cfg.t_grid.clone()
        };
        let s = 0.5 * max_delta(dom);
        let floor = 2.0 * fit.dt.powf(1.0 / cfg.alpha);
        let pairs = sample_pairs(dom, cfg.pairs_per_cell, s, floor, &mut cell_rng(cfg, cell))?;
        *spec = spec.with_lambda1(fit.lambda1);
        for &t in &times {
            if cfg.mode == EstimatorMode::SelfTest {
                for (x, y) in &pairs {
                    out.push(self_test_entry(spec, dom, params, Some(t), x.clone(), y.clone())?);
                }
                continue;
            }
            // Same step as the eigenvalue fit, so both see the same grid chain.
            let mut mc = cfg.mc;
            mc.grid_steps = mc.grid_steps.max((t / fit.dt).round() as usize);
            let est = KilledKernelEstimator::new(dom, &params, t, &mc)?;
            for (x, y) in &pairs {
                let k = est.estimate(x, y)?;
                out.push(Entry {
                    params,
                    t: Some(t),
                    x: x.clone(),
                    y: y.clone(),
                    estimate: k.value,
                    std_err: k.std_err,
                });
            }
        }
    }
    Ok((out, lambdas))
}

fn green_entries(cfg: &SweepConfig, dom: &Domain<f64>, spec: &ComparatorSpec<f64>) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (cell, &m) in cfg.m_grid.iter().enumerate() {
        let params = cfg.params(m)?;
        let s = 0.5 * max_delta(dom).min(1.0);
        let floor = 0.01 * s;
        let pairs = sample_pairs(dom, cfg.pairs_per_cell, s, floor, &mut cell_rng(cfg, cell))?;
        if cfg.mode == EstimatorMode::SelfTest {
            for (x, y) in pairs {
                out.push(self_test_entry(spec, dom, params, None, x, y)?);
            }
            continue;
        }
        let est = GreenEstimator::new(dom, &params, &cfg.mc)?;
        for (x, y) in pairs {
            let g = est.estimate(&x, &y)?;
            out.push(Entry {
                params,
                t: None,
                x,
                y,
                estimate: g.value,
                std_err: g.std_err,
            });
        }
    }
    Ok(out)
}

/// Small-time exit probabilities from balls `B(x, A r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitCheckConfig {
    pub d: usize,
    pub alpha: f64,
    pub m_grid: Vec<f64>,
    pub r_grid: Vec<f64>,
    /// Ball radius multiplier `A`.
    pub a: f64,
    /// Probability bound `B`.
    pub b: f64,
    #[serde(default)]
    pub mc: MonteCarloConfig,
}

impl ExitCheckConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.m_grid.is_empty() || self.r_grid.is_empty() {
            return bad("m_grid and r_grid must not be empty");
        }
        if self.m_grid.iter().any(|&m| !(m >= 0.0)) || self.r_grid.iter().any(|&r| !(r > 0.0)) {
            return bad("masses must be >= 0 and radii > 0");
        }
        if !(self.a > 0.0) || !(self.b > 0.0 && self.b < 1.0) {
            return bad("need A > 0 and B in (0, 1)");
        }
        self.mc.validate()
    }
}

/// Smallest `γ` searched.
pub const GAMMA_FLOOR: f64 = 1e-4;
/// Largest `γ` searched.
pub const GAMMA_CEIL: f64 = 0.5;

/// Finds the largest grid `γ ∈ [1e-4, 1/2]` with
/// `P̂_x(τ_{B(x, A r)} ≤ γ r^α) ≤ B + 2 SE` in every `(m, r)` cell.
///
/// Records carry `t = γ r^α`, the comparator `B` and the cell's `P̂`.
pub fn run_exit_check(cfg: &ExitCheckConfig) -> Result<RatioReport> {
    cfg.validate()?;
    let mut cdfs = Vec::new();
    for &m in &cfg.m_grid {
        let params = ModelParams::new(cfg.d, cfg.alpha, m)?;
        for &r in &cfg.r_grid {
            let center = vec![0.0; cfg.d];
            let dom = Domain::ball(center.clone(), cfg.a * r)?;
            let scale = r.powf(cfg.alpha);
            let cdf = estimate_exit_cdf(&dom, &center, &params, GAMMA_CEIL * scale, &cfg.mc)?;
            cdfs.push((m, r, scale, cdf));
        }
    }
    // All cells share the grid of γ values t_j / r^α.
    let grid: Vec<f64> = cdfs[0].3.times.iter().map(|t| t / cdfs[0].2).collect();
    let ok = |j: usize| cdfs.iter().all(|c| c.3.prob[j] <= cfg.b + 2.0 * c.3.std_err[j]);
    let found = (0..grid.len()).rev().find(|&j| ok(j) && grid[j] >= GAMMA_FLOOR * (1.0 - 1e-12));
    let j = found.unwrap_or(0);
    let records: Vec<RatioRecord> = cdfs
        .iter()
        .map(|(m, _r, scale, cdf)| RatioRecord {
            d: cfg.d,
            alpha: cfg.alpha,
            m: *m,
            t: Some(grid[j] * scale),
            x: vec![0.0; cfg.d],
            y: vec![0.0; cfg.d],
            comparator: cfg.b,
            estimate: cdf.prob[j],
            std_err: cdf.std_err[j],
            ratio: cdf.prob[j] / cfg.b,
        })
        .collect();
    let mut summary = summarize(&records);
    summary.fitted.c = None;
    let (verdict, reason) = match found {
        Some(_) => {
            summary.fitted.gamma = Some(grid[j]);
            (Verdict::Pass, None)
        }
        None => (Verdict::Fail, Some(format!("no gamma above {GAMMA_FLOOR} keeps exit probabilities below B"))),
    };
    Ok(RatioReport {
        config: ReportConfig::ExitCheck(cfg.clone()),
        records,
        dropped: Vec::new(),
        summary,
        verdict,
        reason,
    })
}

/// Coupled comparison of `G^m_D` against `G^0_D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GreenComparisonConfig {
    pub domain: DomainSpec,
    pub d: usize,
    pub alpha: f64,
    pub m: f64,
    #[serde(default = "default_pairs")]
    pub pairs: usize,
    #[serde(default)]
    pub mc: MonteCarloConfig,
    /// Largest combined relative standard error of a retained ratio.
    pub max_rel_se: f64,
    pub c_cap: f64,
}

/// Records hold `Ĝ^m` as the estimate and `Ĝ^0` as the comparator, both
/// from the same random streams.
pub fn run_green_comparison(cfg: &GreenComparisonConfig) -> Result<RatioReport> {
    cfg.mc.validate()?;
    if !(cfg.m > 0.0) || cfg.pairs == 0 || !(cfg.c_cap >= 1.0) || !(cfg.max_rel_se > 0.0) {
        return Err(Error::InvalidConfig("need m > 0, pairs > 0, c_cap >= 1, max_rel_se > 0".into()));
    }
    let dom = cfg.domain.build()?;
    if !dom.is_bounded() || dom.dim() != cfg.d {
        return Err(Error::Incompatible("the Green comparison needs a bounded domain of dimension d".into()));
    }
    let pm = ModelParams::new(cfg.d, cfg.alpha, cfg.m)?;
    let p0 = ModelParams::new(cfg.d, cfg.alpha, 0.0)?;
    let s = 0.5 * max_delta(&dom);
    let mut rng = RngStream::new(cfg.mc.seed, 2_000_000).rng();
    let pairs = sample_pairs(&dom, cfg.pairs, s, 0.01 * s, &mut rng)?;
    let gm = GreenEstimator::new(&dom, &pm, &cfg.mc)?;
    let g0 = GreenEstimator::new(&dom, &p0, &cfg.mc)?;
    let mut records = Vec::new();
    let mut dropped = Vec::new();
    for (x, y) in pairs {
        let a = gm.estimate(&x, &y)?;
        let b = g0.estimate(&x, &y)?;
        let ratio = a.value / b.value;
        let rel = (a.rel_se().powi(2) + b.rel_se().powi(2)).sqrt();
        let rec = RatioRecord {
            d: cfg.d,
            alpha: cfg.alpha,
            m: cfg.m,
            t: None,
            x,
            y,
            comparator: b.value,
            estimate: a.value,
            std_err: ratio * rel,
            ratio,
        };
        if rel < cfg.max_rel_se && ratio > 0.0 && ratio.is_finite() {
            records.push(rec);
        } else {
            dropped.push(rec);
        }
    }
    let summary = summarize(&records);
    let c = summary.fitted.c.unwrap_or(f64::INFINITY);
    let (verdict, reason) = if records.is_empty() {
        (Verdict::Fail, Some("no pair reached the standard-error target".to_string()))
    } else if !dropped.is_empty() {
        (Verdict::Fail, Some(format!("{} pairs above the standard-error target", dropped.len())))
    } else if c > cfg.c_cap {
        (Verdict::Fail, Some(format!("fitted C = {c:.4} exceeds cap {}", cfg.c_cap)))
    } else {
        (Verdict::Pass, None)
    };
    Ok(RatioReport {
        config: ReportConfig::GreenComparison(cfg.clone()),
        records,
        dropped,
        summary,
        verdict,
        reason,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(ratio: f64) -> RatioRecord {
        RatioRecord {
            d: 1,
            alpha: 1.0,
            m: 1.0,
            t: Some(1.0),
            x: vec![0.0],
            y: vec![1.0],
            comparator: 1.0,
            estimate: ratio,
            std_err: 0.0,
            ratio,
        }
    }

    #[test]
    fn band_examples() {
        assert!((fit_band(&[rec(3.0), rec(3.0)], 1.0).0 - 3.0).abs() < 1e-14);
        assert!((fit_band(&[rec(0.25)], 1.0).0 - 4.0).abs() < 1e-14);
        assert!((fit_band(&[rec(2.0), rec(0.5)], 1.0).0 - 2.0).abs() < 1e-14);
        let pi = std::f64::consts::PI;
        assert!((fit_band(&[rec(1.0 / pi), rec(1.0), rec(pi)], 1.0).0 - pi).abs() < 1e-14);
    }

    #[test]
    fn strata_split() {
        let s: Vec<Stratum> = (0..10).map(|i| stratum_of(i, 10)).collect();
        assert_eq!(s.iter().filter(|&&x| x == Stratum::Interior).count(), 4);
        assert_eq!(s.iter().filter(|&&x| x == Stratum::OneNear).count(), 3);
        assert_eq!(s.iter().filter(|&&x| x == Stratum::BothNear).count(), 3);
    }

    #[test]
    fn every_tag_has_an_estimator() {
        for t in TheoremTag::ALL {
            let _ = estimator_for(t);
        }
    }

    #[test]
    fn self_test_sweep_passes_with_unit_ratios() {
        let mut cfg = SweepConfig::new(
            TheoremTag::Thm11SmallTime,
            DomainSpec::IntervalUnion {
                intervals: vec![[0.0, 2.0]],
            },
            1,
            1.0,
        );
        cfg.m_grid = vec![0.1, 1.0];
        cfg.t_grid = vec![0.05, 0.2];
        cfg.mode = EstimatorMode::SelfTest;
        let rep = run_sweep(&cfg).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.records.len(), 40);
        assert!(rep.records.iter().all(|r| r.ratio == 1.0));
    }

    #[test]
    fn free_kernel_sweep_cauchy_ratio() {
        let mut cfg = SweepConfig::new(TheoremTag::FreeKernel, DomainSpec::FullSpace { d: 1 }, 1, 1.0);
        cfg.m_grid = vec![0.0];
        cfg.t_grid = vec![1.0];
        cfg.r_grid = vec![0.0];
        let rep = run_sweep(&cfg).unwrap();
        assert!((rep.records[0].ratio - 1.0 / std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn incompatible_pairs_are_rejected() {
        let mut cfg = SweepConfig::new(TheoremTag::VAlpha, DomainSpec::HalfSpace { d: 2, a: 0.0 }, 2, 1.0);
        cfg.mode = EstimatorMode::SelfTest;
        assert!(matches!(run_sweep(&cfg), Err(Error::Incompatible(_))));
        let mut cfg = SweepConfig::new(TheoremTag::HalfspaceD1, DomainSpec::HalfSpace { d: 1, a: 0.0 }, 1, 1.0);
        cfg.m_grid = vec![0.0];
        assert!(run_sweep(&cfg).is_err());
    }

    #[test]
    fn sampled_points_respect_ranges() {
        let dom = Domain::ball(vec![0.0, 0.0], 1.0).unwrap();
        let mut rng = RngStream::new(1, 1).rng();
        for _ in 0..20 {
            let x = sample_point_with_delta(&dom, 0.01, 0.02, &mut rng).unwrap();
            let d = dom.delta(&x);
            assert!((0.01..=0.02).contains(&d));
        }
    }
}
