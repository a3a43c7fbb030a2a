//! Monte Carlo estimators for killed heat kernels, survival probabilities,
//! exit-time distributions, Green functions and the principal eigenvalue.
//!
//! Every estimator splits its samples into a fixed number of batches, each
//! driven by its own random stream, and reduces them in batch order. Results
//! therefore do not depend on the number of worker threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::Domain;
use crate::error::{Error, Result};
use crate::freekernel::free_kernel_radial;
use crate::quad::{self, QuadratureConfig};
use crate::rng::RngStream;
use crate::scalar;
use crate::simulate::sample_increment_into;
use crate::specialfns::ModelParams;
use crate::stats;
use crate::table::RadialTable;

const TAG_KERNEL: u64 = 1;
const TAG_SURVIVAL: u64 = 2;
const TAG_LAMBDA: u64 = 3;
const TAG_GREEN: u64 = 4;
const TAG_EXIT: u64 = 5;

/// Sample sizes, grids and seed for one estimator call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub n_samples: usize,
    pub grid_steps: usize,
    pub seed: u64,
    pub batches: usize,
    /// Expected number of steps per path proposed from the target point in
    /// the killed-kernel estimator; 0 gives the plain estimator.
    pub importance: f64,
    pub table_nodes: usize,
    /// Time horizon of Green-function paths; chosen from the domain when unset.
    pub horizon_cap: Option<f64>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            n_samples: 100_000,
            grid_steps: 32,
            seed: 0,
            batches: 64,
            importance: 1.0,
            table_nodes: 400,
            horizon_cap: None,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.batches < 1 || self.n_samples < self.batches {
            return bad("need 1 <= batches <= n_samples");
        }
        if self.grid_steps < 1 {
            return bad("grid_steps must be at least 1");
        }
        if !(self.importance >= 0.0) || !self.importance.is_finite() {
            return bad("importance must be finite and >= 0");
        }
        if self.grid_steps > 1 && self.importance / (self.grid_steps - 1) as f64 > 0.5 {
            return bad("importance per step must not exceed 0.5");
        }
        if self.table_nodes < 16 {
            return bad("table_nodes must be at least 16");
        }
        if let Some(c) = self.horizon_cap {
            if !(c > 0.0) || !c.is_finite() {
                return bad("horizon_cap must be positive");
            }
        }
        Ok(())
    }

    pub fn with_samples(mut self, n: usize) -> Self {
        self.n_samples = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_grid_steps(mut self, steps: usize) -> Self {
        self.grid_steps = steps;
        self
    }

    pub fn with_importance(mut self, kappa: f64) -> Self {
        self.importance = kappa;
        self
    }
}

/// A Monte Carlo kernel or probability estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
    /// Length of the final time step.
    pub bandwidth: f64,
    pub grid_steps: usize,
}

impl KernelEstimate {
    pub fn rel_se(&self) -> f64 {
        if self.value > 0.0 {
            self.std_err / self.value
        } else {
            f64::INFINITY
        }
    }
}

/// A Monte Carlo Green-function estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEstimate {
    pub value: f64,
    pub std_err: f64,
    pub n_samples: usize,
    /// Length of the time step.
    pub bandwidth: f64,
    pub time_horizon_cap: f64,
}

impl GreenEstimate {
    pub fn rel_se(&self) -> f64 {
        if self.value > 0.0 {
            self.std_err / self.value
        } else {
            f64::INFINITY
        }
    }
}

/// Fitted principal eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lambda1Estimate {
    pub lambda1: f64,
    pub std_err: f64,
    /// Fit window `[T, 3T]`.
    pub window: (f64, f64),
    pub survival_at_window: (f64, f64),
    pub dt: f64,
    pub n_samples: usize,
}

/// Empirical distribution function of an exit time on a geometric time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitCdf {
    pub times: Vec<f64>,
    pub prob: Vec<f64>,
    pub std_err: Vec<f64>,
    pub n_samples: usize,
}

impl ExitCdf {
    /// `P̂(τ ≤ t)` and its standard error, using the last grid time `≤ t`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        match self.times.iter().rposition(|&s| s <= t) {
            Some(i) => (self.prob[i], self.std_err[i]),
            None => (0.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.n;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let delta = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * o.n / n,
            m2: self.m2 + o.m2 + delta * delta * self.n * o.n / n,
        }
    }

    fn std_err(&self) -> f64 {
        if self.n < 2.0 {
            return f64::INFINITY;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

fn batch_sizes(n: usize, b: usize) -> Vec<usize> {
    (0..b).map(|i| n / b + usize::from(i < n % b)).collect()
}

/// Runs `f(rng, count)` for every batch in parallel and returns the results
/// in batch order.
fn run_batches<A, F>(mc: &MonteCarloConfig, tag: u64, f: F) -> Vec<A>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> A + Sync,
{
    batch_sizes(mc.n_samples, mc.batches)
        .into_par_iter()
        .enumerate()
        .map(|(b, n)| {
            let mut rng = RngStream::new(mc.seed, b as u64).substream(tag).rng();
            f(&mut rng, n)
        })
        .collect()
}

fn check_point(dom: &Domain<f64>, params: &ModelParams<f64>, x: &[f64]) -> Result<()> {
    if x.len() != params.d() || dom.dim() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            got: x.len(),
        });
    }
    if !dom.is_inside(x) {
        return Err(Error::NotInDomain);
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain {
            arg: "t",
            value: t,
            expected: "a finite t > 0",
        });
    }
    Ok(())
}

fn quad_fallback(r: Result<f64>) -> f64 {
    match r {
        Ok(v) => v,
        Err(Error::Quadrature { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

/// Largest separation the tables must cover for paths inside `dom`.
fn table_range(dom: &Domain<f64>, scale: f64) -> f64 {
    match dom.diameter() {
        Some(d) => d * 1.001,
        None => 10.0 * (1.0 + scale),
    }
}

/// `p^m(dt, r)` tabulated on `[0, r_max]`, with direct quadrature beyond.
#[derive(Debug, Clone)]
pub struct KernelTable {
    params: ModelParams<f64>,
    dt: f64,
    table: RadialTable,
}

impl KernelTable {
    pub fn new(params: &ModelParams<f64>, dt: f64, r_max: f64, nodes: usize) -> Result<Self> {
        check_time(dt)?;
        let cfg = QuadratureConfig::default();
        let scale = dt.powf(1.0 / params.alpha());
        let table = RadialTable::build(|r| free_kernel_radial(dt, r, params, &cfg), scale, r_max, nodes)?;
        Ok(Self {
            params: *params,
            dt,
            table,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.table.eval(r) {
            Some(v) => v,
            None => quad_fallback(free_kernel_radial(self.dt, r, &self.params, &QuadratureConfig::default())),
        }
    }
}

/// `∫_0^h p^m(s, r) ds` tabulated on a logarithmic grid in `r`.
#[derive(Debug, Clone)]
pub struct IntegratedKernelTable {
    params: ModelParams<f64>,
    h: f64,
    table: RadialTable,
}

fn integrated_kernel(h: f64, r: f64, params: &ModelParams<f64>) -> Result<f64> {
    let cfg = QuadratureConfig::new(1e-8, 1e-300, 400)?;
    let inner = QuadratureConfig::new(1e-10, 1e-300, 500)?;
    let ra = r.powf(params.alpha());
    let marks = [0.1 * ra, ra, 10.0 * ra];
    let pts = quad::breakpoints(0.0, h, &marks);
    let f = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        quad_fallback(free_kernel_radial(s, r, params, &inner))
    };
    Ok(quad::integrate_points(f, &pts, &cfg)?.value)
}

impl IntegratedKernelTable {
    pub fn new(params: &ModelParams<f64>, h: f64, r_max: f64, nodes: usize) -> Result<Self> {
        check_time(h)?;
        let r_min = 1e-4 * h.powf(1.0 / params.alpha());
        let table = RadialTable::build_range(|r| integrated_kernel(h, r, params), r_min, r_min, r_max, nodes)?;
        Ok(Self {
            params: *params,
            h,
            table,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self.table.eval(r) {
            Some(v) => v,
            None => quad_fallback(integrated_kernel(self.h, r, &self.params)),
        }
    }
}

/// Killed-kernel estimator for a fixed `(D, m, t)`, reusable across point pairs.
///
/// Paths of the grid chain are run to `t - dt` and the free kernel over the
/// last step is averaged over survivors. Intermediate steps are proposed
/// from the defensive mixture `(1-η) p(dt, · - u) + η p(dt, · - y)` with
/// `η = importance / (grid_steps - 1)` and reweighted, which keeps the
/// estimator exact for the grid-killed chain.
#[derive(Debug, Clone)]
pub struct KilledKernelEstimator<'a> {
    dom: &'a Domain<f64>,
    params: ModelParams<f64>,
    t: f64,
    mc: MonteCarloConfig,
    table: KernelTable,
}

impl<'a> KilledKernelEstimator<'a> {
    pub fn new(dom: &'a Domain<f64>, params: &ModelParams<f64>, t: f64, mc: &MonteCarloConfig) -> Result<Self> {
        check_time(t)?;
        mc.validate()?;
        if dom.dim() != params.d() {
            return Err(Error::DimensionMismatch {
                expected: params.d(),
                got: dom.dim(),
            });
        }
        let dt = t / mc.grid_steps as f64;
        let scale = dt.powf(1.0 / params.alpha());
        let table = KernelTable::new(params, dt, table_range(dom, scale), mc.table_nodes)?;
        Ok(Self {
            dom,
            params: *params,
            t,
            mc: *mc,
            table,
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn estimate(&self, x: &[f64], y: &[f64]) -> Result<KernelEstimate> {
        check_point(self.dom, &self.params, x)?;
        check_point(self.dom, &self.params, y)?;
        let n = self.mc.grid_steps;
        let dt = self.table.dt();
        let eta = if n > 1 {
            self.mc.importance / (n - 1) as f64
        } else {
            0.0
        };
        let d = self.params.d();
        let moments = run_batches(&self.mc, TAG_KERNEL, |rng, count| {
            let mut acc = Moments::default();
            let mut u = vec![0.0; d];
            let mut v = vec![0.0; d];
            let mut w = vec![0.0; d];
            for _ in 0..count {
                u.copy_from_slice(x);
                let mut weight = 1.0;
                let mut alive = true;
                for _ in 1..n {
                    sample_increment_into(dt, &self.params, rng, &mut w);
                    let from_target = eta > 0.0 && rng.random::<f64>() < eta;
                    let base = if from_target { y } else { &u[..] };
                    for i in 0..d {
                        v[i] = base[i] + w[i];
                    }
                    if !self.dom.is_inside(&v) {
                        alive = false;
                        break;
                    }
                    if eta > 0.0 {
                        let pu = self.table.eval(scalar::dist(&v, &u));
                        let py = self.table.eval(scalar::dist(&v, y));
                        let q = (1.0 - eta) * pu + eta * py;
                        if q > 0.0 {
                            weight *= pu / q;
                        }
                    }
                    std::mem::swap(&mut u, &mut v);
                }
                acc.push(if alive {
                    weight * self.table.eval(scalar::dist(&u, y))
                } else {
                    0.0
                });
            }
            acc
        });
        let total = moments.into_iter().fold(Moments::default(), Moments::merge);
        Ok(KernelEstimate {
            value: total.mean,
            std_err: total.std_err(),
            n_samples: self.mc.n_samples,
            bandwidth: dt,
            grid_steps: n,
        })
    }
}

/// `p^m_D(t, x, y)` for the grid-killed chain; see [`KilledKernelEstimator`].
pub fn estimate_killed_kernel(
    dom: &Domain<f64>,
    t: f64,
    x: &[f64],
    y: &[f64],
    params: &ModelParams<f64>,
    mc: &MonteCarloConfig,
) -> Result<KernelEstimate> {
    check_point(dom, params, x)?;
    check_point(dom, params, y)?;
    KilledKernelEstimator::new(dom, params, t, mc)?.estimate(x, y)
}

/// Doubles `grid_steps` until two successive killed-kernel estimates differ
/// by less than two combined standard errors, at most `max_doublings` times.
/// Returns the finest estimate computed.
pub fn estimate_killed_kernel_refined(
    dom: &Domain<f64>,
    t: f64,
    x: &[f64],
    y: &[f64],
    params: &ModelParams<f64>,
    mc: &MonteCarloConfig,
    max_doublings: usize,
) -> Result<KernelEstimate> {
    let mut cfg = *mc;
    let mut prev = estimate_killed_kernel(dom, t, x, y, params, &cfg)?;
    for _ in 0..max_doublings {
        cfg.grid_steps *= 2;
        let next = estimate_killed_kernel(dom, t, x, y, params, &cfg)?;
        let se = (prev.std_err.powi(2) + next.std_err.powi(2)).sqrt();
        let settled = (next.value - prev.value).abs() < 2.0 * se;
        prev = next;
        if settled {
            break;
        }
    }
    Ok(prev)
}

/// Grid step index of the first exit for each path, `max_steps + 1` when
/// the path survives all steps.
fn death_steps(
    dom: &Domain<f64>,
    x: &[f64],
    params: &ModelParams<f64>,
    dt: f64,
    max_steps: usize,
    mc: &MonteCarloConfig,
    tag: u64,
) -> Vec<Vec<u32>> {
    let d = params.d();
    run_batches(mc, tag, |rng, count| {
        let mut u = vec![0.0; d];
        let mut w = vec![0.0; d];
        (0..count)
            .map(|_| {
                u.copy_from_slice(x);
                for k in 1..=max_steps {
                    sample_increment_into(dt, params, rng, &mut w);
                    u.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
                    if !dom.is_inside(&u) {
                        return k as u32;
                    }
                }
                (max_steps + 1) as u32
            })
            .collect()
    })
}

/// `P_x(τ_D > t)` for the grid-killed chain with binomial standard error.
pub fn estimate_survival(
    dom: &Domain<f64>,
    t: f64,
    x: &[f64],
    params: &ModelParams<f64>,
    mc: &MonteCarloConfig,
) -> Result<KernelEstimate> {
    check_time(t)?;
    mc.validate()?;
    check_point(dom, params, x)?;
    let n = mc.grid_steps;
    let dt = t / n as f64;
    let deaths = death_steps(dom, x, params, dt, n, mc, TAG_SURVIVAL);
    let alive = deaths.iter().flatten().filter(|&&k| k as usize > n).count();
    let total = mc.n_samples as f64;
    let p = alive as f64 / total;
    Ok(KernelEstimate {
        value: p,
        std_err: (p * (1.0 - p) / total).sqrt(),
        n_samples: mc.n_samples,
        bandwidth: dt,
        grid_steps: n,
    })
}

/// Survival counts `#{paths alive after step k}` for `k = 0..=max_steps`.
fn alive_counts(batches: &[Vec<u32>], skip: Option<usize>, max_steps: usize) -> Vec<f64> {
    let mut hist = vec![0.0; max_steps + 2];
    for (b, deaths) in batches.iter().enumerate() {
        if Some(b) == skip {
            continue;
        }
        for &k in deaths {
            hist[k as usize] += 1.0;
        }
    }
    // alive after k = paths dying at steps > k.
    let mut alive = vec![0.0; max_steps + 1];
    let mut acc = hist[max_steps + 1];
    for k in (0..=max_steps).rev() {
        alive[k] = acc;
        acc += hist[k];
    }
    alive
}

fn fit_log_survival(alive: &[f64], total: f64, dt: f64, window: (usize, usize)) -> f64 {
    let (lo, hi) = window;
    let xs: Vec<f64> = (lo..=hi).map(|k| k as f64 * dt).collect();
    let ys: Vec<f64> = (lo..=hi).map(|k| (alive[k] / total).ln()).collect();
    -stats::ols_slope(&xs, &ys).0
}

/// Principal eigenvalue from the decay of `ln P_x(τ_D > t)` over `[T, 3T]`,
/// where `T` is the first grid time with survival at most 0.2 and `x` is a
/// deepest point of `D`. The standard error is a jackknife over batches.
pub fn estimate_lambda1(dom: &Domain<f64>, params: &ModelParams<f64>, mc: &MonteCarloConfig) -> Result<Lambda1Estimate> {
    mc.validate()?;
    let x = dom
        .deepest_point()
        .ok_or_else(|| Error::Incompatible("the principal eigenvalue needs a bounded domain".into()))?;
    if x.len() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            got: x.len(),
        });
    }
    let reach = dom.delta(&x);
    let dt = reach.powf(params.alpha()) / mc.grid_steps as f64;
    let max_steps = 60 * mc.grid_steps;
    let batches = death_steps(dom, &x, params, dt, max_steps, mc, TAG_LAMBDA);
    let total = mc.n_samples as f64;
    let alive = alive_counts(&batches, None, max_steps);
    let start = (1..=max_steps)
        .find(|&k| alive[k] / total <= 0.2)
        .ok_or_else(|| Error::InsufficientData("survival never fell to 0.2".into()))?;
    let end = 3 * start.max(1);
    if end > max_steps || alive[end] < 30.0 {
        return Err(Error::InsufficientData(format!(
            "too few survivors at 3T = {} to fit the decay",
            end as f64 * dt
        )));
    }
    let window = (start, end);
    let lambda1 = fit_log_survival(&alive, total, dt, window);
    let b = batches.len();
    let jack: Vec<f64> = (0..b)
        .map(|skip| {
            let a = alive_counts(&batches, Some(skip), max_steps);
            let n = total - batches[skip].len() as f64;
            fit_log_survival(&a, n, dt, window)
        })
        .collect();
    let mean = jack.iter().sum::<f64>() / b as f64;
    let var = jack.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() * (b as f64 - 1.0) / b as f64;
    Ok(Lambda1Estimate {
        lambda1,
        std_err: var.sqrt(),
        window: (start as f64 * dt, end as f64 * dt),
        survival_at_window: (alive[start] / total, alive[end] / total),
        dt,
        n_samples: mc.n_samples,
    })
}

/// Green-function estimator for a fixed `(D, m)`, reusable across point pairs.
///
/// Paths of the grid chain with step `h` run until they leave `D`; each
/// grid position `X_{kh}` alive contributes `∫_0^h p^m(s, X_{kh} - y) ds`
/// from a table. Paths still alive at the horizon cap are extended by a
/// geometric tail fitted to the late survival ratio.
#[derive(Debug, Clone)]
pub struct GreenEstimator<'a> {
    dom: &'a Domain<f64>,
    params: ModelParams<f64>,
    mc: MonteCarloConfig,
    steps: usize,
    table: IntegratedKernelTable,
}

impl<'a> GreenEstimator<'a> {
    pub fn new(dom: &'a Domain<f64>, params: &ModelParams<f64>, mc: &MonteCarloConfig) -> Result<Self> {
        mc.validate()?;
        if dom.dim() != params.d() {
            return Err(Error::DimensionMismatch {
                expected: params.d(),
                got: dom.dim(),
            });
        }
        if !dom.is_bounded() && params.m() == 0.0 && params.d() <= 2 {
            return Err(Error::NonIntegrable("unbounded domain with m = 0 in dimension d <= 2"));
        }
        let a = params.alpha();
        let reach = match dom.deepest_point() {
            Some(c) => dom.delta(&c),
            None => 1.0,
        };
        let h = reach.powf(a) / mc.grid_steps as f64;
        let cap = mc.horizon_cap.unwrap_or_else(|| {
            if dom.is_bounded() {
                60.0 * reach.powf(a)
            } else if params.m() > 0.0 {
                50.0 / params.m()
            } else {
                50.0
            }
        });
        let steps = ((cap / h).ceil() as usize).max(10);
        let scale = h.powf(1.0 / a);
        let table = IntegratedKernelTable::new(params, h, table_range(dom, scale), mc.table_nodes)?;
        Ok(Self {
            dom,
            params: *params,
            mc: *mc,
            steps,
            table,
        })
    }

    pub fn h(&self) -> f64 {
        self.table.h()
    }

    pub fn estimate(&self, x: &[f64], y: &[f64]) -> Result<GreenEstimate> {
        check_point(self.dom, &self.params, x)?;
        check_point(self.dom, &self.params, y)?;
        if scalar::dist(x, y) == 0.0 {
            return Err(Error::Domain {
                arg: "|x - y|",
                value: 0.0,
                expected: "x != y",
            });
        }
        let (dom, params, table, steps) = (self.dom, &self.params, &self.table, self.steps);
        let h = table.h();
        let d = params.d();
        let first = table.eval(scalar::dist(x, y));
        let late = steps - steps / 10;
        let parts = run_batches(&self.mc, TAG_GREEN, |rng, count| {
            let mut acc = Moments::default();
            let mut alive_late = 0.0;
            let mut alive_end = 0.0;
            let mut last = 0.0;
            let mut u = vec![0.0; d];
            let mut w = vec![0.0; d];
            for _ in 0..count {
                u.copy_from_slice(x);
                let mut g = first;
                let mut survived = true;
                let mut contrib = 0.0;
                for k in 1..=steps {
                    sample_increment_into(h, params, rng, &mut w);
                    u.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
                    if !dom.is_inside(&u) {
                        survived = false;
                        break;
                    }
                    if k == late {
                        alive_late += 1.0;
                    }
                    contrib = table.eval(scalar::dist(&u, y));
                    g += contrib;
                }
                if survived {
                    alive_end += 1.0;
                    last += contrib;
                }
                acc.push(g);
            }
            (acc, alive_late, alive_end, last)
        });
        let mut total = Moments::default();
        let (mut a_late, mut a_end, mut last) = (0.0f64, 0.0f64, 0.0f64);
        for (m, l, e, c) in parts {
            total = total.merge(m);
            a_late += l;
            a_end += e;
            last += c;
        }
        let n = self.mc.n_samples as f64;
        let mut value = total.mean;
        if a_end > 0.0 && a_late > a_end {
            let q = (a_end / a_late).powf(1.0 / (steps - late) as f64);
            value += last / n * q / (1.0 - q);
        }
        Ok(GreenEstimate {
            value,
            std_err: total.std_err(),
            n_samples: self.mc.n_samples,
            bandwidth: h,
            time_horizon_cap: steps as f64 * h,
        })
    }
}

/// `G^m_D(x, y) = ∫_0^∞ p^m_D(t, x, y) dt` for the grid-killed chain; see
/// [`GreenEstimator`].
pub fn estimate_green(
    dom: &Domain<f64>,
    x: &[f64],
    y: &[f64],
    params: &ModelParams<f64>,
    mc: &MonteCarloConfig,
) -> Result<GreenEstimate> {
    check_point(dom, params, x)?;
    check_point(dom, params, y)?;
    GreenEstimator::new(dom, params, mc)?.estimate(x, y)
}

/// Geometric observation times `t_max · 10^{-4(1 - j/(K-1))}`, `K = 4 · grid_steps`.
pub fn geometric_times(t_max: f64, grid_steps: usize) -> Vec<f64> {
    let k = (4 * grid_steps).max(2);
    (0..k)
        .map(|j| t_max * 10f64.powf(-4.0 * (1.0 - j as f64 / (k - 1) as f64)))
        .collect()
}

/// `P_x(τ_D ≤ t)` on a geometric time grid up to `t_max`, with exits
/// detected at the grid times.
pub fn estimate_exit_cdf(
    dom: &Domain<f64>,
    x: &[f64],
    params: &ModelParams<f64>,
    t_max: f64,
    mc: &MonteCarloConfig,
) -> Result<ExitCdf> {
    check_time(t_max)?;
    mc.validate()?;
    check_point(dom, params, x)?;
    let times = geometric_times(t_max, mc.grid_steps);
    let steps: Vec<f64> = times
        .iter()
        .scan(0.0, |prev, &t| {
            let dt = t - *prev;
            *prev = t;
            Some(dt)
        })
        .collect();
    let d = params.d();
    let k = times.len();
    let hists = run_batches(mc, TAG_EXIT, |rng, count| {
        let mut hist = vec![0.0; k];
        let mut u = vec![0.0; d];
        let mut w = vec![0.0; d];
        for _ in 0..count {
            u.copy_from_slice(x);
            for (j, &dt) in steps.iter().enumerate() {
                sample_increment_into(dt, params, rng, &mut w);
                u.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
                if !dom.is_inside(&u) {
                    hist[j] += 1.0;
                    break;
                }
            }
        }
        hist
    });
    let n = mc.n_samples as f64;
    let mut cum = 0.0;
    let mut prob = Vec::with_capacity(k);
    let mut std_err = Vec::with_capacity(k);
    for j in 0..k {
        cum += hists.iter().map(|h| h[j]).sum::<f64>();
        let p = cum / n;
        prob.push(p);
        std_err.push((p * (1.0 - p) / n).sqrt());
    }
    Ok(ExitCdf {
        times,
        prob,
        std_err,
        n_samples: mc.n_samples,
    })
}
