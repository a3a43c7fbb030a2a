//! Path simulation: exact grid increments by tilted subordination, an
//! independent jump-thinning sampler, and grid-killed paths.

use rand::Rng;
use rand::distr::Open01;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::domains::Domain;
use crate::error::{Error, Result};
use crate::levy::{small_jump_variance, stable_rate_above};
use crate::quad::QuadratureConfig;
use crate::specialfns::{psi_with, ModelParams};
use crate::table::RadialTable;

/// One simulated trajectory observed on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
    pub alive: Vec<bool>,
    /// First grid index at which the path is outside the domain.
    pub exit_index: Option<usize>,
}

impl PathSample {
    pub fn endpoint(&self) -> &[f64] {
        self.positions.last().expect("non-empty path")
    }

    pub fn exit_time(&self) -> Option<f64> {
        self.exit_index.map(|i| self.times[i])
    }

    pub fn exit_position(&self) -> Option<&[f64]> {
        self.exit_index.map(|i| self.positions[i].as_slice())
    }
}

fn check_grid(horizon: f64, n_grid: usize) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain {
            arg: "horizon",
            value: horizon,
            expected: "a finite horizon > 0",
        });
    }
    if n_grid < 1 {
        return Err(Error::InvalidConfig("n_grid must be at least 1".into()));
    }
    Ok(())
}

/// Positive `β`-stable variate with `E e^{-λS} = e^{-λ^β}` (Kanter's
/// representation of the Chambers–Mallows–Stuck method).
pub fn positive_stable<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> f64 {
    let u01: f64 = Open01.sample(rng);
    let u = std::f64::consts::PI * u01;
    let e: f64 = Exp1.sample(rng);
    let a = ((beta * u).sin() / u.sin()).powf(1.0 / (1.0 - beta)) * ((1.0 - beta) * u).sin() / (beta * u).sin();
    (a / e).powf((1.0 - beta) / beta)
}

/// Increment of the tilted subordinator over `dt`, with the number of
/// proposals used by the rejection step.
pub fn sample_subordinator_increment_counted<R: Rng + ?Sized>(
    dt: f64,
    params: &ModelParams<f64>,
    rng: &mut R,
) -> (f64, u64) {
    let beta = params.alpha() / 2.0;
    let scale = dt.powf(1.0 / beta);
    let tilt = params.tilt();
    let mut tries = 0u64;
    loop {
        tries += 1;
        let raw = scale * positive_stable(beta, rng);
        if tilt == 0.0 {
            return (raw, tries);
        }
        let u: f64 = Open01.sample(rng);
        if u < (-tilt * raw).exp() {
            return (raw, tries);
        }
    }
}

/// Draw with `E e^{-λS} = exp(-dt((λ + m^{2/α})^{α/2} - m))`.
pub fn sample_subordinator_increment<R: Rng + ?Sized>(dt: f64, params: &ModelParams<f64>, rng: &mut R) -> f64 {
    sample_subordinator_increment_counted(dt, params, rng).0
}

/// Writes an increment of `X^m` over `dt` into `out` (length `d`).
pub fn sample_increment_into<R: Rng + ?Sized>(dt: f64, params: &ModelParams<f64>, rng: &mut R, out: &mut [f64]) {
    let s = sample_subordinator_increment(dt, params, rng);
    let sd = (2.0 * s).sqrt();
    for v in out.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = sd * z;
    }
}

pub fn sample_increment<R: Rng + ?Sized>(dt: f64, params: &ModelParams<f64>, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; params.d()];
    sample_increment_into(dt, params, rng, &mut out);
    out
}

fn uniform_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut n2 = 0.0;
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v = z;
            n2 += z * z;
        }
        if n2 > 1e-300 {
            let n = n2.sqrt();
            out.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    rand_distr::Poisson::new(mean)
        .map(|p| p.sample(rng) as u64)
        .unwrap_or(0)
}

/// Counts of jumps above the cut that were kept and deleted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct JumpCounts {
    pub kept: u64,
    pub deleted: u64,
}

/// Realizes `X^m` from the symmetric stable process by deleting each stable
/// jump of size `ρ > cut` with probability `1 - ψ(m^{1/α} ρ)`.
///
/// Jumps below the cut are replaced by a centered Gaussian with the variance
/// of the retained small jumps.
#[derive(Debug, Clone)]
pub struct ThinningSampler {
    params: ModelParams<f64>,
    cut: f64,
    small_sd: f64,
    big_rate: f64,
    retention: Option<RadialTable>,
}

impl ThinningSampler {
    pub fn new(params: &ModelParams<f64>, jump_cut: f64) -> Result<Self> {
        if !(jump_cut > 0.0) || !jump_cut.is_finite() {
            return Err(Error::Domain {
                arg: "jump_cut",
                value: jump_cut,
                expected: "a finite jump_cut > 0",
            });
        }
        let cfg = QuadratureConfig::default();
        let retention = if params.m() > 0.0 {
            Some(RadialTable::build(|u| psi_with(u, params, &cfg), 1.0, 600.0, 1500)?)
        } else {
            None
        };
        Ok(Self {
            params: *params,
            cut: jump_cut,
            small_sd: small_jump_variance(jump_cut, params, &cfg)?.sqrt(),
            big_rate: stable_rate_above(jump_cut, params),
            retention,
        })
    }

    pub fn params(&self) -> &ModelParams<f64> {
        &self.params
    }

    /// Stable jumps above the cut per unit time.
    pub fn big_jump_rate(&self) -> f64 {
        self.big_rate
    }

    fn retain_probability(&self, rho: f64) -> f64 {
        match &self.retention {
            None => 1.0,
            Some(t) => t.eval(self.params.m_scale() * rho).unwrap_or(0.0),
        }
    }

    /// Adds one increment over `dt` to `out`, returning the jump counts.
    pub fn add_increment<R: Rng + ?Sized>(&self, dt: f64, rng: &mut R, out: &mut [f64]) -> JumpCounts {
        let mut counts = JumpCounts::default();
        if self.retention.is_none() {
            let mut w = vec![0.0; out.len()];
            sample_increment_into(dt, &self.params, rng, &mut w);
            out.iter_mut().zip(&w).for_each(|(o, v)| *o += v);
            return counts;
        }
        let sd = self.small_sd * dt.sqrt();
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *v += sd * z;
        }
        let n = poisson(self.big_rate * dt, rng);
        let inv_alpha = 1.0 / self.params.alpha();
        let mut dir = vec![0.0; out.len()];
        for _ in 0..n {
            let u: f64 = Open01.sample(rng);
            let rho = self.cut * u.powf(-inv_alpha);
            uniform_direction(rng, &mut dir);
            let keep: f64 = rng.random();
            if keep < self.retain_probability(rho) {
                counts.kept += 1;
                out.iter_mut().zip(&dir).for_each(|(o, e)| *o += rho * e);
            } else {
                counts.deleted += 1;
            }
        }
        counts
    }

    /// Path on `n_grid` equal steps over `[0, horizon]` started at the origin.
    pub fn sample_path<R: Rng + ?Sized>(&self, horizon: f64, n_grid: usize, rng: &mut R) -> Result<PathSample> {
        check_grid(horizon, n_grid)?;
        let d = self.params.d();
        let dt = horizon / n_grid as f64;
        let mut x = vec![0.0; d];
        let mut path = PathSample {
            times: vec![0.0],
            positions: vec![x.clone()],
            alive: vec![true],
            exit_index: None,
        };
        for k in 1..=n_grid {
            self.add_increment(dt, rng, &mut x);
            path.times.push(dt * k as f64);
            path.positions.push(x.clone());
            path.alive.push(true);
        }
        Ok(path)
    }
}

/// Thinned path of `X^m` from the origin; see [`ThinningSampler`].
pub fn sample_path_thinned<R: Rng + ?Sized>(
    horizon: f64,
    n_grid: usize,
    params: &ModelParams<f64>,
    jump_cut: f64,
    rng: &mut R,
) -> Result<PathSample> {
    ThinningSampler::new(params, jump_cut)?.sample_path(horizon, n_grid, rng)
}

/// Grid path of `X^m` from `start`, killed at the first grid time outside `dom`.
///
/// After the exit the position is frozen at the exit position.
pub fn sample_killed_path<R: Rng + ?Sized>(
    dom: &Domain<f64>,
    horizon: f64,
    n_grid: usize,
    start: &[f64],
    params: &ModelParams<f64>,
    rng: &mut R,
) -> Result<PathSample> {
    check_grid(horizon, n_grid)?;
    if start.len() != params.d() || dom.dim() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            got: start.len(),
        });
    }
    if !dom.is_inside(start) {
        return Err(Error::NotInDomain);
    }
    let dt = horizon / n_grid as f64;
    let mut x = start.to_vec();
    let mut w = vec![0.0; start.len()];
    let mut path = PathSample {
        times: Vec::with_capacity(n_grid + 1),
        positions: Vec::with_capacity(n_grid + 1),
        alive: Vec::with_capacity(n_grid + 1),
        exit_index: None,
    };
    path.times.push(0.0);
    path.positions.push(x.clone());
    path.alive.push(true);
    let mut alive = true;
    for k in 1..=n_grid {
        if alive {
            sample_increment_into(dt, params, rng, &mut w);
            x.iter_mut().zip(&w).for_each(|(a, b)| *a += b);
            if !dom.is_inside(&x) {
                alive = false;
                path.exit_index = Some(k);
            }
        }
        path.times.push(dt * k as f64);
        path.positions.push(x.clone());
        path.alive.push(alive);
    }
    Ok(path)
}
