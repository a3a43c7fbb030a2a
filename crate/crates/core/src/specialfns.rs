//! Scalar special functions of the relativistic stable model: the jump
//! profile `ψ`, the tail shape `φ`, the small-jump gauges `ξ` and `σ`, and
//! the stable normalizing constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureConfig};
use crate::scalar::{self, Real};

/// Dimension, stability index and mass of a relativistic stable process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<T>", into = "RawParams<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct ModelParams<T> {
    d: usize,
    alpha: T,
    m: T,
    m_scale: T,
    tilt: T,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams<T> {
    d: usize,
    alpha: T,
    m: T,
}

impl<T: Real> TryFrom<RawParams<T>> for ModelParams<T> {
    type Error = Error;
    fn try_from(raw: RawParams<T>) -> Result<Self> {
        Self::new(raw.d, raw.alpha, raw.m)
    }
}

impl<T: Real> From<ModelParams<T>> for RawParams<T> {
    fn from(p: ModelParams<T>) -> Self {
        RawParams {
            d: p.d,
            alpha: p.alpha,
            m: p.m,
        }
    }
}

impl<T: Real> ModelParams<T> {
    pub fn new(d: usize, alpha: T, m: T) -> Result<Self> {
        if d < 1 {
            return Err(Error::InvalidParams {
                key: "d",
                value: d as f64,
                expected: "an integer d >= 1",
            });
        }
        if !(alpha > T::zero() && alpha < T::lit(2.0)) {
            return Err(Error::InvalidParams {
                key: "alpha",
                value: alpha.as_f64(),
                expected: "alpha in the open interval (0, 2)",
            });
        }
        if !(m >= T::zero()) || !m.is_finite() {
            return Err(Error::InvalidParams {
                key: "m",
                value: m.as_f64(),
                expected: "a finite m >= 0",
            });
        }
        let m_scale = if m == T::zero() {
            T::zero()
        } else {
            m.powf(T::one() / alpha)
        };
        let tilt = m_scale * m_scale;
        if !m_scale.is_finite() || !tilt.is_finite() {
            return Err(Error::InvalidParams {
                key: "m",
                value: m.as_f64(),
                expected: "m with finite m^(1/alpha) and m^(2/alpha)",
            });
        }
        Ok(Self {
            d,
            alpha,
            m,
            m_scale,
            tilt,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn m(&self) -> T {
        self.m
    }

    /// `m^{1/α}`, the inverse length scale of the exponential tempering.
    pub fn m_scale(&self) -> T {
        self.m_scale
    }

    /// `m^{2/α}`, the exponential tilt applied to the subordinator.
    pub fn tilt(&self) -> T {
        self.tilt
    }

    pub fn dim(&self) -> T {
        T::count(self.d)
    }

    /// Same `(d, α)` with a different mass.
    pub fn with_mass(&self, m: T) -> Result<Self> {
        Self::new(self.d, self.alpha, m)
    }

    pub fn regime(&self) -> SmallJumpRegime {
        SmallJumpRegime::of(self.d, self.alpha)
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams::new(self.d, U::lit(self.alpha.as_f64()), U::lit(self.m.as_f64()))
            .expect("validated parameters remain valid")
    }
}

/// Which of the three definitional branches `ξ` and `σ` use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmallJumpRegime {
    /// `d + α > 2`.
    Smooth,
    /// `d = 1 > α`.
    Subcritical,
    /// `d = 1 = α`.
    Critical,
}

impl SmallJumpRegime {
    /// Selection uses exact comparisons on `α`.
    pub fn of<T: Real>(d: usize, alpha: T) -> Self {
        if d == 1 && alpha == T::one() {
            SmallJumpRegime::Critical
        } else if d == 1 && alpha < T::one() {
            SmallJumpRegime::Subcritical
        } else {
            SmallJumpRegime::Smooth
        }
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<T: Real>(x: T) -> T {
    if !(x > T::zero()) {
        return T::nan();
    }
    if x < T::lit(0.5) {
        // Reflection keeps the approximation accurate near 0.
        let pi = T::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(T::one() - x);
    }
    let x = x - T::one();
    let mut a = T::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a = a + T::lit(c) / (x + T::count(i));
    }
    let t = x + T::lit(LANCZOS_G + 0.5);
    T::lit(0.5) * (T::lit(2.0) * T::PI()).ln() + (x + T::lit(0.5)) * t.ln() - t + a.ln()
}

pub fn gamma<T: Real>(x: T) -> T {
    ln_gamma(x).exp()
}

/// Surface area of the unit sphere in `R^d`, `2 π^{d/2} / Γ(d/2)`.
pub fn unit_sphere_area<T: Real>(d: usize) -> T {
    let half_d = T::count(d) / T::lit(2.0);
    T::lit(2.0) * T::PI().powf(half_d) / gamma(half_d)
}

/// Index `(d + α) / 2` of the Gamma density behind `ψ`.
fn psi_index<T: Real>(params: &ModelParams<T>) -> T {
    (params.dim() + params.alpha()) / T::lit(2.0)
}

/// `ψ(r)` with the default quadrature configuration.
pub fn psi<T: Real>(r: T, params: &ModelParams<T>) -> Result<T> {
    psi_with(r, params, &QuadratureConfig::default())
}

/// `ψ(r) = 2^{-(d+α)} Γ((d+α)/2)^{-1} ∫_0^∞ s^{(d+α)/2-1} e^{-s/4 - r²/s} ds`.
///
/// Evaluated after `s = 4v` with the factor `e^{-r}` pulled out, so the
/// remaining integrand peaks at 1.
pub fn psi_with<T: Real>(r: T, params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    if !(r >= T::zero()) {
        return Err(Error::Domain {
            arg: "r",
            value: r.as_f64(),
            expected: "r >= 0",
        });
    }
    if r == T::zero() {
        return Ok(T::one());
    }
    let k = psi_index(params);
    let two = T::lit(2.0);
    let half_r = r / two;
    let exponent = |v: T| {
        let sv = v.sqrt();
        let e = sv - half_r / sv;
        -(e * e)
    };
    let split = scalar::max(T::one(), half_r);
    let inv_k = T::one() / k;
    let head = |w: T| {
        if w <= T::zero() {
            return T::zero();
        }
        exponent(w.powf(inv_k)).exp() * inv_k
    };
    let upper = split.powf(k);
    let head_pts = quad::breakpoints(
        T::zero(),
        upper,
        &[half_r.powf(k), (r * r / T::lit(4.0)).powf(k)],
    );
    let head_val = quad::integrate_points(head, &head_pts, cfg)?;
    let width = T::lit(4.0) * scalar::max(T::one(), r.sqrt());
    let tail = |v: T| v.powf(k - T::one()) * exponent(v).exp();
    let tail_val = quad::integrate_to_infinity(tail, &[split, split + width], cfg)?;
    let scaled = head_val.value + tail_val.value;
    // Quadrature noise can push the value a hair above its bound.
    Ok(scalar::min(T::one(), ((-r) - ln_gamma(k)).exp() * scaled))
}

/// `1 - ψ(r)` without cancellation for small `r`.
pub fn one_minus_psi<T: Real>(r: T, params: &ModelParams<T>) -> Result<T> {
    one_minus_psi_with(r, params, &QuadratureConfig::default())
}

pub fn one_minus_psi_with<T: Real>(r: T, params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    if !(r >= T::zero()) {
        return Err(Error::Domain {
            arg: "r",
            value: r.as_f64(),
            expected: "r >= 0",
        });
    }
    if r == T::zero() {
        return Ok(T::zero());
    }
    if r >= T::one() {
        return Ok(T::one() - psi_with(r, params, cfg)?);
    }
    let k = psi_index(params);
    let inv_k = T::one() / k;
    let b = r * r / T::lit(4.0);
    // 1 - ψ(r) = Γ(k)^{-1} ∫ v^{k-1} e^{-v} (1 - e^{-b/v}) dv, integrated
    // relative to b so that the absolute tolerance stays meaningful.
    let removed = |v: T| -(-(b / v)).exp_m1() / b;
    let head = |w: T| {
        if w <= T::zero() {
            return T::zero();
        }
        let v = w.powf(inv_k);
        (-v).exp() * removed(v) * inv_k
    };
    let head_pts = quad::breakpoints(T::zero(), T::one(), &[b.powf(k)]);
    let head_val = quad::integrate_points(head, &head_pts, cfg)?;
    let tail = |v: T| v.powf(k - T::one()) * (-v).exp() * removed(v);
    let tail_val = quad::integrate_to_infinity(tail, &[T::one(), T::lit(5.0)], cfg)?;
    Ok(b * (head_val.value + tail_val.value) / gamma(k))
}

/// `φ(r) = e^{-r} (1 + r^{(d+α-1)/2})`.
pub fn phi<T: Real>(r: T, params: &ModelParams<T>) -> T {
    let p = (params.dim() + params.alpha() - T::one()) / T::lit(2.0);
    (-r).exp() * (T::one() + r.powf(p))
}

/// Small-jump gauge `ξ(r)` controlling `1 - ψ(r)` near 0.
pub fn xi<T: Real>(r: T, params: &ModelParams<T>) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::Domain {
            arg: "r",
            value: r.as_f64(),
            expected: "r > 0",
        });
    }
    match params.regime() {
        SmallJumpRegime::Smooth => Ok(r * r),
        SmallJumpRegime::Subcritical => Ok(r.powf(T::one() + params.alpha())),
        SmallJumpRegime::Critical => {
            if r >= T::one() {
                return Err(Error::Domain {
                    arg: "r",
                    value: r.as_f64(),
                    expected: "0 < r < 1 when d = 1 = alpha",
                });
            }
            Ok(r * r * (T::one() / r).ln())
        }
    }
}

/// `σ(r)` on `(0, 1]`.
pub fn sigma<T: Real>(r: T, params: &ModelParams<T>) -> Result<T> {
    if !(r > T::zero() && r <= T::one()) {
        return Err(Error::Domain {
            arg: "r",
            value: r.as_f64(),
            expected: "0 < r <= 1",
        });
    }
    Ok(match params.regime() {
        SmallJumpRegime::Smooth => r.powf(T::lit(2.0) - params.alpha() - params.dim()),
        SmallJumpRegime::Subcritical => T::one(),
        SmallJumpRegime::Critical => (T::one() / r).ln(),
    })
}

/// `𝒜(d, -α) = α 2^{α-1} π^{-d/2} Γ((d+α)/2) / Γ(1 - α/2)`.
pub fn stable_constant<T: Real>(params: &ModelParams<T>) -> T {
    let a = params.alpha();
    let two = T::lit(2.0);
    let d = params.dim();
    let log = a.ln() + (a - T::one()) * two.ln() - d / two * T::PI().ln() + ln_gamma((d + a) / two)
        - ln_gamma(T::one() - a / two);
    log.exp()
}
