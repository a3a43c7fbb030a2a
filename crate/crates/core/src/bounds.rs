//! Closed-form comparison functions for killed heat kernels and Green
//! functions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{Domain, DomainKind};
use crate::error::{Error, Result};
use crate::freekernel::free_kernel_comparator;
use crate::scalar::{self, Real};
use crate::specialfns::{phi, ModelParams};

/// Which two-sided estimate a comparator belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremTag {
    /// Small-time killed heat kernel on a `C^{1,1}` set.
    Thm11SmallTime,
    /// Large-time killed heat kernel on a bounded set.
    Thm11LargeTime,
    /// Green function on a bounded set.
    VAlpha,
    /// Green function on a half-space-like set.
    Vtilde,
    /// Green function of the upper half-space, `d ≥ 2`.
    #[serde(rename = "halfspace_d_ge_2")]
    HalfspaceDGe2,
    /// Green function of `(0, ∞)`.
    HalfspaceD1,
    /// Free transition density on `R^d`.
    FreeKernel,
}

impl TheoremTag {
    pub const ALL: [TheoremTag; 7] = [
        TheoremTag::Thm11SmallTime,
        TheoremTag::Thm11LargeTime,
        TheoremTag::VAlpha,
        TheoremTag::Vtilde,
        TheoremTag::HalfspaceDGe2,
        TheoremTag::HalfspaceD1,
        TheoremTag::FreeKernel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TheoremTag::Thm11SmallTime => "thm11_small_time",
            TheoremTag::Thm11LargeTime => "thm11_large_time",
            TheoremTag::VAlpha => "v_alpha",
            TheoremTag::Vtilde => "vtilde",
            TheoremTag::HalfspaceDGe2 => "halfspace_d_ge_2",
            TheoremTag::HalfspaceD1 => "halfspace_d1",
            TheoremTag::FreeKernel => "free_kernel",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Green-function comparators do not depend on time.
    pub fn is_time_dependent(self) -> bool {
        matches!(
            self,
            TheoremTag::Thm11SmallTime | TheoremTag::Thm11LargeTime | TheoremTag::FreeKernel
        )
    }
}

/// A comparator together with its tuning inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparatorSpec<T> {
    pub theorem_tag: TheoremTag,
    /// Multiplier of `m^{1/α}|x - y|` inside `φ`.
    pub c2_inner: T,
    /// Principal eigenvalue for the large-time form.
    pub lambda1: Option<T>,
}

impl<T: Real> ComparatorSpec<T> {
    pub fn new(theorem_tag: TheoremTag) -> Self {
        Self {
            theorem_tag,
            c2_inner: T::one(),
            lambda1: None,
        }
    }

    pub fn with_c2_inner(mut self, c2: T) -> Self {
        self.c2_inner = c2;
        self
    }

    pub fn with_lambda1(mut self, lambda1: T) -> Self {
        self.lambda1 = Some(lambda1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c2_inner > T::zero()) || !self.c2_inner.is_finite() {
            return Err(Error::InvalidConfig("c2_inner must be positive".into()));
        }
        if self.theorem_tag == TheoremTag::Thm11LargeTime && self.lambda1.is_none() {
            return Err(Error::InvalidConfig("the large-time comparator needs lambda1".into()));
        }
        Ok(())
    }

    /// Comparator value at `(t, x, y)`; `t` is ignored by Green comparators.
    pub fn evaluate(&self, t: T, x: &[T], y: &[T], dom: &Domain<T>, params: &ModelParams<T>) -> Result<T> {
        self.validate()?;
        match self.theorem_tag {
            TheoremTag::Thm11SmallTime => q_small_time(t, x, y, dom, params, self.c2_inner),
            TheoremTag::Thm11LargeTime => q_large_time(t, x, y, dom, params, self.lambda1.unwrap_or(T::zero())),
            TheoremTag::VAlpha => v_alpha(x, y, dom, params),
            TheoremTag::Vtilde => v_tilde(x, y, dom, params),
            TheoremTag::HalfspaceDGe2 => g_halfspace_d_ge_2(x, y, params),
            TheoremTag::HalfspaceD1 => {
                check_len(x, 1)?;
                check_len(y, 1)?;
                g_halfspace_d1(x[0], y[0], params)
            }
            TheoremTag::FreeKernel => {
                check_len(x, params.d())?;
                check_len(y, params.d())?;
                free_kernel_comparator(t, scalar::dist(x, y), params)
            }
        }
    }
}

fn check_len<T>(x: &[T], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    Ok(())
}

/// `δ_D(x)` for a point that must lie in `dom` and match the model dimension.
fn delta_in<T: Real>(dom: &Domain<T>, x: &[T], params: &ModelParams<T>) -> Result<T> {
    check_len(x, params.d())?;
    if !dom.contains(x)? {
        return Err(Error::NotInDomain);
    }
    Ok(dom.delta(x))
}

fn distinct<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    let r = scalar::dist(x, y);
    if r == T::zero() {
        return Err(Error::Domain {
            arg: "|x - y|",
            value: 0.0,
            expected: "x != y",
        });
    }
    Ok(r)
}

fn check_time<T: Real>(t: T) -> Result<()> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::Domain {
            arg: "t",
            value: t.as_f64(),
            expected: "a finite t > 0",
        });
    }
    Ok(())
}

fn check_mass<T: Real>(params: &ModelParams<T>) -> Result<T> {
    let m = params.m();
    if !(m > T::zero()) {
        return Err(Error::InvalidParams {
            key: "m",
            value: m.as_f64(),
            expected: "m > 0 for this comparator",
        });
    }
    Ok(m)
}

/// Small-time heat kernel comparator
/// `(1 ∧ δ(x)^{α/2}/√t)(1 ∧ δ(y)^{α/2}/√t) · min(t^{-d/α}, t φ(c₂ m^{1/α}|x-y|)/|x-y|^{d+α})`.
pub fn q_small_time<T: Real>(
    t: T,
    x: &[T],
    y: &[T],
    dom: &Domain<T>,
    params: &ModelParams<T>,
    c2_inner: T,
) -> Result<T> {
    check_time(t)?;
    let dx = delta_in(dom, x, params)?;
    let dy = delta_in(dom, y, params)?;
    Ok(q_small_time_at(t, dx, dy, scalar::dist(x, y), params, c2_inner))
}

/// [`q_small_time`] in terms of `δ(x)`, `δ(y)` and `|x - y|`.
pub fn q_small_time_at<T: Real>(t: T, dx: T, dy: T, r: T, params: &ModelParams<T>, c2_inner: T) -> T {
    let a = params.alpha();
    let d = params.dim();
    let half = a / T::lit(2.0);
    let sq = t.sqrt();
    let bx = scalar::min(T::one(), dx.powf(half) / sq);
    let by = scalar::min(T::one(), dy.powf(half) / sq);
    let near = t.powf(-d / a);
    let core = if r == T::zero() {
        near
    } else {
        let far = t * phi(c2_inner * params.m_scale() * r, params) / r.powf(d + a);
        scalar::min(near, far)
    };
    bx * by * core
}

/// Large-time heat kernel comparator `e^{-λ₁ t} δ(x)^{α/2} δ(y)^{α/2}`.
pub fn q_large_time<T: Real>(
    t: T,
    x: &[T],
    y: &[T],
    dom: &Domain<T>,
    params: &ModelParams<T>,
    lambda1: T,
) -> Result<T> {
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::Domain {
            arg: "t",
            value: t.as_f64(),
            expected: "a finite t >= 0",
        });
    }
    if !(lambda1 > T::zero()) || !lambda1.is_finite() {
        return Err(Error::Domain {
            arg: "lambda1",
            value: lambda1.as_f64(),
            expected: "lambda1 > 0",
        });
    }
    if !dom.is_bounded() {
        return Err(Error::Incompatible("the large-time comparator needs a bounded domain".into()));
    }
    let half = params.alpha() / T::lit(2.0);
    let dx = delta_in(dom, x, params)?;
    let dy = delta_in(dom, y, params)?;
    Ok((-t * lambda1).exp() * (dx.powf(half) * dy.powf(half)))
}

/// Green function comparator on bounded sets.
pub fn v_alpha<T: Real>(x: &[T], y: &[T], dom: &Domain<T>, params: &ModelParams<T>) -> Result<T> {
    let dx = delta_in(dom, x, params)?;
    let dy = delta_in(dom, y, params)?;
    let r = distinct(x, y)?;
    Ok(v_alpha_at(dx, dy, r, params))
}

/// [`v_alpha`] in terms of `δ(x)`, `δ(y)` and `|x - y|`.
pub fn v_alpha_at<T: Real>(dx: T, dy: T, r: T, params: &ModelParams<T>) -> T {
    let a = params.alpha();
    let d = params.dim();
    let half = a / T::lit(2.0);
    let prod = dx.powf(half) * dy.powf(half);
    if d > a {
        scalar::min(T::one(), prod / r.powf(a)) * r.powf(a - d)
    } else if a == T::one() {
        (T::one() + (dx * dy).sqrt() / r).ln()
    } else {
        scalar::min((dx * dy).powf((a - T::one()) / T::lit(2.0)), prod / r)
    }
}

fn is_half_space_like<T: Real>(dom: &Domain<T>) -> bool {
    matches!(
        dom.kind(),
        DomainKind::HalfSpace { .. } | DomainKind::BumpHalfSpace { .. }
    )
}

/// Green function comparator on half-space-like sets, `m > 0`.
pub fn v_tilde<T: Real>(x: &[T], y: &[T], dom: &Domain<T>, params: &ModelParams<T>) -> Result<T> {
    if !is_half_space_like(dom) {
        return Err(Error::Incompatible("this comparator needs a half-space-like domain".into()));
    }
    check_mass(params)?;
    let dx = delta_in(dom, x, params)?;
    let dy = delta_in(dom, y, params)?;
    let r = distinct(x, y)?;
    Ok(v_tilde_at(dx, dy, r, params))
}

/// [`v_tilde`] in terms of `δ(x)`, `δ(y)` and `|x - y|`; needs `m > 0`.
pub fn v_tilde_at<T: Real>(dx: T, dy: T, r: T, params: &ModelParams<T>) -> T {
    let one = T::one();
    let two = T::lit(2.0);
    let a = params.alpha();
    let m = params.m();
    let ms = params.m_scale();
    let half = a / two;
    let c_far = m.powf((two - a) / a);
    let c_mid = m.powf((two - a) / (two * a));
    let lift = |s: T| s + s.powf(half) / c_mid;
    let lo = scalar::min(dx, dy);
    let far = r > T::lit(3.0) / ms;
    let boundary = scalar::min(one, dx * dy / (r * r)).powf(half);
    match params.d() {
        d if d >= 3 => {
            let d = T::count(d);
            if far {
                c_far * scalar::min(one, lift(dx) * lift(dy) / (r * r)) * r.powf(two - d)
            } else {
                boundary * r.powf(a - d)
            }
        }
        2 => {
            if far {
                c_far * (one + lift(dx) * lift(dy) / (r * r)).ln()
            } else {
                boundary * r.powf(a - two) + c_far * (one + ms * lo).ln()
            }
        }
        _ => {
            if a > one {
                if far {
                    (-ms * r).exp() / r.powf(one - half) * scalar::min(one / ms, lo).powf(half)
                        + c_far * lo
                        + c_mid * lo.powf(half)
                } else {
                    v_alpha_at(dx, dy, r, params) + c_far * (dx * dy).sqrt()
                }
            } else if a == one {
                // The far-branch last term is read as m^{1/2} (δ(x) ∧ δ(y))^{1/2}.
                if far {
                    (-m * r).exp() / r.sqrt() * scalar::min(one / m, lo).sqrt() + m * lo + m.sqrt() * lo.sqrt()
                } else {
                    (one + (dx * dy).sqrt() / r).ln() + m.sqrt() * (dx * dy).sqrt()
                }
            } else if far {
                (-ms * r).exp() / (m.sqrt() * r.powf(one - half)) * boundary + c_far * lo + c_mid * lo.powf(half)
            } else {
                r.powf(a - one) * boundary + c_far * lo
            }
        }
    }
}

/// Green function comparator of the half-line `(0, ∞)`, `m > 0`.
pub fn g_halfspace_d1<T: Real>(x: T, y: T, params: &ModelParams<T>) -> Result<T> {
    if params.d() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: params.d(),
        });
    }
    let m = check_mass(params)?;
    if !(x > T::zero()) || !(y > T::zero()) {
        return Err(Error::NotInDomain);
    }
    let one = T::one();
    let two = T::lit(2.0);
    let a = params.alpha();
    let ms = params.m_scale();
    let half = a / two;
    let r = (x - y).abs();
    let lo = scalar::min(x, y);
    let cap = scalar::min(one / ms, lo);
    let tail = m.powf((two - a) / a) * lo + m.powf((two - a) / (two * a)) * lo.powf(half);
    if a >= one {
        if r >= cap {
            if r == T::zero() {
                return Err(Error::Singular);
            }
            Ok((-ms * r).exp() / r.powf(one - half) * cap.powf(half) + tail)
        } else if a > one {
            Ok(cap.powf(a - one) + tail)
        } else {
            Ok((two * cap / r).ln() + tail)
        }
    } else {
        if r == T::zero() {
            return Err(Error::Singular);
        }
        let boundary = scalar::min(one, x * y / (r * r)).powf(half);
        if r >= one / ms {
            Ok((-ms * r).exp() / (m.sqrt() * r.powf(one - half)) * boundary + tail)
        } else {
            Ok(r.powf(a - one) * boundary + tail)
        }
    }
}

/// Green function comparator of the upper half-space `{x_d > 0}`, `d ≥ 2`.
pub fn g_halfspace_d_ge_2<T: Real>(x: &[T], y: &[T], params: &ModelParams<T>) -> Result<T> {
    if params.d() < 2 {
        return Err(Error::InvalidParams {
            key: "d",
            value: params.d() as f64,
            expected: "d >= 2",
        });
    }
    let dom = Domain::half_space(params.d(), T::zero())?;
    v_tilde(x, y, &dom, params)
}

/// 3G ratio `V(x,y) V(y,z) / V(x,z)` on `(0, 2)`, divided by
/// `1 + F(x,y) + F(y,z)` with `F = ln(1 + f^{1/2})` when `α = 1`.
pub fn three_g_ratio<T: Real>(x: T, y: T, z: T, alpha: T) -> Result<T> {
    let params = ModelParams::new(1, alpha, T::zero())?;
    if alpha < T::one() {
        return Err(Error::InvalidParams {
            key: "alpha",
            value: alpha.as_f64(),
            expected: "alpha >= 1 for the interval 3G check",
        });
    }
    let two = T::lit(2.0);
    let delta = |u: T| -> Result<T> {
        if u > T::zero() && u < two {
            Ok(scalar::min(u, two - u))
        } else {
            Err(Error::NotInDomain)
        }
    };
    let (dx, dy, dz) = (delta(x)?, delta(y)?, delta(z)?);
    let (rxy, ryz, rxz) = ((x - y).abs(), (y - z).abs(), (x - z).abs());
    if rxy == T::zero() || ryz == T::zero() || rxz == T::zero() {
        return Err(Error::Domain {
            arg: "triple",
            value: 0.0,
            expected: "three distinct points",
        });
    }
    let v = |a: T, b: T, r: T| v_alpha_at(a, b, r, &params);
    let ratio = v(dx, dy, rxy) * v(dy, dz, ryz) / v(dx, dz, rxz);
    if alpha == T::one() {
        // F coincides with V when α = 1.
        Ok(ratio / (T::one() + v(dx, dy, rxy) + v(dy, dz, ryz)))
    } else {
        Ok(ratio)
    }
}

/// Largest sampled 3G ratio and the triple attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeGReport {
    pub alpha: f64,
    pub n_triples: usize,
    pub supremum: f64,
    pub argmax: [f64; 3],
}

/// Samples `n` triples in `(0, 2)`, half uniformly and half at log-uniform
/// distances `10^{-6}..1` from the boundary, and reports the largest ratio.
pub fn three_g_supremum(alpha: f64, n: usize, seed: u64) -> Result<ThreeGReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| -> f64 {
        if rng.random::<bool>() {
            2.0 * rng.random::<f64>()
        } else {
            let s = 10f64.powf(-6.0 * rng.random::<f64>());
            if rng.random::<bool>() {
                s
            } else {
                2.0 - s
            }
        }
    };
    let mut best = ThreeGReport {
        alpha,
        n_triples: 0,
        supremum: 0.0,
        argmax: [f64::NAN; 3],
    };
    while best.n_triples < n {
        let (x, y, z) = (point(&mut rng), point(&mut rng), point(&mut rng));
        let Ok(v) = three_g_ratio(x, y, z, alpha) else {
            continue;
        };
        best.n_triples += 1;
        if v > best.supremum {
            best.supremum = v;
            best.argmax = [x, y, z];
        }
    }
    Ok(best)
}

/// Ratio of the far to the near branch of `V̂` across `|x - y| = 3 m^{-1/α}`,
/// with both points at the given boundary distances.
pub fn v_tilde_branch_jump(dx: f64, dy: f64, params: &ModelParams<f64>) -> Result<f64> {
    check_mass(params)?;
    let r0 = 3.0 / params.m_scale();
    let near = v_tilde_at(dx, dy, r0 - 1e-6, params);
    let far = v_tilde_at(dx, dy, r0 + 1e-6, params);
    Ok(far / near)
}
