//! Free-space transition density of the relativistic stable process by
//! subordination of Brownian motion to an α/2-stable subordinator.
//!
//! The subordinator has Laplace transform `E e^{-λ S_t} = e^{-t λ^{α/2}}`.

use crate::error::{Error, Result};
use crate::levy::levy_density_with;
use crate::quad::{self, QuadratureConfig};
use crate::scalar::{self, Real};
use crate::specialfns::{ln_gamma, ModelParams};

/// A subordinator density evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubordinatorDensityEval<T> {
    pub t: T,
    pub u: T,
    pub value: T,
}

/// A transition density evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelValue<T> {
    pub t: T,
    pub displacement: Vec<T>,
    pub value: T,
}

fn check_alpha<T: Real>(alpha: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::lit(2.0)) {
        return Err(Error::InvalidParams {
            key: "alpha",
            value: alpha.as_f64(),
            expected: "alpha in the open interval (0, 2)",
        });
    }
    Ok(alpha / T::lit(2.0))
}

/// `ln` of the Zolotarev function `A(φ)` for index `β`.
fn ln_zolotarev_a<T: Real>(phi: T, beta: T) -> T {
    let one = T::one();
    let s_b = (beta * phi).sin().ln();
    let s = phi.sin().ln();
    let s_c = ((one - beta) * phi).sin().ln();
    (s_b - s) / (one - beta) + s_c - s_b
}

/// `ln g(x)` for the standard positive `β`-stable density, from the single
/// integral `g(x) = β/((1-β)π) x^{-1/(1-β)} ∫_0^π A e^{-x^{-β/(1-β)} A} dφ`.
fn ln_stable_density_integral<T: Real>(x: T, beta: T, cfg: &QuadratureConfig<T>) -> Result<T> {
    let one = T::one();
    let pi = T::PI();
    let q = one - beta;
    let ln_z = -beta / q * x.ln();
    let z = ln_z.exp();
    // A increases from A(0+) = β^{β/(1-β)} (1-β) to infinity on (0, π).
    let a0 = (beta.ln() * beta / q).exp() * q;
    if z * a0 > T::lit(1e4) {
        // Beyond this the density is below e^{-1e4}.
        return Ok(T::neg_infinity());
    }
    let level = |c: T| -> Option<T> {
        // Solve z A(φ) = c by bisection on ln A.
        let target = c.ln() - ln_z;
        if target <= a0.ln() {
            return None;
        }
        let (mut lo, mut hi) = (T::zero(), pi);
        for _ in 0..80 {
            let mid = T::lit(0.5) * (lo + hi);
            if ln_zolotarev_a(mid, beta) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(T::lit(0.5) * (lo + hi))
    };
    let marks: Vec<T> = [0.05, 1.0, 10.0, 40.0]
        .iter()
        .filter_map(|&c| level(T::lit(c)))
        .collect();
    let pts = quad::breakpoints(T::zero(), pi, &marks);
    let f = |phi: T| {
        let la = ln_zolotarev_a(phi, beta);
        (la - z * (la.exp() - a0)).exp()
    };
    let integral = quad::integrate_points(f, &pts, cfg)?;
    if !(integral.value > T::zero()) {
        return Ok(T::neg_infinity());
    }
    Ok((beta / (q * pi)).ln() - x.ln() / q + integral.value.ln() - z * a0)
}

/// `ln g(x)` from the convergent large-`x` series
/// `g(x) = π^{-1} Σ_k (-1)^{k+1} Γ(kβ+1)/k! sin(kπβ) x^{-kβ-1}`.
fn ln_stable_density_series<T: Real>(x: T, beta: T) -> T {
    let pi = T::PI();
    let lx = x.ln();
    let mut sum = T::zero();
    for k in 1..200usize {
        let kf = T::count(k);
        let mag = (ln_gamma(kf * beta + T::one()) - ln_gamma(kf + T::one()) - (kf * beta + T::one()) * lx).exp();
        let sign = if k % 2 == 1 { T::one() } else { -T::one() };
        let term = sign * mag * (kf * pi * beta).sin();
        sum = sum + term;
        if mag < T::epsilon() * T::lit(0.01) * sum.abs() {
            break;
        }
    }
    sum.ln() - pi.ln()
}

fn ln_stable_density<T: Real>(x: T, beta: T, cfg: &QuadratureConfig<T>) -> Result<T> {
    if beta == T::lit(0.5) {
        // Lévy distribution.
        return Ok(-T::lit(1.5) * x.ln() - T::one() / (T::lit(4.0) * x) - (T::lit(2.0) * T::PI().sqrt()).ln());
    }
    if x.powf(-beta) <= T::lit(0.05) {
        return Ok(ln_stable_density_series(x, beta));
    }
    ln_stable_density_integral(x, beta, cfg)
}

/// `ln θ_α(t, u)` with `θ_α(t, u) = t^{-2/α} g(u t^{-2/α})`.
pub fn ln_subordinator_density<T: Real>(t: T, u: T, alpha: T, cfg: &QuadratureConfig<T>) -> Result<T> {
    let beta = check_alpha(alpha)?;
    check_positive("t", t)?;
    check_positive("u", u)?;
    let lt = t.ln() / beta;
    Ok(ln_stable_density((u.ln() - lt).exp(), beta, cfg)? - lt)
}

/// Density `θ_α(t, u)` of the α/2-stable subordinator at level `u`, time `t`.
pub fn subordinator_density<T: Real>(t: T, u: T, alpha: T) -> Result<T> {
    Ok(ln_subordinator_density(t, u, alpha, &QuadratureConfig::default())?.exp())
}

/// `θ_α(t, u)` always through the single-integral representation, without
/// the closed form at `α = 1` or the large-level series.
pub fn subordinator_density_integral<T: Real>(t: T, u: T, alpha: T, cfg: &QuadratureConfig<T>) -> Result<T> {
    let beta = check_alpha(alpha)?;
    check_positive("t", t)?;
    check_positive("u", u)?;
    let lt = t.ln() / beta;
    Ok((ln_stable_density_integral((u.ln() - lt).exp(), beta, cfg)? - lt).exp())
}

pub fn evaluate_subordinator<T: Real>(t: T, u: T, alpha: T) -> Result<SubordinatorDensityEval<T>> {
    Ok(SubordinatorDensityEval {
        t,
        u,
        value: subordinator_density(t, u, alpha)?,
    })
}

fn check_positive<T: Real>(arg: &'static str, v: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::Domain {
            arg,
            value: v.as_f64(),
            expected: "a finite positive value",
        });
    }
    Ok(())
}

/// `e^{t m} ∫_0^∞ (4πu)^{-d/2} e^{-r²/4u} e^{-μu} θ_α(t, u) du`.
fn subordinated<T: Real>(t: T, r: T, d: usize, alpha: T, tilt: T, m: T, cfg: &QuadratureConfig<T>) -> Result<T> {
    let beta = alpha / T::lit(2.0);
    let half_d = T::count(d) / T::lit(2.0);
    let four = T::lit(4.0);
    let ln_4pi = (four * T::PI()).ln();
    let r2 = r * r;
    let inner = cfg.with_rel_tol(cfg.rel_tol * T::lit(0.1));
    let failure = std::cell::RefCell::new(None);
    let f = |u: T| {
        if !(u > T::zero()) || !u.is_finite() {
            return T::zero();
        }
        let lt = match ln_subordinator_density(t, u, alpha, &inner) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                return T::nan();
            }
        };
        (lt - tilt * u - r2 / (four * u) - half_d * (ln_4pi + u.ln()) + t * m).exp()
    };
    let scale = t.powf(T::one() / beta);
    let saddle = r2 / (T::lit(2.0) * T::count(d));
    let mut marks = vec![saddle, scale, T::one(), scale * T::lit(0.2), scale * T::lit(5.0)];
    if saddle > T::zero() {
        marks.push(saddle * T::lit(0.2));
        marks.push(saddle * T::lit(5.0));
    }
    if tilt > T::zero() {
        marks.push(T::lit(5.0) / tilt);
    }
    let top = marks.iter().copied().fold(T::zero(), scalar::max);
    let pts = quad::breakpoints(T::zero(), top, &marks);
    let v = quad::integrate_to_infinity(f, &pts, cfg)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(v.value)
}

fn check_time_sep<T: Real>(t: T, r: T) -> Result<()> {
    check_positive("t", t)?;
    if !(r >= T::zero()) || !r.is_finite() {
        return Err(Error::Domain {
            arg: "r",
            value: r.as_f64(),
            expected: "a finite separation r >= 0",
        });
    }
    Ok(())
}

/// `p^m(t, r)` for a separation `r = |x - y|`.
///
/// For `m > 0` the value is `m^{d/α} p¹(mt, m^{1/α} r)`.
pub fn free_kernel_radial<T: Real>(t: T, r: T, params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    check_time_sep(t, r)?;
    let (d, a, m) = (params.d(), params.alpha(), params.m());
    if m == T::zero() {
        return subordinated(t, r, d, a, T::zero(), T::zero(), cfg);
    }
    let unit = subordinated(m * t, params.m_scale() * r, d, a, T::one(), T::one(), cfg)?;
    Ok(m.powf(params.dim() / a) * unit)
}

/// `p^m(t, x)` for a displacement vector `x` of length `d`.
pub fn free_kernel<T: Real>(t: T, x: &[T], params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    if x.len() != params.d() {
        return Err(Error::DimensionMismatch {
            expected: params.d(),
            got: x.len(),
        });
    }
    free_kernel_radial(t, scalar::norm(x), params, cfg)
}

pub fn evaluate_kernel<T: Real>(t: T, x: &[T], params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<KernelValue<T>> {
    Ok(KernelValue {
        t,
        displacement: x.to_vec(),
        value: free_kernel(t, x, params, cfg)?,
    })
}

/// `p^m(t, r)` by tilting the subordinator directly with `e^{mt - m^{2/α}u}`.
///
/// Independent of the scaling route taken by [`free_kernel_radial`].
pub fn free_kernel_tilted<T: Real>(t: T, r: T, params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    check_time_sep(t, r)?;
    subordinated(t, r, params.d(), params.alpha(), params.tilt(), params.m(), cfg)
}

/// `min(t^{-d/α}, t J^m(r))`, with `t^{-d/α}` at `r = 0`.
pub fn free_kernel_comparator<T: Real>(t: T, r: T, params: &ModelParams<T>) -> Result<T> {
    check_time_sep(t, r)?;
    let near = t.powf(-params.dim() / params.alpha());
    if r == T::zero() {
        return Ok(near);
    }
    let far = t * levy_density_with(r, params, &QuadratureConfig::default())?;
    Ok(scalar::min(near, far))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(d: usize, a: f64, m: f64) -> ModelParams<f64> {
        ModelParams::new(d, a, m).unwrap()
    }

    fn levy_closed(t: f64, u: f64) -> f64 {
        t * u.powf(-1.5) * (-t * t / (4.0 * u)).exp() / (2.0 * std::f64::consts::PI.sqrt())
    }

    #[test]
    fn half_stable_integral_matches_closed_form() {
        let cfg = QuadratureConfig::default();
        assert!((subordinator_density(1.0f64, 1.0, 1.0).unwrap() - 0.219_695_644_733_861_2).abs() < 1e-12);
        for &(t, u) in &[(1.0, 1.0), (0.3, 0.02), (2.0, 5.0), (1.0, 300.0), (0.05, 1e-4)] {
            let got = subordinator_density_integral(t, u, 1.0, &cfg).unwrap();
            let want = levy_closed(t, u);
            assert!((got - want).abs() <= 1e-8 * want, "{t} {u}: {got} {want}");
        }
    }

    #[test]
    fn series_and_integral_agree() {
        let cfg = QuadratureConfig::default();
        for &beta in &[0.25f64, 0.75] {
            for &x in &[50.0f64, 400.0, 1e5] {
                if x.powf(-beta) > 0.2 {
                    continue;
                }
                let a = ln_stable_density_series(x, beta);
                let b = ln_stable_density_integral(x, beta, &cfg).unwrap();
                assert!((a - b).abs() < 1e-8, "{beta} {x}: {a} {b}");
            }
        }
    }

    #[test]
    fn cauchy_kernel() {
        let cfg = QuadratureConfig::default();
        let q = p(1, 1.0, 0.0);
        let v = free_kernel(1.0, &[0.0], &q, &cfg).unwrap();
        assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-9);
        let v = free_kernel(0.5, &[2.0], &q, &cfg).unwrap();
        let want = 0.5 / (std::f64::consts::PI * (0.25 + 4.0));
        assert!((v - want).abs() < 1e-9 * want);
    }

    #[test]
    fn scaling_and_tilting_routes_agree() {
        let cfg = QuadratureConfig::default();
        let q = p(1, 1.0, 2.0);
        let a = free_kernel_radial(0.5, 0.3, &q, &cfg).unwrap();
        let b = free_kernel_tilted(0.5, 0.3, &q, &cfg).unwrap();
        assert!((a - b).abs() < 1e-8 * a, "{a} {b}");
    }

    #[test]
    fn comparator_examples() {
        let q = p(1, 1.0, 0.0);
        assert_eq!(free_kernel_comparator(1.0, 0.0, &q).unwrap(), 1.0);
        let v = free_kernel_comparator(1.0, 1.0, &q).unwrap();
        assert!((v - std::f64::consts::FRAC_1_PI).abs() < 1e-14);
        let q1 = p(1, 1.0, 1.0);
        let v = free_kernel_comparator(0.01, 5.0, &q1).unwrap();
        let j = crate::levy::levy_density(5.0, &q1).unwrap();
        assert!((v - 0.01 * j).abs() < 1e-18);
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = QuadratureConfig::default();
        let q = p(2, 1.0, 0.0);
        assert!(free_kernel(0.0, &[0.0, 0.0], &q, &cfg).is_err());
        assert!(free_kernel(1.0, &[0.0], &q, &cfg).is_err());
        assert!(subordinator_density(1.0, 0.0, 1.0).is_err());
        assert!(subordinator_density(1.0, 1.0, 2.0).is_err());
    }
}
