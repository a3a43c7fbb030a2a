//! Lévy densities of the relativistic stable process and the jump-rate
//! integrals derived from them.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureConfig};
use crate::scalar::Real;
use crate::specialfns::{one_minus_psi_with, psi_with, stable_constant, unit_sphere_area, ModelParams, SmallJumpRegime};

/// A Lévy density evaluated at a separation `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyDensityValue<T> {
    pub r: T,
    pub value: T,
}

fn check_r<T: Real>(r: T) -> Result<()> {
    if r == T::zero() {
        return Err(Error::Singular);
    }
    if !(r > T::zero()) {
        return Err(Error::Domain {
            arg: "r",
            value: r.as_f64(),
            expected: "r > 0",
        });
    }
    Ok(())
}

/// `J^m(r) = 𝒜 r^{-d-α} ψ(m^{1/α} r)`.
pub fn levy_density<T: Real>(r: T, params: &ModelParams<T>) -> Result<T> {
    levy_density_with(r, params, &QuadratureConfig::default())
}

pub fn levy_density_with<T: Real>(r: T, params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    check_r(r)?;
    let stable = stable_constant(params) * r.powf(-(params.dim() + params.alpha()));
    if params.m() == T::zero() {
        return Ok(stable);
    }
    Ok(stable * psi_with(params.m_scale() * r, params, cfg)?)
}

/// `J_m(r) = J(r) - J^m(r)`, the intensity of jumps removed by the tempering.
pub fn removed_density<T: Real>(r: T, params: &ModelParams<T>) -> Result<T> {
    check_r(r)?;
    if params.m() == T::zero() {
        return Ok(T::zero());
    }
    let stable = stable_constant(params) * r.powf(-(params.dim() + params.alpha()));
    Ok(stable * one_minus_psi_with(params.m_scale() * r, params, &QuadratureConfig::default())?)
}

pub fn evaluate<T: Real>(r: T, params: &ModelParams<T>) -> Result<LevyDensityValue<T>> {
    Ok(LevyDensityValue {
        r,
        value: levy_density(r, params)?,
    })
}

/// Total intensity `∫ J_m(x, y) dy` of removed jumps.
///
/// The dimensionless profile `∫_0^∞ u^{-1-α} (1 - ψ(u)) du` is integrated
/// once and scaled by `ω_d 𝒜 m`.
pub fn removed_mass<T: Real>(params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    if params.m() == T::zero() {
        return Ok(T::zero());
    }
    let profile = removed_profile(params, cfg)?;
    Ok(unit_sphere_area::<T>(params.d()) * stable_constant(params) * params.m() * profile)
}

/// `∫_0^∞ u^{-1-α} (1 - ψ(u)) du`, with the `u > 1` part written as
/// `1/α - ∫_1^∞ u^{-1-α} ψ(u) du`.
fn removed_profile<T: Real>(params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    let a = params.alpha();
    let inner = cfg.with_rel_tol(cfg.rel_tol * T::lit(0.01));
    let err = RefCell::new(None);
    let head = match params.regime() {
        SmallJumpRegime::Smooth => {
            // 1 - ψ(u) ~ u² near 0; u = w^{1/(2-α)} flattens u^{1-α}.
            let p = T::lit(2.0) - a;
            let inv_p = T::one() / p;
            let f = |w: T| {
                if w <= T::zero() {
                    return T::zero();
                }
                let u = w.powf(inv_p);
                match one_minus_psi_with(u, params, &inner) {
                    Ok(v) => v / (u * u) * inv_p,
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        T::nan()
                    }
                }
            };
            quad::integrate(f, T::zero(), T::one(), cfg)?
        }
        _ => {
            let f = |u: T| {
                if u <= T::zero() {
                    return T::zero();
                }
                match one_minus_psi_with(u, params, &inner) {
                    Ok(v) => v * u.powf(-T::one() - a),
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        T::nan()
                    }
                }
            };
            quad::integrate(f, T::zero(), T::one(), cfg)?
        }
    };
    let tail = tempered_tail_integral(T::one(), -T::one() - a, params, cfg, &err)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(head.value + T::one() / a - tail)
}

/// `∫_c^∞ u^{p} ψ(u) du` for the dimensionless profile.
fn tempered_tail_integral<T: Real>(
    c: T,
    p: T,
    params: &ModelParams<T>,
    cfg: &QuadratureConfig<T>,
    err: &RefCell<Option<Error>>,
) -> Result<T> {
    let inner = cfg.with_rel_tol(cfg.rel_tol * T::lit(0.01));
    let f = |u: T| match psi_with(u, params, &inner) {
        Ok(v) => v * u.powf(p),
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            T::nan()
        }
    };
    let pts = [c, c + T::lit(2.0), c + T::lit(10.0)];
    Ok(quad::integrate_to_infinity(f, &pts, cfg)?.value)
}

/// Rate `∫_{|z| > cut} J(z) dz = ω_d 𝒜 cut^{-α} / α` of stable jumps above `cut`.
pub fn stable_rate_above<T: Real>(cut: T, params: &ModelParams<T>) -> T {
    let a = params.alpha();
    unit_sphere_area::<T>(params.d()) * stable_constant(params) * cut.powf(-a) / a
}

/// Rate `∫_{|z| > cut} J^m(z) dz` of retained jumps above `cut`.
pub fn retained_rate_above<T: Real>(cut: T, params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    check_r(cut)?;
    if params.m() == T::zero() {
        return Ok(stable_rate_above(cut, params));
    }
    let ms = params.m_scale();
    let err = RefCell::new(None);
    let tail = tempered_tail_integral(ms * cut, -T::one() - params.alpha(), params, cfg, &err)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    // r = u / m_s turns r^{-1-α} dr into m u^{-1-α} du.
    Ok(unit_sphere_area::<T>(params.d()) * stable_constant(params) * params.m() * tail)
}

/// Rate `∫_{|z| > cut} J_m(z) dz` of deleted jumps above `cut`.
pub fn deleted_rate_above<T: Real>(cut: T, params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    Ok(stable_rate_above(cut, params) - retained_rate_above(cut, params, cfg)?)
}

/// Per-coordinate variance rate `∫_{|z| < cut} z_1² J^m(z) dz` of the small jumps.
pub fn small_jump_variance<T: Real>(cut: T, params: &ModelParams<T>, cfg: &QuadratureConfig<T>) -> Result<T> {
    check_r(cut)?;
    let a = params.alpha();
    let pref = unit_sphere_area::<T>(params.d()) / params.dim() * stable_constant(params);
    if params.m() == T::zero() {
        return Ok(pref * cut.powf(T::lit(2.0) - a) / (T::lit(2.0) - a));
    }
    let ms = params.m_scale();
    let inner = cfg.with_rel_tol(cfg.rel_tol * T::lit(0.01));
    let err = RefCell::new(None);
    // u = w^{1/(2-α)} removes the r^{1-α} endpoint behavior.
    let p = T::lit(2.0) - a;
    let inv_p = T::one() / p;
    let f = |w: T| {
        if w <= T::zero() {
            return inv_p;
        }
        match psi_with(ms * w.powf(inv_p), params, &inner) {
            Ok(v) => v * inv_p,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                T::nan()
            }
        }
    };
    let val = quad::integrate(f, T::zero(), cut.powf(p), cfg)?;
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(pref * val.value)
}

/// Retention probability `ψ(m^{1/α} ρ) = J^m(ρ)/J(ρ)` of a stable jump of size `ρ`.
pub fn thinning_probability<T: Real>(jump_size: T, params: &ModelParams<T>) -> Result<T> {
    check_r(jump_size)?;
    if params.m() == T::zero() {
        return Ok(T::one());
    }
    psi_with(params.m_scale() * jump_size, params, &QuadratureConfig::default())
}
