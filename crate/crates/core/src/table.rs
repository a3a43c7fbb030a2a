//! Interpolation tables for radial functions evaluated many times inside
//! Monte Carlo loops.

use crate::error::{Error, Result};

/// `ln f(r)` on a uniform grid in `u = asinh(r / scale)`, interpolated by
/// four-point Lagrange polynomials.
#[derive(Debug, Clone)]
pub struct RadialTable {
    scale: f64,
    u_min: f64,
    step: f64,
    r_min: f64,
    r_max: f64,
    ln_values: Vec<f64>,
}

impl RadialTable {
    /// Tabulates a positive `f` on `[0, r_max]` with `nodes` grid points.
    pub fn build<F>(f: F, scale: f64, r_max: f64, nodes: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        Self::build_range(f, scale, 0.0, r_max, nodes)
    }

    /// Tabulates `f` on `[r_min, r_max]`; queries below `r_min` are clamped.
    pub fn build_range<F>(f: F, scale: f64, r_min: f64, r_max: f64, nodes: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if !(scale > 0.0 && r_min >= 0.0 && r_max > r_min) || nodes < 4 {
            return Err(Error::InvalidConfig(
                "table needs positive scale, a non-empty range and at least 4 nodes".into(),
            ));
        }
        let u_min = (r_min / scale).asinh();
        let u_max = (r_max / scale).asinh();
        let step = (u_max - u_min) / (nodes - 1) as f64;
        let mut ln_values = Vec::with_capacity(nodes);
        for i in 0..nodes {
            let r = scale * (u_min + i as f64 * step).sinh();
            let v = f(r.clamp(r_min, r_max))?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidConfig(format!("tabulated value {v} at r = {r} is not positive")));
            }
            ln_values.push(v.ln());
        }
        Ok(Self {
            scale,
            u_min,
            step,
            r_min,
            r_max,
            ln_values,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Interpolated `ln f(r)`; `None` beyond the tabulated range.
    pub fn ln_eval(&self, r: f64) -> Option<f64> {
        if !(r >= 0.0) || r > self.r_max {
            return None;
        }
        let u = ((r.max(self.r_min) / self.scale).asinh() - self.u_min) / self.step;
        let n = self.ln_values.len();
        let i = (u.floor() as usize).clamp(1, n - 3);
        let x = u - i as f64;
        let y = &self.ln_values[i - 1..i + 3];
        // Nodes at -1, 0, 1, 2.
        let l0 = -x * (x - 1.0) * (x - 2.0) / 6.0;
        let l1 = (x + 1.0) * (x - 1.0) * (x - 2.0) / 2.0;
        let l2 = -(x + 1.0) * x * (x - 2.0) / 2.0;
        let l3 = (x + 1.0) * x * (x - 1.0) / 6.0;
        Some(l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3])
    }

    pub fn eval(&self, r: f64) -> Option<f64> {
        self.ln_eval(r).map(f64::exp)
    }
}
