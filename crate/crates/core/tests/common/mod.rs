#![allow(dead_code)]

/// `K_ν(x) = ∫_0^∞ e^{-x cosh t} cosh(ν t) dt` by the trapezoid rule, which
/// converges geometrically for this doubly-exponentially decaying integrand.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    let h = 0.02;
    let mut sum = 0.5 * (-x).exp();
    let mut i = 1;
    loop {
        let t = i as f64 * h;
        let term = (-x * t.cosh()).exp() * (nu * t).cosh();
        sum += term;
        if term < 1e-300 || (term < 1e-18 * sum && x * t.cosh() > 40.0) {
            break;
        }
        i += 1;
    }
    sum * h
}

/// `ln Γ` by Stirling's series after shifting the argument above 10.
pub fn ln_gamma(x: f64) -> f64 {
    let mut shift = 0.0;
    let mut z = x;
    while z < 10.0 {
        shift -= z.ln();
        z += 1.0;
    }
    let z2 = z * z;
    let series = 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z2 * z2 * z)
        - 1.0 / (1680.0 * z2 * z2 * z2 * z);
    shift + (z - 0.5) * z.ln() - z + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// Closed form `ψ(r) = 2^{1-k} r^k K_k(r) / Γ(k)` with `k = (d + α)/2`.
pub fn psi_oracle(r: f64, d: usize, alpha: f64) -> f64 {
    if r == 0.0 {
        return 1.0;
    }
    let k = (d as f64 + alpha) / 2.0;
    ((1.0 - k) * 2f64.ln() + k * r.ln() - ln_gamma(k)).exp() * bessel_k(k, r)
}

/// Cauchy transition density in one dimension.
pub fn cauchy(t: f64, x: f64) -> f64 {
    t / (std::f64::consts::PI * (t * t + x * x))
}
