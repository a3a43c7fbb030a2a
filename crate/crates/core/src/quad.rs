//! Globally adaptive Gauss–Kronrod (10/21) quadrature on finite and
//! semi-infinite ranges.

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_795_018,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod abscissae.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances and work limit for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_subdivisions: usize,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-10),
            abs_tol: T::lit(1e-14),
            max_subdivisions: 500,
        }
    }
}

impl<T: Real> QuadratureConfig<T> {
    pub fn new(rel_tol: T, abs_tol: T, max_subdivisions: usize) -> Result<Self> {
        if !(rel_tol > T::zero()) {
            return Err(Error::Domain {
                arg: "rel_tol",
                value: rel_tol.as_f64(),
                expected: "rel_tol > 0",
            });
        }
        if !(abs_tol >= T::zero()) {
            return Err(Error::Domain {
                arg: "abs_tol",
                value: abs_tol.as_f64(),
                expected: "abs_tol >= 0",
            });
        }
        if max_subdivisions == 0 {
            return Err(Error::Domain {
                arg: "max_subdivisions",
                value: 0.0,
                expected: "max_subdivisions >= 1",
            });
        }
        Ok(Self {
            rel_tol,
            abs_tol,
            max_subdivisions,
        })
    }

    /// Same limits with a different relative tolerance.
    pub fn with_rel_tol(self, rel_tol: T) -> Self {
        Self { rel_tol, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub abs_err: T,
    pub evaluations: usize,
}

#[derive(Clone, Copy)]
enum Map<T> {
    Identity,
    /// x = origin + (1 - s) / s on s in (0, 1].
    Tail(T),
}

#[derive(Clone, Copy)]
struct Panel<T> {
    lo: T,
    hi: T,
    map: Map<T>,
    value: T,
    err: T,
    abs: T,
}

fn rescale_error<T: Real>(err: T, res_abs: T, res_asc: T) -> T {
    let mut err = err.abs();
    if res_asc != T::zero() && err != T::zero() {
        let scale = (T::lit(200.0) * err / res_asc).powf(T::lit(1.5));
        err = if scale < T::one() { res_asc * scale } else { res_asc };
    }
    let fifty_eps = T::lit(50.0) * T::epsilon();
    if res_abs > T::min_positive_value() / fifty_eps {
        let floor = fifty_eps * res_abs;
        if floor > err {
            err = floor;
        }
    }
    err
}

fn eval_mapped<T: Real, F: Fn(T) -> T>(f: &F, map: Map<T>, s: T) -> T {
    let v = match map {
        Map::Identity => f(s),
        Map::Tail(origin) => {
            let x = origin + (T::one() - s) / s;
            f(x) / (s * s)
        }
    };
    if v.is_finite() {
        v
    } else {
        T::zero()
    }
}

fn gk21<T: Real, F: Fn(T) -> T>(f: &F, map: Map<T>, lo: T, hi: T) -> (T, T, T) {
    let half = T::lit(0.5);
    let center = half * (lo + hi);
    let half_len = half * (hi - lo);
    let f_center = eval_mapped(f, map, center);
    let mut res_g = T::zero();
    let mut res_k = f_center * T::lit(WGK[10]);
    let mut res_abs = res_k.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..5 {
        let jtw = 2 * j + 1;
        let dx = half_len * T::lit(XGK[jtw]);
        let a = eval_mapped(f, map, center - dx);
        let b = eval_mapped(f, map, center + dx);
        fv1[jtw] = a;
        fv2[jtw] = b;
        res_g = res_g + T::lit(WG[j]) * (a + b);
        res_k = res_k + T::lit(WGK[jtw]) * (a + b);
        res_abs = res_abs + T::lit(WGK[jtw]) * (a.abs() + b.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let dx = half_len * T::lit(XGK[jtwm1]);
        let a = eval_mapped(f, map, center - dx);
        let b = eval_mapped(f, map, center + dx);
        fv1[jtwm1] = a;
        fv2[jtwm1] = b;
        res_k = res_k + T::lit(WGK[jtwm1]) * (a + b);
        res_abs = res_abs + T::lit(WGK[jtwm1]) * (a.abs() + b.abs());
    }
    let mean = res_k * half;
    let mut res_asc = T::lit(WGK[10]) * (f_center - mean).abs();
    for j in 0..10 {
        res_asc = res_asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half_len.abs();
    let result = res_k * half_len;
    let err = rescale_error((res_k - res_g) * half_len, res_abs * scale, res_asc * scale);
    (result, err, res_abs * scale)
}

fn adapt<T: Real, F: Fn(T) -> T>(
    f: &F,
    seeds: Vec<(T, T, Map<T>)>,
    cfg: &QuadratureConfig<T>,
) -> Result<QuadResult<T>> {
    let mut panels: Vec<Panel<T>> = seeds
        .into_iter()
        .filter(|(lo, hi, _)| hi > lo)
        .map(|(lo, hi, map)| {
            let (value, err, abs) = gk21(f, map, lo, hi);
            Panel {
                lo,
                hi,
                map,
                value,
                err,
                abs,
            }
        })
        .collect();
    let mut evaluations = 21 * panels.len();
    loop {
        let total: T = panels.iter().map(|p| p.value).sum();
        let err: T = panels.iter().map(|p| p.err).sum();
        // Cancellation can leave an error estimate at the rounding floor.
        let rounding: T = T::lit(100.0) * T::epsilon() * panels.iter().map(|p| p.abs).sum::<T>();
        let target = crate::scalar::max(crate::scalar::max(cfg.abs_tol, cfg.rel_tol * total.abs()), rounding);
        if err <= target || panels.is_empty() {
            return Ok(QuadResult {
                value: total,
                abs_err: err,
                evaluations,
            });
        }
        if panels.len() >= cfg.max_subdivisions {
            return Err(Error::Quadrature {
                estimate: total.as_f64(),
                abs_err: err.as_f64(),
                subdivisions: panels.len(),
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .fold((0usize, T::neg_infinity()), |(bi, be), (i, p)| {
                if p.err > be {
                    (i, p.err)
                } else {
                    (bi, be)
                }
            });
        let p = panels.swap_remove(worst);
        let mid = T::lit(0.5) * (p.lo + p.hi);
        if !(mid > p.lo && mid < p.hi) {
            // Panel cannot be split further in this precision.
            return Err(Error::Quadrature {
                estimate: total.as_f64(),
                abs_err: err.as_f64(),
                subdivisions: panels.len() + 1,
            });
        }
        for (lo, hi) in [(p.lo, mid), (mid, p.hi)] {
            let (value, err, abs) = gk21(f, p.map, lo, hi);
            panels.push(Panel {
                lo,
                hi,
                map: p.map,
                value,
                err,
                abs,
            });
        }
        evaluations += 42;
    }
}

/// Integral of `f` over `[a, b]`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, cfg: &QuadratureConfig<T>) -> Result<QuadResult<T>> {
    integrate_points(f, &[a, b], cfg)
}

/// Integral over `[p_0, p_last]` with the listed interior breakpoints.
///
/// Breakpoints must be sorted; duplicates are dropped.
pub fn integrate_points<T: Real, F: Fn(T) -> T>(
    f: F,
    points: &[T],
    cfg: &QuadratureConfig<T>,
) -> Result<QuadResult<T>> {
    let seeds = points
        .windows(2)
        .map(|w| (w[0], w[1], Map::Identity))
        .collect();
    adapt(&f, seeds, cfg)
}

/// Integral over `[p_0, ∞)` with sorted finite breakpoints `points`.
pub fn integrate_to_infinity<T: Real, F: Fn(T) -> T>(
    f: F,
    points: &[T],
    cfg: &QuadratureConfig<T>,
) -> Result<QuadResult<T>> {
    let mut seeds: Vec<(T, T, Map<T>)> = points
        .windows(2)
        .map(|w| (w[0], w[1], Map::Identity))
        .collect();
    let last = *points.last().expect("at least one point");
    seeds.push((T::zero(), T::one(), Map::Tail(last)));
    adapt(&f, seeds, cfg)
}

/// Sorted, deduplicated, strictly increasing breakpoints within `(lo, hi)`,
/// with `lo` prepended and `hi` appended when finite.
pub(crate) fn breakpoints<T: Real>(lo: T, hi: T, interior: &[T]) -> Vec<T> {
    let mut pts: Vec<T> = interior
        .iter()
        .copied()
        .filter(|p| p.is_finite() && *p > lo && *p < hi)
        .collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    pts.dedup_by(|a, b| (*a - *b).abs() <= T::epsilon() * b.abs());
    let mut out = vec![lo];
    out.extend(pts);
    if hi.is_finite() {
        out.push(hi);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let cfg = QuadratureConfig::<f64>::default();
        let r = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &cfg).unwrap();
        assert!((r.value - 0.0).abs() < 1e-14);
        let r = integrate(|x| x.powi(4), -1.0, 1.0, &cfg).unwrap();
        assert!((r.value - 0.4).abs() < 1e-15);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let cfg = QuadratureConfig::<f64>::default();
        let r = integrate(|x: f64| x.powf(-0.5), 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn semi_infinite() {
        let cfg = QuadratureConfig::<f64>::default();
        let r = integrate_to_infinity(|x: f64| (-x).exp(), &[0.0], &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_to_infinity(|x: f64| 1.0 / (1.0 + x * x), &[0.0, 1.0, 10.0], &cfg).unwrap();
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn subdivision_cap_reports_partial_estimate() {
        let cfg = QuadratureConfig::new(1e-14, 0.0, 2).unwrap();
        let e = integrate(|x: f64| (50.0 * x).sin().abs(), 0.0, 3.0, &cfg).unwrap_err();
        match e {
            Error::Quadrature { estimate, .. } => assert!(estimate.is_finite() && estimate > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn f32_path() {
        let cfg = QuadratureConfig::<f32>::new(1e-5, 1e-7, 100).unwrap();
        let r = integrate(|x: f32| x.exp(), 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - (1f32.exp() - 1.0)).abs() < 1e-5);
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::<f64>::new(0.0, 0.0, 10).is_err());
        assert!(QuadratureConfig::<f64>::new(1e-8, -1.0, 10).is_err());
        assert!(QuadratureConfig::<f64>::new(1e-8, 0.0, 0).is_err());
    }
}
