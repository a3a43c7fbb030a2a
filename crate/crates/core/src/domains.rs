//! Exemplar `C^{1,1}` open sets with exact distance to the complement.

use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// Shape of a [`Domain`].
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind<T> {
    FullSpace { d: usize },
    Ball { center: Vec<T>, radius: T },
    Annulus { center: Vec<T>, r_in: T, r_out: T },
    /// `{x : x_d > a}`.
    HalfSpace { d: usize, a: T },
    /// `{x : x_d > h(x̂)}` with the cosine bump
    /// `h = b + (a - b)(1 + cos(π|x̂|/w))/2` on `|x̂| < w` and `h = b` elsewhere,
    /// so that `H_a ⊆ D ⊆ H_b`.
    BumpHalfSpace { d: usize, a: T, b: T, width: T },
    /// Disjoint open intervals of the real line.
    IntervalUnion { intervals: Vec<(T, T)> },
    /// Complement of a closed ball.
    BallComplement { center: Vec<T>, radius: T },
}

/// An open set together with its ball-condition radius `r₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain<T> {
    kind: DomainKind<T>,
    r0: T,
}

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidDomain(msg.into()))
}

fn finite_coords<T: Real>(x: &[T]) -> bool {
    x.iter().all(|v| v.is_finite())
}

impl<T: Real> Domain<T> {
    pub fn new(kind: DomainKind<T>) -> Result<Self> {
        let r0 = Self::validate(&kind)?;
        Ok(Self { kind, r0 })
    }

    pub fn full_space(d: usize) -> Result<Self> {
        Self::new(DomainKind::FullSpace { d })
    }

    pub fn ball(center: Vec<T>, radius: T) -> Result<Self> {
        Self::new(DomainKind::Ball { center, radius })
    }

    pub fn annulus(center: Vec<T>, r_in: T, r_out: T) -> Result<Self> {
        Self::new(DomainKind::Annulus { center, r_in, r_out })
    }

    pub fn half_space(d: usize, a: T) -> Result<Self> {
        Self::new(DomainKind::HalfSpace { d, a })
    }

    pub fn bump_half_space(d: usize, a: T, b: T, width: T) -> Result<Self> {
        Self::new(DomainKind::BumpHalfSpace { d, a, b, width })
    }

    pub fn interval_union(intervals: Vec<(T, T)>) -> Result<Self> {
        Self::new(DomainKind::IntervalUnion { intervals })
    }

    pub fn ball_complement(center: Vec<T>, radius: T) -> Result<Self> {
        Self::new(DomainKind::BallComplement { center, radius })
    }

    /// Validates the shape and returns the default ball radius.
    fn validate(kind: &DomainKind<T>) -> Result<T> {
        match kind {
            DomainKind::FullSpace { d } => {
                if *d < 1 {
                    return invalid("dimension must be at least 1");
                }
                Ok(T::infinity())
            }
            DomainKind::Ball { center, radius } | DomainKind::BallComplement { center, radius } => {
                if center.is_empty() || !finite_coords(center) {
                    return invalid("ball center must be a finite point");
                }
                if !(*radius > T::zero()) || !radius.is_finite() {
                    return invalid("ball radius must be positive and finite");
                }
                Ok(*radius)
            }
            DomainKind::Annulus { center, r_in, r_out } => {
                if center.is_empty() || !finite_coords(center) {
                    return invalid("annulus center must be a finite point");
                }
                if !(*r_in > T::zero() && r_in < r_out) || !r_out.is_finite() {
                    return invalid("annulus radii must satisfy 0 < r_in < r_out");
                }
                Ok(scalar::min(*r_in, (*r_out - *r_in) / T::lit(2.0)))
            }
            DomainKind::HalfSpace { d, a } => {
                if *d < 1 || !a.is_finite() {
                    return invalid("half-space needs d >= 1 and a finite threshold");
                }
                Ok(T::one())
            }
            DomainKind::BumpHalfSpace { d, a, b, width } => {
                if *d < 2 {
                    return invalid("bump half-space needs d >= 2");
                }
                if !(a > b) || !a.is_finite() || !b.is_finite() {
                    return invalid("bump half-space needs finite a > b");
                }
                if !(*width > T::zero()) || !width.is_finite() {
                    return invalid("bump width must be positive and finite");
                }
                // Inverse of the largest curvature of the profile.
                let kappa = (*a - *b) * T::PI() * T::PI() / (T::lit(2.0) * *width * *width);
                Ok(T::one() / kappa)
            }
            DomainKind::IntervalUnion { intervals } => {
                if intervals.is_empty() {
                    return invalid("interval union must contain at least one interval");
                }
                let mut sorted = intervals.clone();
                sorted.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
                let mut r0 = T::infinity();
                for (i, &(lo, hi)) in sorted.iter().enumerate() {
                    if !lo.is_finite() || !hi.is_finite() || !(hi > lo) {
                        return invalid("intervals must be finite with positive length");
                    }
                    r0 = scalar::min(r0, (hi - lo) / T::lit(2.0));
                    if i > 0 {
                        let gap = lo - sorted[i - 1].1;
                        if !(gap > T::zero()) {
                            return invalid("intervals must be disjoint with a positive gap");
                        }
                        r0 = scalar::min(r0, gap / T::lit(2.0));
                    }
                }
                Ok(r0)
            }
        }
    }

    /// Same set with a smaller declared ball radius.
    pub fn with_r0(mut self, r0: T) -> Result<Self> {
        let max = Self::validate(&self.kind)?;
        let natural = match self.kind {
            DomainKind::HalfSpace { .. } | DomainKind::FullSpace { .. } => T::infinity(),
            _ => max,
        };
        if !(r0 > T::zero() && r0 <= natural) {
            return invalid("r0 must be positive and at most the largest admissible ball radius");
        }
        self.r0 = r0;
        Ok(self)
    }

    pub fn kind(&self) -> &DomainKind<T> {
        &self.kind
    }

    pub fn r0(&self) -> T {
        self.r0
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            DomainKind::FullSpace { d } | DomainKind::HalfSpace { d, .. } | DomainKind::BumpHalfSpace { d, .. } => *d,
            DomainKind::Ball { center, .. }
            | DomainKind::Annulus { center, .. }
            | DomainKind::BallComplement { center, .. } => center.len(),
            DomainKind::IntervalUnion { .. } => 1,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(
            self.kind,
            DomainKind::Ball { .. } | DomainKind::Annulus { .. } | DomainKind::IntervalUnion { .. }
        )
    }

    /// Diameter of a bounded domain.
    pub fn diameter(&self) -> Option<T> {
        match &self.kind {
            DomainKind::Ball { radius, .. } => Some(T::lit(2.0) * *radius),
            DomainKind::Annulus { r_out, .. } => Some(T::lit(2.0) * *r_out),
            DomainKind::IntervalUnion { intervals } => {
                let lo = intervals.iter().map(|i| i.0).fold(T::infinity(), scalar::min);
                let hi = intervals.iter().map(|i| i.1).fold(T::neg_infinity(), scalar::max);
                Some(hi - lo)
            }
            _ => None,
        }
    }

    /// A point of largest `δ_D` in a bounded domain.
    pub fn deepest_point(&self) -> Option<Vec<T>> {
        match &self.kind {
            DomainKind::Ball { center, .. } => Some(center.clone()),
            DomainKind::Annulus { center, r_in, r_out } => {
                let mut x = center.clone();
                x[0] = x[0] + (*r_in + *r_out) / T::lit(2.0);
                Some(x)
            }
            DomainKind::IntervalUnion { intervals } => intervals
                .iter()
                .copied()
                .fold(None, |best: Option<(T, T)>, iv| match best {
                    Some(b) if b.1 - b.0 >= iv.1 - iv.0 => Some(b),
                    _ => Some(iv),
                })
                .map(|(lo, hi)| vec![(lo + hi) / T::lit(2.0)]),
            _ => None,
        }
    }

    /// Image of the domain under `x ↦ factor · x`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        if !(factor > T::zero()) || !factor.is_finite() {
            return invalid("scale factor must be positive and finite");
        }
        let s = |v: &[T]| v.iter().map(|&c| c * factor).collect::<Vec<_>>();
        let kind = match &self.kind {
            DomainKind::FullSpace { d } => DomainKind::FullSpace { d: *d },
            DomainKind::Ball { center, radius } => DomainKind::Ball {
                center: s(center),
                radius: *radius * factor,
            },
            DomainKind::Annulus { center, r_in, r_out } => DomainKind::Annulus {
                center: s(center),
                r_in: *r_in * factor,
                r_out: *r_out * factor,
            },
            DomainKind::HalfSpace { d, a } => DomainKind::HalfSpace { d: *d, a: *a * factor },
            DomainKind::BumpHalfSpace { d, a, b, width } => DomainKind::BumpHalfSpace {
                d: *d,
                a: *a * factor,
                b: *b * factor,
                width: *width * factor,
            },
            DomainKind::IntervalUnion { intervals } => DomainKind::IntervalUnion {
                intervals: intervals.iter().map(|&(lo, hi)| (lo * factor, hi * factor)).collect(),
            },
            DomainKind::BallComplement { center, radius } => DomainKind::BallComplement {
                center: s(center),
                radius: *radius * factor,
            },
        };
        let r0 = self.r0 * factor;
        Ok(Self { kind, r0 })
    }

    fn check_dim(&self, x: &[T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Membership in the open set.
    pub fn contains(&self, x: &[T]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.is_inside(x))
    }

    /// Membership without the dimension check.
    pub fn is_inside(&self, x: &[T]) -> bool {
        if !finite_coords(x) {
            return false;
        }
        match &self.kind {
            DomainKind::FullSpace { .. } => true,
            DomainKind::Ball { center, radius } => scalar::dist(x, center) < *radius,
            DomainKind::Annulus { center, r_in, r_out } => {
                let r = scalar::dist(x, center);
                r > *r_in && r < *r_out
            }
            DomainKind::HalfSpace { a, .. } => x[x.len() - 1] > *a,
            DomainKind::BumpHalfSpace { a, b, width, .. } => {
                let n = x.len() - 1;
                x[n] > bump(scalar::norm(&x[..n]), *a, *b, *width)
            }
            DomainKind::IntervalUnion { intervals } => intervals.iter().any(|&(lo, hi)| x[0] > lo && x[0] < hi),
            DomainKind::BallComplement { center, radius } => scalar::dist(x, center) > *radius,
        }
    }

    /// `δ_D(x)`, zero outside the domain.
    pub fn dist_to_complement(&self, x: &[T]) -> Result<T> {
        self.check_dim(x)?;
        Ok(self.delta(x))
    }

    /// `δ_D(x)` without the dimension check.
    pub fn delta(&self, x: &[T]) -> T {
        if !self.is_inside(x) {
            return T::zero();
        }
        match &self.kind {
            DomainKind::FullSpace { .. } => T::infinity(),
            DomainKind::Ball { center, radius } => *radius - scalar::dist(x, center),
            DomainKind::Annulus { center, r_in, r_out } => {
                let r = scalar::dist(x, center);
                scalar::min(r - *r_in, *r_out - r)
            }
            DomainKind::HalfSpace { a, .. } => x[x.len() - 1] - *a,
            DomainKind::BumpHalfSpace { a, b, width, .. } => {
                let n = x.len() - 1;
                let rho = scalar::norm(&x[..n]);
                let s = bump_projection(rho, x[n], *a, *b, *width);
                let h = bump(s, *a, *b, *width);
                ((s - rho) * (s - rho) + (x[n] - h) * (x[n] - h)).sqrt()
            }
            DomainKind::IntervalUnion { intervals } => intervals
                .iter()
                .find(|&&(lo, hi)| x[0] > lo && x[0] < hi)
                .map(|&(lo, hi)| scalar::min(x[0] - lo, hi - x[0]))
                .unwrap_or(T::zero()),
            DomainKind::BallComplement { center, radius } => scalar::dist(x, center) - *radius,
        }
    }

    /// A nearest point `z_x` of the boundary to an interior point `x`.
    pub fn nearest_boundary_point(&self, x: &[T]) -> Result<Vec<T>> {
        self.check_dim(x)?;
        if !self.is_inside(x) {
            return Err(Error::NotInDomain);
        }
        let radial = |center: &[T], r: T| -> Vec<T> {
            let dist = scalar::dist(x, center);
            if dist == T::zero() {
                let mut z = center.to_vec();
                z[0] = z[0] + r;
                return z;
            }
            center.iter().zip(x).map(|(&c, &v)| c + (v - c) * r / dist).collect()
        };
        Ok(match &self.kind {
            DomainKind::FullSpace { .. } => return Err(Error::NoWitness("full space has no boundary")),
            DomainKind::Ball { center, radius } | DomainKind::BallComplement { center, radius } => {
                radial(center, *radius)
            }
            DomainKind::Annulus { center, r_in, r_out } => {
                let r = scalar::dist(x, center);
                if r - *r_in <= *r_out - r {
                    radial(center, *r_in)
                } else {
                    radial(center, *r_out)
                }
            }
            DomainKind::HalfSpace { a, .. } => {
                let mut z = x.to_vec();
                let n = z.len() - 1;
                z[n] = *a;
                z
            }
            DomainKind::BumpHalfSpace { a, b, width, .. } => {
                let n = x.len() - 1;
                let rho = scalar::norm(&x[..n]);
                let s = bump_projection(rho, x[n], *a, *b, *width);
                let mut z = vec![T::zero(); x.len()];
                if rho > T::zero() {
                    for i in 0..n {
                        z[i] = x[i] * s / rho;
                    }
                } else {
                    z[0] = s;
                }
                z[n] = bump(s, *a, *b, *width);
                z
            }
            DomainKind::IntervalUnion { intervals } => {
                let &(lo, hi) = intervals
                    .iter()
                    .find(|&&(lo, hi)| x[0] > lo && x[0] < hi)
                    .expect("inside one interval");
                vec![if x[0] - lo <= hi - x[0] { lo } else { hi }]
            }
        })
    }

    /// Ball `B(x₀, r₀) ⊆ D` touching the boundary at `z_x`, with `x` on `[z_x, x₀]`.
    pub fn interior_ball_witness(&self, x: &[T]) -> Result<(Vec<T>, T)> {
        self.check_dim(x)?;
        if !self.is_inside(x) {
            return Err(Error::NotInDomain);
        }
        if matches!(self.kind, DomainKind::FullSpace { .. }) {
            return Err(Error::NoWitness("full space has no boundary"));
        }
        let delta = self.delta(x);
        if !(delta < self.r0) {
            return Err(Error::NoWitness("delta_D(x) >= r0"));
        }
        let z = self.nearest_boundary_point(x)?;
        let len = scalar::dist(x, &z);
        let center = z.iter().zip(x).map(|(&zi, &xi)| zi + self.r0 * (xi - zi) / len).collect();
        Ok((center, self.r0))
    }
}

/// Cosine bump profile as a function of `ρ = |x̂|`.
fn bump<T: Real>(rho: T, a: T, b: T, w: T) -> T {
    if rho >= w {
        return b;
    }
    b + (a - b) * (T::one() + (T::PI() * rho / w).cos()) / T::lit(2.0)
}

fn bump_slope<T: Real>(rho: T, a: T, b: T, w: T) -> T {
    if rho >= w {
        return T::zero();
    }
    -(a - b) * T::PI() / (T::lit(2.0) * w) * (T::PI() * rho / w).sin()
}

/// Radial coordinate `s ≥ 0` of the boundary point nearest to `(ρ, y)`.
///
/// The squared distance is scanned on a fine grid of `[0, w]`, and the best
/// cell is refined by bisection on the derivative to `1e-10`.
fn bump_projection<T: Real>(rho: T, y: T, a: T, b: T, w: T) -> T {
    let f = |s: T| (s - rho) * (s - rho) + (y - bump(s, a, b, w)) * (y - bump(s, a, b, w));
    let df = |s: T| T::lit(2.0) * ((s - rho) - (y - bump(s, a, b, w)) * bump_slope(s, a, b, w));
    // On the flat part the nearest point is directly below.
    let mut best_s = scalar::max(rho, w);
    let mut best = f(best_s);
    let n = 400usize;
    let h = w / T::count(n);
    let mut best_i = None;
    for i in 0..=n {
        let s = h * T::count(i);
        let v = f(s);
        if v < best {
            best = v;
            best_s = s;
            best_i = Some(i);
        }
    }
    if let Some(i) = best_i {
        let lo0 = h * T::count(i.saturating_sub(1));
        let hi0 = scalar::min(w, h * T::count(i + 1));
        let (mut lo, mut hi) = (lo0, hi0);
        if df(lo) < T::zero() && df(hi) > T::zero() {
            while hi - lo > T::lit(1e-11) {
                let mid = T::lit(0.5) * (lo + hi);
                if df(mid) < T::zero() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = T::lit(0.5) * (lo + hi);
            if f(s) < best {
                best_s = s;
            }
        }
    }
    best_s
}
