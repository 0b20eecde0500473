//! Euclidean and spherical primitives shared by every other module.
//!
//! Points of the unit sphere `S^d` in `R^n` (`n = d + 1`) are carried by
//! [`UnitVector`], which re-normalizes on construction. Geodesic distances
//! use a clamped arccos, with a chord-based branch for nearly identical
//! vectors where arccos loses precision.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Allowed deviation from unit norm for inputs handed to [`UnitVector::new`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// Slack added to the angular radius in [`cap_contains`].
pub const CAP_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("dimension {0} is below the minimum of 2")]
    DimensionTooSmall(usize),
    #[error("vector norm {0} is not within tolerance of 1")]
    NotUnit(f64),
    #[error("zero or non-finite vector has no direction")]
    ZeroVector,
    #[error("angular radius {0} outside (0, pi]")]
    BadRadius(f64),
}

pub type Result<T> = std::result::Result<T, GeomError>;

/// A point of the unit sphere in `R^n`, `n >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Accepts a vector within [`UNIT_NORM_TOLERANCE`] of unit norm and
    /// re-normalizes it.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(GeomError::DimensionTooSmall(coords.len()));
        }
        let norm = norm2(&coords);
        if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(GeomError::NotUnit(norm));
        }
        Ok(Self::rescale(coords, norm))
    }

    /// Direction of an arbitrary nonzero vector.
    pub fn normalize(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(GeomError::DimensionTooSmall(coords.len()));
        }
        let norm = norm2(&coords);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(GeomError::ZeroVector);
        }
        Ok(Self::rescale(coords, norm))
    }

    /// The `i`-th standard basis vector of `R^n` (zero-based `i`).
    pub fn basis(n: usize, i: usize) -> Result<Self> {
        if n < 2 {
            return Err(GeomError::DimensionTooSmall(n));
        }
        assert!(i < n, "basis index {i} out of range for dimension {n}");
        let mut coords = vec![0.0; n];
        coords[i] = 1.0;
        Ok(Self { coords })
    }

    fn rescale(mut coords: Vec<f64>, norm: f64) -> Self {
        if norm != 1.0 {
            for c in &mut coords {
                *c /= norm;
            }
        }
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.coords
    }

    pub fn last(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    /// Geodesic distance without the dimension check; callers guarantee it.
    #[inline]
    pub fn angle_to(&self, other: &UnitVector) -> f64 {
        angle_between(&self.coords, &other.coords)
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = GeomError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        UnitVector::new(v)
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Vec<f64> {
        u.coords
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn dist2_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    dist2_sq(a, b).sqrt()
}

/// Fractional part in `[0, 1)`.
#[inline]
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Distance from `x` to the nearest integer, `||x||`.
#[inline]
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round_ties_even()).abs()
}

#[inline]
fn angle_between(a: &[f64], b: &[f64]) -> f64 {
    let c = dot(a, b).clamp(-1.0, 1.0);
    if c > 0.9 {
        // chord form keeps precision for small angles
        2.0 * (0.5 * dist2(a, b)).min(1.0).asin()
    } else {
        c.acos()
    }
}

/// `d(u, v) = arccos(u . v)` in `[0, pi]`.
pub fn geodesic_distance(u: &UnitVector, v: &UnitVector) -> Result<f64> {
    if u.dim() != v.dim() {
        return Err(GeomError::DimensionMismatch(u.dim(), v.dim()));
    }
    Ok(angle_between(&u.coords, &v.coords))
}

/// A point `x = r u` in polar form. The origin is the only point without a
/// direction.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarPoint {
    radius: f64,
    direction: Option<UnitVector>,
}

impl PolarPoint {
    pub fn new(radius: f64, direction: UnitVector) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeomError::ZeroVector);
        }
        Ok(Self {
            radius,
            direction: Some(direction),
        })
    }

    pub fn origin() -> Self {
        Self {
            radius: 0.0,
            direction: None,
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn direction(&self) -> Option<&UnitVector> {
        self.direction.as_ref()
    }

    pub fn to_cartesian(&self) -> Option<Vec<f64>> {
        self.direction
            .as_ref()
            .map(|u| u.coords().iter().map(|c| self.radius * c).collect())
    }
}

pub fn polar_decompose(x: &[f64]) -> Result<PolarPoint> {
    let radius = norm2(x);
    let direction = UnitVector::normalize(x.to_vec())?;
    PolarPoint::new(radius, direction)
}

/// Outcome of [`polar_distance_ratio`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistanceRatio {
    /// Both points coincide, so both sides of the comparison vanish.
    ExactZero,
    Ratio(f64),
}

/// `|x - y| / (|r - rho| + sqrt(r rho) d(u, v))` for nonzero polar points.
pub fn polar_distance_ratio(x: &PolarPoint, y: &PolarPoint) -> Result<DistanceRatio> {
    let (u, v) = match (x.direction(), y.direction()) {
        (Some(u), Some(v)) => (u, v),
        _ => return Err(GeomError::ZeroVector),
    };
    let angle = geodesic_distance(u, v)?;
    let (r, rho) = (x.radius, y.radius);
    let denom = (r - rho).abs() + (r * rho).sqrt() * angle;
    let xc = x.to_cartesian().expect("direction present");
    let yc = y.to_cartesian().expect("direction present");
    let num = dist2(&xc, &yc);
    if denom == 0.0 || num == 0.0 {
        return Ok(DistanceRatio::ExactZero);
    }
    Ok(DistanceRatio::Ratio(num / denom))
}

/// Closed geodesic ball `C(w, rho)` on the sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalCap {
    center: UnitVector,
    angular_radius: f64,
}

impl SphericalCap {
    pub fn new(center: UnitVector, angular_radius: f64) -> Result<Self> {
        if !(angular_radius > 0.0 && angular_radius <= std::f64::consts::PI) {
            return Err(GeomError::BadRadius(angular_radius));
        }
        Ok(Self {
            center,
            angular_radius,
        })
    }

    pub fn center(&self) -> &UnitVector {
        &self.center
    }

    pub fn angular_radius(&self) -> f64 {
        self.angular_radius
    }
}

pub fn cap_contains(cap: &SphericalCap, u: &UnitVector) -> Result<bool> {
    Ok(geodesic_distance(&cap.center, u)? <= cap.angular_radius + CAP_SLACK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

    fn e(n: usize, i: usize) -> UnitVector {
        UnitVector::basis(n, i).unwrap()
    }

    #[test]
    fn geodesic_basic_cases() {
        assert_eq!(geodesic_distance(&e(3, 0), &e(3, 0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            geodesic_distance(&e(3, 0), &e(3, 0).neg()).unwrap(),
            PI,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            geodesic_distance(&e(3, 0), &e(3, 1)).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn geodesic_rejects_mismatched_dims() {
        assert_eq!(
            geodesic_distance(&e(2, 0), &e(3, 0)),
            Err(GeomError::DimensionMismatch(2, 3))
        );
    }

    #[test]
    fn geodesic_small_angle_is_accurate() {
        let t = 1e-9_f64;
        let u = UnitVector::new(vec![t.cos(), t.sin()]).unwrap();
        let d = geodesic_distance(&e(2, 0), &u).unwrap();
        assert!((d - t).abs() < 1e-20);
    }

    #[test]
    fn unit_vector_validation() {
        assert!(UnitVector::new(vec![1.0]).is_err());
        assert!(UnitVector::new(vec![1.0, 1.0]).is_err());
        let u = UnitVector::new(vec![1.0 + 5e-13, 0.0]).unwrap();
        assert_eq!(u.coords(), &[1.0, 0.0]);
        assert_eq!(
            UnitVector::normalize(vec![0.0, 0.0]),
            Err(GeomError::ZeroVector)
        );
    }

    #[test]
    fn polar_examples() {
        let p = polar_decompose(&[3.0, 4.0]).unwrap();
        assert_eq!(p.radius(), 5.0);
        assert_abs_diff_eq!(p.direction().unwrap().coords()[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p.direction().unwrap().coords()[1], 0.8, epsilon = 1e-15);

        let p = polar_decompose(&[0.0, 0.0, 2.0]).unwrap();
        assert_eq!(p.radius(), 2.0);
        assert_eq!(p.direction().unwrap().coords(), &[0.0, 0.0, 1.0]);

        let p = polar_decompose(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p.radius(), SQRT_2, epsilon = 1e-15);
        for c in p.direction().unwrap().coords() {
            assert_abs_diff_eq!(*c, SQRT_2 / 2.0, epsilon = 1e-15);
        }

        assert_eq!(polar_decompose(&[0.0, 0.0]), Err(GeomError::ZeroVector));
    }

    #[test]
    fn polar_ratio_examples() {
        let x = PolarPoint::new(1.0, e(2, 0)).unwrap();
        assert_eq!(
            polar_distance_ratio(&x, &x).unwrap(),
            DistanceRatio::ExactZero
        );

        let y = PolarPoint::new(2.0, e(2, 0)).unwrap();
        assert_eq!(
            polar_distance_ratio(&x, &y).unwrap(),
            DistanceRatio::Ratio(1.0)
        );

        let y = PolarPoint::new(1.0, e(2, 1)).unwrap();
        match polar_distance_ratio(&x, &y).unwrap() {
            DistanceRatio::Ratio(r) => assert_abs_diff_eq!(r, SQRT_2 / FRAC_PI_2, epsilon = 1e-14),
            other => panic!("unexpected {other:?}"),
        }
        assert!(polar_distance_ratio(&x, &PolarPoint::origin()).is_err());
    }

    #[test]
    fn cap_examples() {
        let cap = SphericalCap::new(e(3, 0), 0.1).unwrap();
        assert!(cap_contains(&cap, &e(3, 0)).unwrap());
        let cap = SphericalCap::new(e(3, 0), PI).unwrap();
        assert!(cap_contains(&cap, &e(3, 0).neg()).unwrap());
        let cap = SphericalCap::new(e(3, 0), FRAC_PI_4).unwrap();
        assert!(!cap_contains(&cap, &e(3, 1)).unwrap());
        assert!(SphericalCap::new(e(3, 0), 0.0).is_err());
        assert!(SphericalCap::new(e(3, 0), 3.2).is_err());
        assert!(cap_contains(&cap, &e(2, 0)).is_err());
    }

    #[test]
    fn frac_and_nearest_integer() {
        assert_eq!(frac(-0.25), 0.75);
        assert_eq!(frac(3.0), 0.0);
        assert!(frac(-1e-18) < 1.0);
        assert_eq!(dist_to_int(2.5), 0.5);
        assert_abs_diff_eq!(
            dist_to_int(1.618033988749895),
            0.381966011250105,
            epsilon = 1e-15
        );
    }

    #[test]
    fn unit_vector_serde_roundtrip() {
        let u = UnitVector::new(vec![0.6, 0.8]).unwrap();
        let s = serde_json::to_string(&u).unwrap();
        assert_eq!(s, "[0.6,0.8]");
        let back: UnitVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, u);
        assert!(serde_json::from_str::<UnitVector>("[2.0,0.0]").is_err());
    }
}
