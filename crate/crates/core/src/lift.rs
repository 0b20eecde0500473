//! Lifting toral sequences to the sphere.
//!
//! A point `x` of the closed unit cube `[0,1]^d` is sent to `S^d` by
//! `tau_1(x) = p_N(s(2x - 1))` or `tau_2(x) = p_S(s(2x - 1))`, where `s`
//! contracts the cube `[-1,1]^d` onto the unit ball and `p_N`, `p_S` are the
//! inverse stereographic projections that miss the north and south pole.
//! Interiors go to the southern (`tau_1`) and northern (`tau_2`) open
//! hemispheres; the cube boundary goes to the equator under both maps.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dioph::BadVector;
use crate::geom::{frac, norm2, norm_inf, GeomError, UnitVector};

/// Allowed overshoot of the cube before an input is rejected.
pub const BOX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiftError {
    #[error("coordinate {value} outside the box {lo}..{hi}")]
    OutOfBox { value: f64, lo: f64, hi: f64 },
    #[error("branch must be 1 or 2, got {0}")]
    BadBranch(u8),
    #[error("index k must be at least 1")]
    ZeroIndex,
    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub type Result<T> = std::result::Result<T, LiftError>;

/// Which half-open box a toral point lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TorusConvention {
    /// `[0, 1)^d`
    Unit,
    /// `[-1, 1)^d`, the 2x2 torus
    Doubled,
}

impl TorusConvention {
    fn bounds(self) -> (f64, f64) {
        match self {
            TorusConvention::Unit => (0.0, 1.0),
            TorusConvention::Doubled => (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToralPoint {
    coords: Vec<f64>,
    convention: TorusConvention,
}

impl ToralPoint {
    pub fn new(coords: Vec<f64>, convention: TorusConvention) -> Result<Self> {
        let (lo, hi) = convention.bounds();
        if let Some(&value) = coords.iter().find(|&&c| !(c >= lo && c < hi)) {
            return Err(LiftError::OutOfBox { value, lo, hi });
        }
        Ok(Self { coords, convention })
    }

    /// Reduces arbitrary real coordinates into the box of `convention`.
    pub fn reduce(coords: &[f64], convention: TorusConvention) -> Self {
        let coords = match convention {
            TorusConvention::Unit => coords.iter().map(|&c| frac(c)).collect(),
            TorusConvention::Doubled => coords.iter().map(|&c| reduce_mod_two(c)).collect(),
        };
        Self { coords, convention }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn convention(&self) -> TorusConvention {
        self.convention
    }
}

/// `z -> 2 {(z + 1) / 2} - 1`, the representative of `z` in `[-1, 1)`.
#[inline]
pub fn reduce_mod_two(z: f64) -> f64 {
    let r = 2.0 * frac((z + 1.0) / 2.0) - 1.0;
    if r >= 1.0 {
        -1.0
    } else {
        r
    }
}

/// `s(x) = rho |u|_inf u` for `x = rho u`: contracts the cube `[-1,1]^m` onto
/// the closed unit ball, sending the cube boundary to the sphere.
pub fn cube_contraction(x: &[f64]) -> Result<Vec<f64>> {
    let sup = norm_inf(x);
    if let Some(&value) = x.iter().find(|c| !(c.abs() <= 1.0 + BOX_TOLERANCE)) {
        return Err(LiftError::OutOfBox {
            value,
            lo: -1.0,
            hi: 1.0,
        });
    }
    let r = norm2(x);
    if r == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let scale = sup / r;
    Ok(x.iter().map(|c| c * scale).collect())
}

fn stereo(x: &[f64], last_sign: f64) -> UnitVector {
    let s = x.iter().map(|c| c * c).sum::<f64>();
    let denom = 1.0 + s;
    let mut out: Vec<f64> = x.iter().map(|c| 2.0 * c / denom).collect();
    out.push(last_sign * (s - 1.0) / denom);
    UnitVector::new(out).expect("stereographic image has unit norm")
}

/// Inverse stereographic projection from the north pole: origin to the south
/// pole, `|x| = 1` to the equator.
pub fn stereo_north(x: &[f64]) -> UnitVector {
    stereo(x, 1.0)
}

/// Inverse stereographic projection from the south pole.
pub fn stereo_south(x: &[f64]) -> UnitVector {
    stereo(x, -1.0)
}

/// `tau_1` (branch 1) or `tau_2` (branch 2) on the closed unit cube.
pub fn tau(branch: u8, x: &[f64]) -> Result<UnitVector> {
    if let Some(&value) = x
        .iter()
        .find(|&&c| !(-BOX_TOLERANCE..=1.0 + BOX_TOLERANCE).contains(&c))
    {
        return Err(LiftError::OutOfBox {
            value,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let centered: Vec<f64> = x.iter().map(|c| (2.0 * c - 1.0).clamp(-1.0, 1.0)).collect();
    let ball = cube_contraction(&centered)?;
    match branch {
        1 => Ok(stereo_north(&ball)),
        2 => Ok(stereo_south(&ball)),
        b => Err(LiftError::BadBranch(b)),
    }
}

/// The spherical sequence `u_k = tau_1({k alpha})` for even `k` and
/// `tau_2({k alpha})` for odd `k`, living on `S^d` in `R^(d+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedSequence {
    alpha: BadVector,
}

impl LiftedSequence {
    pub fn new(alpha: BadVector) -> Self {
        Self { alpha }
    }

    pub fn alpha(&self) -> &BadVector {
        &self.alpha
    }

    /// Ambient dimension `n = d + 1`.
    pub fn dim(&self) -> usize {
        self.alpha.dim() + 1
    }

    pub fn toral_point(&self, k: u64) -> Vec<f64> {
        self.alpha.multiple_mod_one(k)
    }

    pub fn branch(k: u64) -> u8 {
        if k.is_multiple_of(2) {
            1
        } else {
            2
        }
    }

    pub fn u(&self, k: u64) -> Result<UnitVector> {
        lifted_u(k, self)
    }
}

pub fn lifted_u(k: u64, seq: &LiftedSequence) -> Result<UnitVector> {
    if k == 0 {
        return Err(LiftError::ZeroIndex);
    }
    tau(LiftedSequence::branch(k), &seq.toral_point(k))
}

/// Writes a circle value `y` as a lifted point: branch 1 with `x = 2{y}` when
/// `{y} < 1/2`, branch 2 with `x = 2 - 2{y}` otherwise.
pub fn circle_lift_decompose(y: f64) -> (f64, u8) {
    let f = frac(y);
    if f < 0.5 {
        (2.0 * f, 1)
    } else {
        (2.0 - 2.0 * f, 2)
    }
}

/// The circle lift maps `tau_1(x) = tau_2(-x) = e(x / 2)`.
pub fn circle_tau(branch: u8, x: f64) -> Result<UnitVector> {
    let t = match branch {
        1 => x / 2.0,
        2 => -x / 2.0,
        b => return Err(LiftError::BadBranch(b)),
    };
    let angle = 2.0 * std::f64::consts::PI * t;
    Ok(UnitVector::new(vec![angle.cos(), angle.sin()])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dioph::make_bad_vector;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn contraction_examples() {
        assert_eq!(cube_contraction(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let c = cube_contraction(&[1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(c[0], FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(c[1], FRAC_1_SQRT_2, epsilon = 1e-15);
        let c = cube_contraction(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(c[0], 0.5 * FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(c[0], 0.35355339059327373, epsilon = 1e-15);
        assert_eq!(cube_contraction(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(cube_contraction(&[1.1, 0.0]).is_err());
    }

    #[test]
    fn stereographic_examples() {
        assert_eq!(stereo_north(&[0.0, 0.0]).coords(), &[0.0, 0.0, -1.0]);
        assert_eq!(stereo_south(&[0.0, 0.0]).coords(), &[0.0, 0.0, 1.0]);
        assert_eq!(stereo_north(&[1.0, 0.0]).coords(), &[1.0, 0.0, 0.0]);
        assert_eq!(stereo_south(&[0.0, 1.0]).coords(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn tau_center_and_boundary() {
        let center = [0.5, 0.5];
        assert_eq!(tau(1, &center).unwrap().coords(), &[0.0, 0.0, -1.0]);
        assert_eq!(tau(2, &center).unwrap().coords(), &[0.0, 0.0, 1.0]);
        let edge = [0.0, 0.5];
        let a = tau(1, &edge).unwrap();
        let b = tau(2, &edge).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.last(), 0.0);
        assert!(tau(3, &center).is_err());
        assert!(tau(1, &[1.5, 0.5]).is_err());
    }

    #[test]
    fn lifted_golden_examples() {
        let seq = LiftedSequence::new(make_bad_vector(1).unwrap());
        assert_eq!(seq.dim(), 2);

        // k = 2: x = {2 phi}, branch 1, chain evaluated by hand
        let x2 = seq.toral_point(2)[0];
        assert_abs_diff_eq!(x2, 0.2360679774997898, epsilon = 1e-14);
        let y = 2.0 * x2 - 1.0;
        let expect = [2.0 * y / (1.0 + y * y), (y * y - 1.0) / (1.0 + y * y)];
        let u2 = lifted_u(2, &seq).unwrap();
        assert_abs_diff_eq!(u2.coords()[0], expect[0], epsilon = 1e-15);
        assert_abs_diff_eq!(u2.coords()[1], expect[1], epsilon = 1e-15);
        assert_abs_diff_eq!(u2.coords()[0], -0.8256, epsilon = 1e-4);
        assert_abs_diff_eq!(u2.coords()[1], -0.5642, epsilon = 1e-4);
        assert_abs_diff_eq!(norm2(u2.coords()), 1.0, epsilon = 1e-15);

        let u1 = lifted_u(1, &seq).unwrap();
        assert_abs_diff_eq!(seq.toral_point(1)[0], 0.6180339887498949, epsilon = 1e-15);
        assert!(u1.last() > 0.0);

        assert_eq!(lifted_u(0, &seq), Err(LiftError::ZeroIndex));
    }

    #[test]
    fn circle_lift_examples() {
        assert_eq!(circle_lift_decompose(0.25), (0.5, 1));
        assert_eq!(circle_lift_decompose(0.75), (0.5, 2));
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let (x, branch) = circle_lift_decompose(phi);
        assert_eq!(branch, 2);
        assert_abs_diff_eq!(x, 0.7639320225002102, epsilon = 1e-14);
        let target = [(2.0 * PI * phi).cos(), (2.0 * PI * phi).sin()];
        let rebuilt = circle_tau(branch, x).unwrap();
        assert_abs_diff_eq!(rebuilt.coords()[0], target[0], epsilon = 1e-12);
        assert_abs_diff_eq!(rebuilt.coords()[1], target[1], epsilon = 1e-12);
    }

    #[test]
    fn mod_two_reduction() {
        assert_eq!(reduce_mod_two(1.5), -0.5);
        assert_eq!(reduce_mod_two(0.25), 0.25);
        assert_eq!(reduce_mod_two(2.0), 0.0);
        assert_eq!(reduce_mod_two(-1.0), -1.0);
        assert_eq!(reduce_mod_two(1.0), -1.0);
        let p = ToralPoint::reduce(&[1.5, 0.25], TorusConvention::Doubled);
        assert_eq!(p.coords(), &[-0.5, 0.25]);
        assert!(ToralPoint::new(vec![1.0], TorusConvention::Unit).is_err());
        assert!(ToralPoint::new(vec![-1.0], TorusConvention::Doubled).is_ok());
    }
}
