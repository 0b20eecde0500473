//! Spiral sets `s_k = k^(1/n) u_k` built from a spherical sequence.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{frac, GeomError, UnitVector};
use crate::lift::{LiftError, LiftedSequence};
use crate::tetra::{greedy_select, GreedyConfig, TetraError};

/// Upper bound on `count * n` coordinates materialized by [`generate`].
pub const MAX_COORDINATES: usize = 1 << 27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpiralError {
    #[error("spiral indices start at 1")]
    ZeroIndex,
    #[error("count must be at least 1")]
    EmptyCount,
    #[error("{count} points in dimension {n} exceed the memory budget")]
    Budget { count: usize, n: usize },
    #[error("custom source has {available} directions, {requested} requested")]
    ShortSource { available: usize, requested: usize },
    #[error("source dimension {0} inconsistent with its directions")]
    Dimension(usize),
    #[error("ratio scan needs a nonempty input with increasing k")]
    BadScanInput,
    #[error("f({k}) = {value} is not positive")]
    NonPositive { k: u64, value: f64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Tetra(#[from] TetraError),
}

pub type Result<T> = std::result::Result<T, SpiralError>;

/// How the Fermat angle `k alpha` is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnit {
    /// `u_k = e(k alpha) = exp(2 pi i k alpha)`.
    #[default]
    Turns,
    /// `u_k = exp(i k alpha)`; the classical sunflower picture uses this
    /// with `alpha = phi`.
    Radians,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SphericalSource {
    /// Planar directions at angle `k alpha`, in turns (`e(k alpha)`) or
    /// radians.
    Fermat {
        alpha: f64,
        #[serde(default)]
        unit: AngleUnit,
    },
    Lifted(LiftedSequence),
    /// Greedy subsequence of the tetrahedral flow; `k_target` is ignored and
    /// replaced by the requested count.
    Tetra(GreedyConfig),
    /// An explicit list, `dirs[0]` being `u_1`.
    Custom {
        n: usize,
        dirs: Vec<UnitVector>,
    },
}

impl SphericalSource {
    pub fn dim(&self) -> usize {
        match self {
            SphericalSource::Fermat { .. } => 2,
            SphericalSource::Lifted(seq) => seq.dim(),
            SphericalSource::Tetra(_) => 3,
            SphericalSource::Custom { n, .. } => *n,
        }
    }

    pub fn custom(dirs: Vec<UnitVector>) -> Result<Self> {
        let n = dirs
            .first()
            .map(|u| u.dim())
            .ok_or(SpiralError::EmptyCount)?;
        if dirs.iter().any(|u| u.dim() != n) {
            return Err(SpiralError::Dimension(n));
        }
        Ok(SphericalSource::Custom { n, dirs })
    }

    /// `u_k` for a single index. The tetra source recomputes its greedy run.
    pub fn u(&self, k: u64) -> Result<UnitVector> {
        if k == 0 {
            return Err(SpiralError::ZeroIndex);
        }
        match self {
            SphericalSource::Fermat { alpha, unit } => Ok(fermat_direction(k, *alpha, *unit)),
            SphericalSource::Lifted(seq) => Ok(seq.u(k)?),
            SphericalSource::Tetra(cfg) => {
                let cfg = GreedyConfig {
                    k_target: k as usize,
                    ..cfg.clone()
                };
                let mut state = greedy_select(&cfg)?;
                Ok(state.u.pop().expect("k >= 1 directions"))
            }
            SphericalSource::Custom { dirs, .. } => {
                dirs.get(k as usize - 1)
                    .cloned()
                    .ok_or(SpiralError::ShortSource {
                        available: dirs.len(),
                        requested: k as usize,
                    })
            }
        }
    }

    /// `u_1, ..., u_count` in order.
    pub fn directions(&self, count: usize) -> Result<Vec<UnitVector>> {
        match self {
            SphericalSource::Fermat { alpha, unit } => Ok((1..=count as u64)
                .into_par_iter()
                .map(|k| fermat_direction(k, *alpha, *unit))
                .collect()),
            SphericalSource::Lifted(seq) => (1..=count as u64)
                .into_par_iter()
                .map(|k| seq.u(k).map_err(SpiralError::from))
                .collect(),
            SphericalSource::Tetra(cfg) => {
                let cfg = GreedyConfig {
                    k_target: count,
                    ..cfg.clone()
                };
                Ok(greedy_select(&cfg)?.u)
            }
            SphericalSource::Custom { dirs, .. } => {
                if dirs.len() < count {
                    return Err(SpiralError::ShortSource {
                        available: dirs.len(),
                        requested: count,
                    });
                }
                Ok(dirs[..count].to_vec())
            }
        }
    }
}

/// `(cos 2 pi k alpha, sin 2 pi k alpha)`, with the angle reduced mod 1 first.
pub fn fermat_u(k: u64, alpha: f64) -> UnitVector {
    fermat_direction(k, alpha, AngleUnit::Turns)
}

pub fn fermat_direction(k: u64, alpha: f64, unit: AngleUnit) -> UnitVector {
    let angle = match unit {
        AngleUnit::Turns => TAU * frac(k as f64 * alpha),
        AngleUnit::Radians => (k as f64 * alpha).rem_euclid(TAU),
    };
    UnitVector::new(vec![angle.cos(), angle.sin()]).expect("cos/sin pair has unit norm")
}

pub fn spiral_point(k: u64, source: &SphericalSource) -> Result<Vec<f64>> {
    let u = source.u(k)?;
    Ok(scale_direction(k, &u))
}

fn scale_direction(k: u64, u: &UnitVector) -> Vec<f64> {
    let r = (k as f64).powf(1.0 / u.dim() as f64);
    u.coords().iter().map(|c| r * c).collect()
}

/// A generated prefix `s_1, ..., s_N`; `points[i]` is `s_(i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiralSet {
    source: SphericalSource,
    directions: Vec<UnitVector>,
    points: Vec<Vec<f64>>,
}

impl SpiralSet {
    pub fn source(&self) -> &SphericalSource {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn directions(&self) -> &[UnitVector] {
        &self.directions
    }

    /// `s_k`, 1-based.
    pub fn point(&self, k: usize) -> Option<&[f64]> {
        k.checked_sub(1)
            .and_then(|i| self.points.get(i))
            .map(|p| p.as_slice())
    }

    /// Number of points with norm at most `r`, read off the radial law.
    pub fn ball_count(&self, r: f64) -> usize {
        self.points
            .iter()
            .filter(|p| crate::geom::norm2(p) <= r * (1.0 + 1e-12))
            .count()
    }
}

pub fn generate(source: &SphericalSource, count: usize) -> Result<SpiralSet> {
    if count == 0 {
        return Err(SpiralError::EmptyCount);
    }
    let n = source.dim();
    if count.saturating_mul(n) > MAX_COORDINATES {
        return Err(SpiralError::Budget { count, n });
    }
    let directions = source.directions(count)?;
    if directions.iter().any(|u| u.dim() != n) {
        return Err(SpiralError::Dimension(n));
    }
    let points = directions
        .par_iter()
        .enumerate()
        .map(|(i, u)| scale_direction(i as u64 + 1, u))
        .collect();
    Ok(SpiralSet {
        source: source.clone(),
        directions,
        points,
    })
}

/// Finite-prefix estimates of `liminf` and `limsup` of `f(k) / k^(1/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioScan {
    pub liminf_est: f64,
    pub limsup_est: f64,
    /// Set when the last quarter of the input reaches a maximum more than
    /// 5% above the third quarter's.
    pub unbounded: bool,
}

pub fn akiyama_ratio_scan(f_values: &[(u64, f64)], n: usize) -> Result<RatioScan> {
    if f_values.is_empty() || f_values.windows(2).any(|w| w[0].0 >= w[1].0) || n == 0 {
        return Err(SpiralError::BadScanInput);
    }
    if let Some(&(k, value)) = f_values.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(SpiralError::NonPositive { k, value });
    }
    let k_max = f_values.last().unwrap().0 as f64;
    let ratio = |&(k, v): &(u64, f64)| v / (k as f64).powf(1.0 / n as f64);
    let tail: Vec<f64> = f_values
        .iter()
        .filter(|(k, _)| *k as f64 > k_max / 2.0)
        .map(ratio)
        .collect();
    let liminf_est = tail.iter().copied().fold(f64::INFINITY, f64::min);
    let limsup_est = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let quarter_max = |lo: f64, hi: f64| {
        f_values
            .iter()
            .filter(|(k, _)| (*k as f64) > lo * k_max && (*k as f64) <= hi * k_max)
            .map(ratio)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let third = quarter_max(0.5, 0.75);
    let last = quarter_max(0.75, 1.0);
    let unbounded = third.is_finite() && last > 1.05 * third;
    Ok(RatioScan {
        liminf_est,
        limsup_est,
        unbounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dioph::make_bad_vector;
    use approx::assert_abs_diff_eq;

    const PHI: f64 = 1.618_033_988_749_895;

    fn golden() -> SphericalSource {
        SphericalSource::Fermat {
            alpha: PHI,
            unit: AngleUnit::Radians,
        }
    }

    #[test]
    fn fermat_examples() {
        let u = fermat_direction(1, PHI, AngleUnit::Radians);
        assert_abs_diff_eq!(u.coords()[0], -0.047220096, epsilon = 1e-6);
        assert_abs_diff_eq!(u.coords()[1], 0.998884509, epsilon = 1e-6);
        // e(phi) = e(phi - 1)
        let u = fermat_u(1, PHI);
        let t = TAU * (PHI - 1.0);
        assert_abs_diff_eq!(u.coords()[0], t.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(u.coords()[1], t.sin(), epsilon = 1e-14);
        for k in [1, 7, 1000] {
            assert_eq!(fermat_u(k, 0.0).coords(), &[1.0, 0.0]);
        }
        let u = fermat_u(2, 0.25);
        assert_abs_diff_eq!(u.coords()[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(u.coords()[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn spiral_point_examples() {
        let src = golden();
        let p = spiral_point(5, &src).unwrap();
        assert_abs_diff_eq!(p[0], -0.523236484, epsilon = 1e-6);
        assert_abs_diff_eq!(p[1], 2.173987944, epsilon = 1e-6);
        assert_eq!(
            spiral_point(1, &src).unwrap(),
            fermat_direction(1, PHI, AngleUnit::Radians).into_inner()
        );

        let mut dirs = vec![UnitVector::basis(3, 0).unwrap(); 7];
        dirs.push(UnitVector::basis(3, 2).unwrap());
        let custom = SphericalSource::custom(dirs).unwrap();
        let p = spiral_point(8, &custom).unwrap();
        assert_abs_diff_eq!(p[2], 2.0, epsilon = 1e-15);
        assert_eq!(&p[..2], &[0.0, 0.0]);
        assert!(matches!(
            spiral_point(0, &custom),
            Err(SpiralError::ZeroIndex)
        ));
        assert!(matches!(
            spiral_point(9, &custom),
            Err(SpiralError::ShortSource { .. })
        ));
    }

    #[test]
    fn generate_golden_prefix() {
        let src = golden();
        let set = generate(&src, 150).unwrap();
        assert_eq!(set.len(), 150);
        let last = set.point(150).unwrap();
        assert_abs_diff_eq!(last[0], -8.51120576646421, epsilon = 1e-6);
        assert_abs_diff_eq!(last[1], -8.80678013810419, epsilon = 1e-6);
        assert_eq!(generate(&src, 150).unwrap(), set);
        let one = generate(&src, 1).unwrap();
        assert_abs_diff_eq!(
            crate::geom::norm2(one.point(1).unwrap()),
            1.0,
            epsilon = 1e-15
        );
        assert!(matches!(generate(&src, 0), Err(SpiralError::EmptyCount)));
        assert!(matches!(
            generate(&src, MAX_COORDINATES),
            Err(SpiralError::Budget { .. })
        ));
    }

    #[test]
    fn lifted_norm_audit() {
        let seq = LiftedSequence::new(make_bad_vector(2).unwrap());
        let set = generate(&SphericalSource::Lifted(seq), 10_000).unwrap();
        assert_eq!(set.dim(), 3);
        for (i, p) in set.points().iter().enumerate() {
            let r = ((i + 1) as f64).cbrt();
            assert!((crate::geom::norm2(p) - r).abs() <= 1e-9 * r);
        }
        assert_eq!(set.ball_count(10.0), 1000);
    }

    #[test]
    fn tetra_source_matches_greedy() {
        let cfg = GreedyConfig::new(make_bad_vector(2).unwrap(), 1);
        let src = SphericalSource::Tetra(cfg.clone());
        let set = generate(&src, 30).unwrap();
        let state = greedy_select(&GreedyConfig {
            k_target: 30,
            ..cfg
        })
        .unwrap();
        assert_eq!(set.directions(), state.u.as_slice());
        assert_eq!(src.u(30).unwrap(), state.u[29]);
    }

    #[test]
    fn ratio_scan_examples() {
        for n in [2usize, 3] {
            let id: Vec<(u64, f64)> = (1..=1000u64)
                .map(|k| (k, (k as f64).powf(1.0 / n as f64)))
                .collect();
            let s = akiyama_ratio_scan(&id, n).unwrap();
            assert_abs_diff_eq!(s.liminf_est, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.limsup_est, 1.0, epsilon = 1e-12);
            assert!(!s.unbounded);
            let twice: Vec<(u64, f64)> = id.iter().map(|&(k, v)| (k, 2.0 * v)).collect();
            let s = akiyama_ratio_scan(&twice, n).unwrap();
            assert_abs_diff_eq!(s.liminf_est, 2.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s.limsup_est, 2.0, epsilon = 1e-12);
        }
        let linear: Vec<(u64, f64)> = (1..=1000u64).map(|k| (k, k as f64)).collect();
        let short = akiyama_ratio_scan(&linear[..100], 2).unwrap();
        let long = akiyama_ratio_scan(&linear, 2).unwrap();
        assert!(long.unbounded && short.unbounded);
        assert!(long.limsup_est > 3.0 * short.limsup_est);
        assert!(akiyama_ratio_scan(&[], 2).is_err());
        assert!(akiyama_ratio_scan(&[(2, 1.0), (1, 1.0)], 2).is_err());
        assert!(matches!(
            akiyama_ratio_scan(&[(1, 0.0)], 2),
            Err(SpiralError::NonPositive { k: 1, .. })
        ));
    }
}
