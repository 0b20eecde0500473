//! Finite-prefix certificates for the Delone property: angular separation
//! and covering of spherical sequences, Euclidean minimum distance and
//! covering radius of point sets, gap statistics of circle sequences and
//! density counts.
//!
//! Asymptotic conditions are checked on a range of `k` split into decade
//! buckets; a certificate passes only when no bucket minimum falls below
//! half the median of the bucket minima.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dist2_sq, frac, geodesic_distance, norm2, GeomError, UnitVector};
use crate::spiral::SpiralSet;

/// Seed of the fixed shuffle used by [`min_pairwise_distance`].
pub const SHUFFLE_SEED: u64 = 0x5eed_0f_d15c;

/// A bucket fails when its minimum is below this fraction of the median.
pub const BUCKET_FLOOR: f64 = 0.5;

/// Relative slack for the radial-law ball counts.
pub const COUNT_SLACK: f64 = 1e-9;

/// Tolerance of the numeric cap-measure integral for `d >= 3`.
pub const CAP_INTEGRAL_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("index {needed} needed at k = {k}, but only {available} terms are available")]
    InsufficientPrefix {
        k: usize,
        needed: usize,
        available: usize,
    },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("empty annulus ({0}, {1})")]
    EmptyAnnulus(f64, f64),
    #[error("annulus outer radius {r_hi} exceeds the largest point norm {max_norm}")]
    AnnulusBeyondPrefix { r_hi: f64, max_norm: f64 },
    #[error("gap window at R = {0} is empty")]
    EmptyWindow(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub type Result<T> = std::result::Result<T, VerifyError>;

/// Minimum of a statistic over the `k` in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: usize,
    pub hi: usize,
    pub min: f64,
    /// `(k, m)` attaining the minimum.
    pub witness: (usize, i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub kappa: f64,
    pub k_range: (usize, usize),
    pub per_decade_min: Vec<Bucket>,
    pub global_min: f64,
    pub median_bucket_min: f64,
    /// Indices into `per_decade_min` of buckets below the floor.
    pub failing_buckets: Vec<usize>,
    pub pass: bool,
}

fn check_unit_list(u: &[UnitVector]) -> Result<usize> {
    let n = u
        .first()
        .map(|v| v.dim())
        .ok_or(VerifyError::TooFewPoints { needed: 1, got: 0 })?;
    if let Some(v) = u.iter().find(|v| v.dim() != n) {
        return Err(GeomError::DimensionMismatch(n, v.dim()).into());
    }
    Ok(n)
}

/// `floor(c k^(1 - 1/n))`.
pub fn window_size(c: f64, k: usize, n: usize) -> usize {
    (c * (k as f64).powf(1.0 - 1.0 / n as f64)).floor() as usize
}

/// `u_k` lives at `u[k - 1]`.
fn term(u: &[UnitVector], k: usize, m: i64) -> &UnitVector {
    &u[(k as i64 + m - 1) as usize]
}

fn ensure_window(k: usize, w: usize, available: usize) -> Result<()> {
    if w >= k {
        return Err(VerifyError::InsufficientPrefix {
            k,
            needed: 0,
            available,
        });
    }
    if k + w > available {
        return Err(VerifyError::InsufficientPrefix {
            k,
            needed: k + w,
            available,
        });
    }
    Ok(())
}

/// Splits `[k_min, k_max]` at powers of ten.
pub fn decade_buckets(k_min: usize, k_max: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut lo = k_min;
    while lo <= k_max {
        let mut next = 1usize;
        while next <= lo {
            next *= 10;
        }
        let hi = (next - 1).min(k_max);
        out.push((lo, hi));
        lo = hi + 1;
    }
    out
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn bucketize(
    k_min: usize,
    k_max: usize,
    per_k: &[(f64, i64)],
) -> (Vec<Bucket>, f64, f64, Vec<usize>, bool) {
    let buckets: Vec<Bucket> = decade_buckets(k_min, k_max)
        .into_iter()
        .map(|(lo, hi)| {
            let mut best = (f64::INFINITY, (lo, 0));
            for k in lo..=hi {
                let (v, m) = per_k[k - k_min];
                if v < best.0 {
                    best = (v, (k, m));
                }
            }
            Bucket {
                lo,
                hi,
                min: best.0,
                witness: best.1,
            }
        })
        .collect();
    let global = buckets.iter().map(|b| b.min).fold(f64::INFINITY, f64::min);
    let med = median(&buckets.iter().map(|b| b.min).collect::<Vec<_>>());
    let failing: Vec<usize> = buckets
        .iter()
        .enumerate()
        .filter(|(_, b)| !(b.min >= BUCKET_FLOOR * med))
        .map(|(i, _)| i)
        .collect();
    let pass = global > 0.0 && failing.is_empty();
    (buckets, global, med, failing, pass)
}

/// `min k^(1/n) d(u_(k+m), u_k)` over `k_min <= k <= k_max` and
/// `1 <= |m| <= floor(kappa k^(1 - 1/n))`.
pub fn separation_statistic(
    u: &[UnitVector],
    kappa: f64,
    k_min: usize,
    k_max: usize,
) -> Result<SeparationReport> {
    let n = check_unit_list(u)?;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(VerifyError::InvalidParameter(format!("kappa {kappa}")));
    }
    if k_min == 0 || k_min > k_max {
        return Err(VerifyError::InvalidParameter(format!(
            "k range [{k_min}, {k_max}]"
        )));
    }
    for k in k_min..=k_max {
        ensure_window(k, window_size(kappa, k, n), u.len())?;
    }
    let per_k: Vec<(f64, i64)> = (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            let w = window_size(kappa, k, n) as i64;
            let scale = (k as f64).powf(1.0 / n as f64);
            let uk = term(u, k, 0);
            let mut best = (f64::INFINITY, 0i64);
            for m in (-w..0).chain(1..=w) {
                let d = scale * uk.angle_to(term(u, k, m));
                if d < best.0 {
                    best = (d, m);
                }
            }
            best
        })
        .collect();
    let (per_decade_min, global_min, median_bucket_min, failing_buckets, pass) =
        bucketize(k_min, k_max, &per_k);
    Ok(SeparationReport {
        kappa,
        k_range: (k_min, k_max),
        per_decade_min,
        global_min,
        median_bucket_min,
        failing_buckets,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub c: f64,
    #[serde(rename = "C")]
    pub big_c: f64,
    pub k_samples: Vec<usize>,
    pub directions_per_k: usize,
    pub seed: u64,
    /// Per sampled `k`, the largest `k^(1/n) min_m d(u_(k+m), v)` over `v`.
    pub max_scaled_distance: Vec<f64>,
    pub worst_defect: f64,
    pub pass: bool,
}

/// For each sampled `k` and direction `v`, `k^(1/n) min d(u_(k+m), v)` over
/// `|m| <= floor(c k^(1 - 1/n))` is compared to `C`.
pub fn covering_check(
    u: &[UnitVector],
    c: f64,
    big_c: f64,
    k_samples: &[usize],
    n_dirs: usize,
    seed: u64,
) -> Result<CoveringReport> {
    let n = check_unit_list(u)?;
    if !(c > 0.0 && big_c > 0.0 && n_dirs > 0) {
        return Err(VerifyError::InvalidParameter(format!(
            "c = {c}, C = {big_c}, directions = {n_dirs}"
        )));
    }
    for &k in k_samples {
        if k == 0 {
            return Err(VerifyError::InvalidParameter("k = 0".into()));
        }
        ensure_window(k, window_size(c, k, n), u.len())?;
    }
    let dirs = sphere_directions(n, n_dirs, seed);
    let max_scaled_distance: Vec<f64> = k_samples
        .iter()
        .map(|&k| {
            let w = window_size(c, k, n) as i64;
            let scale = (k as f64).powf(1.0 / n as f64);
            dirs.par_iter()
                .map(|v| {
                    (-w..=w)
                        .map(|m| v.angle_to(term(u, k, m)))
                        .fold(f64::INFINITY, f64::min)
                        * scale
                })
                .reduce(|| 0.0, f64::max)
        })
        .collect();
    let worst_defect = max_scaled_distance
        .iter()
        .map(|&s| (s - big_c).max(0.0))
        .fold(0.0, f64::max);
    Ok(CoveringReport {
        c,
        big_c,
        k_samples: k_samples.to_vec(),
        directions_per_k: n_dirs,
        seed,
        max_scaled_distance,
        worst_defect,
        pass: worst_defect == 0.0,
    })
}

/// Deterministic, roughly uniform directions on `S^(n-1)`: shifted
/// equiangular points for `n = 2`, a randomly rotated spherical Fibonacci
/// set for `n = 3`, normalized Gaussians above.
pub fn sphere_directions(n: usize, count: usize, seed: u64) -> Vec<UnitVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match n {
        2 => {
            let shift: f64 = rng.gen();
            (0..count)
                .map(|i| {
                    let a = std::f64::consts::TAU * (i as f64 + shift) / count as f64;
                    UnitVector::new(vec![a.cos(), a.sin()]).expect("unit circle point")
                })
                .collect()
        }
        3 => {
            let rot = random_rotation3(&mut rng);
            let golden_angle = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let a = golden_angle * i as f64;
                    let p = [r * a.cos(), r * a.sin(), z];
                    let q: Vec<f64> = rot
                        .iter()
                        .map(|row| row[0] * p[0] + row[1] * p[1] + row[2] * p[2])
                        .collect();
                    UnitVector::normalize(q).expect("rotated unit vector")
                })
                .collect()
        }
        _ => (0..count)
            .map(|_| gaussian_direction(n, &mut rng))
            .collect(),
    }
}

fn gaussian_direction(n: usize, rng: &mut ChaCha8Rng) -> UnitVector {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = UnitVector::normalize(v) {
            return u;
        }
    }
}

fn random_rotation3(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    // Gram-Schmidt on Gaussian rows
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < 3 {
        let mut v: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        for r in &rows {
            let p = crate::geom::dot(&v, r);
            for i in 0..3 {
                v[i] -= p * r[i];
            }
        }
        let len = norm2(&v);
        if len > 1e-6 {
            rows.push(v.iter().map(|x| x / len).collect());
        }
    }
    [
        [rows[0][0], rows[0][1], rows[0][2]],
        [rows[1][0], rows[1][1], rows[1][2]],
        [rows[2][0], rows[2][1], rows[2][2]],
    ]
}

fn check_points(points: &[Vec<f64>], needed: usize) -> Result<usize> {
    if points.len() < needed {
        return Err(VerifyError::TooFewPoints {
            needed,
            got: points.len(),
        });
    }
    let n = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != n) {
        return Err(GeomError::DimensionMismatch(n, p.len()).into());
    }
    Ok(n)
}

/// Uniform grid over `R^n` keyed by integer cell coordinates.
struct Grid {
    cell: f64,
    cells: HashMap<Vec<i64>, Vec<usize>>,
}

impl Grid {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|x| (x / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, p: &[f64], idx: usize) {
        let key = self.key(p);
        self.cells.entry(key).or_default().push(idx);
    }

    fn get(&self, key: &[i64]) -> Option<&Vec<usize>> {
        self.cells.get(key)
    }
}

/// All integer offsets in `[-r, r]^n`, optionally only those on the shell
/// `max |o_i| = r`.
fn offsets(n: usize, r: i64, shell_only: bool) -> Vec<Vec<i64>> {
    let side = (2 * r + 1) as usize;
    let total = side.pow(n as u32);
    (0..total)
        .filter_map(|mut code| {
            let mut o = Vec::with_capacity(n);
            for _ in 0..n {
                o.push((code % side) as i64 - r);
                code /= side;
            }
            (!shell_only || o.iter().any(|x| x.abs() == r)).then_some(o)
        })
        .collect()
}

fn bbox_extent(points: &[Vec<f64>]) -> f64 {
    let n = points[0].len();
    (0..n)
        .map(|i| {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                    (lo.min(p[i]), hi.max(p[i]))
                });
            (hi - lo).max(lo.abs()).max(hi.abs())
        })
        .fold(0.0, f64::max)
}

/// Exact minimum over pairs by direct enumeration.
pub fn min_pairwise_distance_brute(points: &[Vec<f64>]) -> Result<f64> {
    check_points(points, 2)?;
    let best = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for j in (i + 1)..points.len() {
                best = best.min(dist2_sq(&points[i], &points[j]));
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    Ok(best.sqrt())
}

/// Exact minimum pairwise distance by randomized incremental insertion into
/// a grid whose cell size tracks the current best distance. Squared
/// distances are computed exactly as in [`min_pairwise_distance_brute`], so
/// both return the same bits.
pub fn min_pairwise_distance(points: &[Vec<f64>]) -> Result<f64> {
    let n = check_points(points, 2)?;
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(SHUFFLE_SEED));
    let mut best_sq = dist2_sq(&points[order[0]], &points[order[1]]);
    if best_sq == 0.0 {
        return Ok(0.0);
    }
    let extent = bbox_extent(points);
    let neighbours = offsets(n, 1, false);
    let build = |cell: f64, upto: usize| -> Grid {
        let mut g = Grid::new(cell);
        for &i in &order[..upto] {
            g.insert(&points[i], i);
        }
        g
    };
    let margin = 1.0 + 1e-6;
    let mut grid = build(best_sq.sqrt() * margin, 2);
    for pos in 2..order.len() {
        if extent / grid.cell > 1e8 {
            return min_pairwise_distance_brute(points);
        }
        let p = &points[order[pos]];
        let key = grid.key(p);
        let mut local = f64::INFINITY;
        let mut probe = key.clone();
        for o in &neighbours {
            for i in 0..n {
                probe[i] = key[i] + o[i];
            }
            if let Some(list) = grid.get(&probe) {
                for &j in list {
                    local = local.min(dist2_sq(p, &points[j]));
                }
            }
        }
        if local < best_sq {
            best_sq = local;
            if best_sq == 0.0 {
                return Ok(0.0);
            }
            if best_sq.sqrt() < grid.cell / 2.0 {
                grid = build(best_sq.sqrt() * margin, pos + 1);
                continue;
            }
        }
        grid.insert(p, order[pos]);
    }
    Ok(best_sq.sqrt())
}

/// Nearest-neighbour index over a fixed point set.
struct NearestIndex<'a> {
    points: &'a [Vec<f64>],
    grid: Grid,
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl<'a> NearestIndex<'a> {
    fn new(points: &'a [Vec<f64>]) -> Self {
        let n = points[0].len();
        let mut lo_f = vec![f64::INFINITY; n];
        let mut hi_f = vec![f64::NEG_INFINITY; n];
        for p in points {
            for i in 0..n {
                lo_f[i] = lo_f[i].min(p[i]);
                hi_f[i] = hi_f[i].max(p[i]);
            }
        }
        let widest = (0..n).map(|i| hi_f[i] - lo_f[i]).fold(0.0, f64::max);
        let floor = if widest > 0.0 { widest * 1e-6 } else { 1.0 };
        let volume: f64 = (0..n).map(|i| (hi_f[i] - lo_f[i]).max(floor)).product();
        let cell = (volume / points.len() as f64).powf(1.0 / n as f64);
        let mut grid = Grid::new(cell);
        for (i, p) in points.iter().enumerate() {
            grid.insert(p, i);
        }
        let lo = grid.key(&lo_f);
        let hi = grid.key(&hi_f);
        Self {
            points,
            grid,
            lo,
            hi,
        }
    }

    /// Distance from `x` to the nearest indexed point.
    fn nearest(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let key = self.grid.key(x);
        // rings closer than the bounding box are empty
        let (mut r0, mut max_ring) = (0i64, 0i64);
        for i in 0..n {
            let (k, l, h) = (key[i], self.lo[i], self.hi[i]);
            r0 = r0.max(l - k).max(k - h);
            max_ring = max_ring.max((k - l).abs()).max((h - k).abs());
        }
        let mut best = f64::INFINITY;
        let mut probe = key.clone();
        for r in r0..=max_ring {
            let ring_cells = (2 * r + 1).pow(n as u32) - (2 * r - 1).max(0).pow(n as u32);
            if ring_cells as usize > self.grid.cells.len() {
                for p in self.points {
                    best = best.min(dist2_sq(x, p));
                }
                return best.sqrt();
            }
            for o in offsets(n, r, true) {
                for i in 0..n {
                    probe[i] = key[i] + o[i];
                }
                if let Some(list) = self.grid.get(&probe) {
                    for &j in list {
                        best = best.min(dist2_sq(x, &self.points[j]));
                    }
                }
            }
            // every cell beyond ring r is at least r cells away
            if best.sqrt() <= r as f64 * self.grid.cell {
                break;
            }
        }
        best.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringRadiusEstimate {
    pub value: f64,
    pub annulus: (f64, f64),
    pub samples: usize,
    pub seed: u64,
    /// Sample point attaining `value`.
    pub witness: Vec<f64>,
}

/// Largest distance from a sampled point of the annulus
/// `r_lo <= |x| <= r_hi` (uniform in volume) to the set; a lower bound for
/// the covering radius of the set near that annulus.
pub fn covering_radius_estimate(
    points: &[Vec<f64>],
    annulus: (f64, f64),
    samples: usize,
    seed: u64,
) -> Result<CoveringRadiusEstimate> {
    let n = check_points(points, 1)?;
    let (r_lo, r_hi) = annulus;
    if !(r_lo >= 0.0 && r_hi > r_lo && r_hi.is_finite()) {
        return Err(VerifyError::EmptyAnnulus(r_lo, r_hi));
    }
    let max_norm = points.iter().map(|p| norm2(p)).fold(0.0, f64::max);
    if r_hi > max_norm * (1.0 + 1e-12) {
        return Err(VerifyError::AnnulusBeyondPrefix { r_hi, max_norm });
    }
    if samples == 0 {
        return Err(VerifyError::InvalidParameter("samples = 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let (vlo, vhi) = (r_lo.powf(nf), r_hi.powf(nf));
    let queries: Vec<Vec<f64>> = (0..samples)
        .map(|_| {
            let dir = gaussian_direction(n, &mut rng);
            let t: f64 = rng.gen();
            let r = (vlo + t * (vhi - vlo)).powf(1.0 / nf);
            dir.coords().iter().map(|c| r * c).collect()
        })
        .collect();
    let index = NearestIndex::new(points);
    let dists: Vec<f64> = queries.par_iter().map(|q| index.nearest(q)).collect();
    let (best_i, value) =
        dists.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
        );
    Ok(CoveringRadiusEstimate {
        value,
        annulus,
        samples,
        seed,
        witness: queries[best_i].clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapWindow {
    pub r: f64,
    pub size: usize,
    pub min_gap: f64,
    pub max_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub h: f64,
    pub r_values: Vec<f64>,
    pub windows: Vec<GapWindow>,
    /// `min_R R g_R^h`.
    pub min_stat: f64,
    /// `max_R R G_R^h`.
    pub max_stat: f64,
}

/// Circular minimum and maximum gaps of `{x_k mod 1 : R^2 <= k < (R+h)^2}`
/// for each `R`; `x[0]` is `x_1`.
pub fn marklof_gaps(x: &[f64], h: f64, r_values: &[f64]) -> Result<GapReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(VerifyError::InvalidParameter(format!("h = {h}")));
    }
    let mut windows = Vec::with_capacity(r_values.len());
    for &r in r_values {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(VerifyError::InvalidParameter(format!("R = {r}")));
        }
        let first = (r * r).ceil() as usize;
        let end = ((r + h) * (r + h)).ceil() as usize;
        if end <= first {
            return Err(VerifyError::EmptyWindow(r));
        }
        if end - 1 > x.len() {
            return Err(VerifyError::InsufficientPrefix {
                k: first,
                needed: end - 1,
                available: x.len(),
            });
        }
        let mut vals: Vec<f64> = x[first - 1..end - 1].iter().map(|&v| frac(v)).collect();
        vals.sort_by(f64::total_cmp);
        let mut min_gap = f64::INFINITY;
        let mut max_gap: f64 = 0.0;
        for i in 0..vals.len() {
            let g = if i + 1 < vals.len() {
                vals[i + 1] - vals[i]
            } else {
                vals[0] + 1.0 - vals[i]
            };
            min_gap = min_gap.min(g);
            max_gap = max_gap.max(g);
        }
        windows.push(GapWindow {
            r,
            size: vals.len(),
            min_gap,
            max_gap,
        });
    }
    let min_stat = windows
        .iter()
        .map(|w| w.r * w.min_gap)
        .fold(f64::INFINITY, f64::min);
    let max_stat = windows.iter().map(|w| w.r * w.max_gap).fold(0.0, f64::max);
    Ok(GapReport {
        h,
        r_values: r_values.to_vec(),
        windows,
        min_stat,
        max_stat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub r_values: Vec<f64>,
    pub counts: Vec<usize>,
    pub normalized: Vec<f64>,
    pub caps: usize,
    pub seed: u64,
    pub cap_discrepancy: f64,
    /// Centre and angular radius of the worst cap.
    pub worst_cap: (Vec<f64>, f64),
}

/// Normalized surface measure of a cap of angular radius `rho` on `S^d`.
pub fn cap_measure(d: usize, rho: f64) -> f64 {
    let rho = rho.clamp(0.0, std::f64::consts::PI);
    match d {
        0 => f64::NAN,
        1 => rho / std::f64::consts::PI,
        2 => (1.0 - rho.cos()) / 2.0,
        _ => {
            let f = |t: f64| t.sin().powi(d as i32 - 1);
            let whole = adaptive_simpson(&f, 0.0, std::f64::consts::PI, CAP_INTEGRAL_TOLERANCE);
            adaptive_simpson(&f, 0.0, rho, CAP_INTEGRAL_TOLERANCE) / whole
        }
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    rec(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// Ball counts `#{k : |s_k| <= R}` and the spherical-cap discrepancy of the
/// directions over `caps` deterministic caps.
pub fn density_scan(
    spiral: &SpiralSet,
    r_values: &[f64],
    caps: usize,
    seed: u64,
) -> Result<DensityReport> {
    density_scan_points(spiral.points(), spiral.directions(), r_values, caps, seed)
}

/// [`density_scan`] on explicit points and their directions.
pub fn density_scan_points(
    points: &[Vec<f64>],
    directions: &[UnitVector],
    r_values: &[f64],
    caps: usize,
    seed: u64,
) -> Result<DensityReport> {
    let n = check_points(points, 1)?;
    let total = points.len();
    let mut counts = Vec::with_capacity(r_values.len());
    for &r in r_values {
        if !(r > 0.0 && r.is_finite()) {
            return Err(VerifyError::InvalidParameter(format!("R = {r}")));
        }
        let needed = r.powi(n as i32).floor() as usize;
        if needed > total {
            return Err(VerifyError::InsufficientPrefix {
                k: needed,
                needed,
                available: total,
            });
        }
        let limit = r * (1.0 + COUNT_SLACK);
        counts.push(points.iter().filter(|p| norm2(p) <= limit).count());
    }
    let normalized = counts
        .iter()
        .zip(r_values)
        .map(|(&c, r)| c as f64 / r.powi(n as i32))
        .collect();
    let (cap_discrepancy, worst_cap) = if caps == 0 {
        (0.0, (Vec::new(), 0.0))
    } else {
        cap_discrepancy(directions, caps, seed)?
    };
    Ok(DensityReport {
        r_values: r_values.to_vec(),
        counts,
        normalized,
        caps,
        seed,
        cap_discrepancy,
        worst_cap,
    })
}

/// `max |#{u_k in cap} / N - sigma(cap)|` over caps with seeded centres and
/// angular radii uniform in `(0, pi)`.
pub fn cap_discrepancy(u: &[UnitVector], caps: usize, seed: u64) -> Result<(f64, (Vec<f64>, f64))> {
    let n = check_unit_list(u)?;
    let centres = sphere_directions(n, caps, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let radii: Vec<f64> = (0..caps)
        .map(|_| std::f64::consts::PI * rng.gen::<f64>())
        .collect();
    let total = u.len() as f64;
    let per_cap: Vec<f64> = centres
        .par_iter()
        .zip(radii.par_iter())
        .map(|(w, &rho)| {
            let inside = u
                .iter()
                .filter(|v| geodesic_distance(w, v).map(|d| d <= rho).unwrap_or(false))
                .count();
            (inside as f64 / total - cap_measure(n - 1, rho)).abs()
        })
        .collect();
    let (i, worst) =
        per_cap.iter().enumerate().fold(
            (0, 0.0),
            |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc },
        );
    Ok((worst, (centres[i].coords().to_vec(), radii[i])))
}
