//! Badly approximable vectors and the Diophantine statistics built on them:
//! simultaneous approximation constants, best approximants, dispersion of
//! multiples on the torus, and the lattices spanned by best approximants.
//!
//! All searches are exhaustive. Nothing here relies on lattice reduction for
//! correctness; the small reduction in [`approximant_lattice_stats`] only
//! speeds up closest-point queries and is cross-checked in tests.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{dist_to_int, frac};

/// Maximum number of integer vectors any single enumeration may visit.
pub const ENUMERATION_BUDGET: u64 = 200_000_000;

/// Budget for the transference check run when a [`BadVector`] is built.
const CONSTRUCTION_BUDGET: u64 = 2_000_000;

/// Default grid step per axis for toral dispersion in dimension 2 and 3.
pub const DEFAULT_DISPERSION_STEP: f64 = 1.0 / 512.0;

/// Default cap on the number of multiples used by [`epsilon_dense_bound`].
pub const DEFAULT_MAX_TERMS: u64 = 1 << 24;

const ROOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiophError {
    #[error("dimension {0} outside the supported range {1}..={2}")]
    UnsupportedDimension(usize, usize, usize),
    #[error("enumeration of {size} vectors exceeds budget {budget}")]
    BudgetExceeded { size: u64, budget: u64 },
    #[error("no multiple count up to {0} reaches the requested dispersion")]
    TermCapExceeded(u64),
    #[error("empty point set")]
    Empty,
    #[error("points have inconsistent dimensions")]
    RaggedPoints,
    #[error("epsilon {0} outside (0, 1/2)")]
    BadEpsilon(f64),
    #[error("polynomial has no sign change on [{0}, {1}]")]
    NoRootInBracket(f64, f64),
    #[error("polynomial must have degree at least 2")]
    DegreeTooLow,
    #[error("best approximant index {0} not reached below q = {1}")]
    ApproximantOutOfRange(usize, u64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, DiophError>;

/// Algebraic certificate of a [`BadVector`]: `alpha_j = scale * theta^j`
/// where `theta` is a real root of `min_poly` (coefficients listed from the
/// constant term upward).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub min_poly: Vec<i64>,
    pub theta: f64,
    pub scale: u32,
    pub residual: f64,
}

/// A vector believed badly approximable, built from powers of an algebraic
/// number of degree `d + 1`, together with its empirical badness checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BadVector {
    alpha: Vec<f64>,
    certificate: Certificate,
    label: String,
    transference_check: f64,
    transference_b_max: u64,
}

impl BadVector {
    /// Builds `(theta, theta^2, ..., theta^d)` from a polynomial of degree
    /// `d + 1` and a bracket containing exactly one sign change.
    pub fn from_polynomial(coeffs: &[i64], bracket: (f64, f64), label: &str) -> Result<Self> {
        if coeffs.len() < 3 {
            return Err(DiophError::DegreeTooLow);
        }
        let theta = real_root(coeffs, bracket)?;
        let residual = poly_eval(coeffs, theta).abs();
        if residual > ROOT_TOLERANCE {
            return Err(DiophError::NoRootInBracket(bracket.0, bracket.1));
        }
        let d = coeffs.len() - 2;
        let mut alpha = Vec::with_capacity(d);
        let mut pow = 1.0;
        for _ in 0..d {
            pow *= theta;
            alpha.push(pow);
        }
        let mut bv = BadVector {
            alpha,
            certificate: Certificate {
                min_poly: coeffs.to_vec(),
                theta,
                scale: 1,
                residual,
            },
            label: label.to_string(),
            transference_check: 0.0,
            transference_b_max: 0,
        };
        bv.run_transference_check()?;
        Ok(bv)
    }

    /// The vector `factor * alpha`, sharing the same certificate.
    pub fn scaled(&self, factor: u32) -> Result<Self> {
        if factor == 0 {
            return Err(DiophError::InvalidParameter("scale factor 0".into()));
        }
        let mut bv = BadVector {
            alpha: self.alpha.iter().map(|a| a * factor as f64).collect(),
            certificate: Certificate {
                scale: self.certificate.scale * factor,
                ..self.certificate.clone()
            },
            label: format!("{}x{}", factor, self.label),
            transference_check: 0.0,
            transference_b_max: 0,
        };
        bv.run_transference_check()?;
        Ok(bv)
    }

    fn run_transference_check(&mut self) -> Result<()> {
        let d = self.dim() as u32;
        let mut b_max = 50u64;
        while b_max > 1 && (2 * b_max + 1).pow(d) > CONSTRUCTION_BUDGET {
            b_max -= 1;
        }
        self.transference_check = transference_statistic(self, b_max)?;
        self.transference_b_max = b_max;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn certificate(&self) -> &Certificate {
        &self.certificate
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `(b_max, value)` of the transference statistic computed at construction.
    pub fn transference_check(&self) -> (u64, f64) {
        (self.transference_b_max, self.transference_check)
    }

    /// `||q alpha||` in the sup norm to the nearest integer vector.
    #[inline]
    pub fn sup_dist(&self, q: u64) -> f64 {
        let qf = q as f64;
        self.alpha
            .iter()
            .fold(0.0_f64, |m, a| m.max(dist_to_int(qf * a)))
    }

    /// The torus point `{q alpha}`.
    pub fn multiple_mod_one(&self, q: u64) -> Vec<f64> {
        let qf = q as f64;
        self.alpha.iter().map(|a| frac(qf * a)).collect()
    }
}

/// Default badly approximable vector in dimension `d` (1..=8).
///
/// d = 1 uses the golden ratio, d = 2 uses `2 cos(2 pi / 7)`, larger `d`
/// uses the real root in (1, 2) of `x^(d+1) - x - 1`.
pub fn make_bad_vector(d: usize) -> Result<BadVector> {
    match d {
        1 => BadVector::from_polynomial(&[-1, -1, 1], (1.0, 2.0), "golden"),
        2 => BadVector::from_polynomial(&[-1, -2, 1, 1], (1.0, 2.0), "cos2pi7"),
        3..=8 => {
            let mut coeffs = vec![0i64; d + 2];
            coeffs[0] = -1;
            coeffs[1] = -1;
            coeffs[d + 1] = 1;
            BadVector::from_polynomial(&coeffs, (1.0, 2.0), &format!("selmer{}", d + 1))
        }
        _ => Err(DiophError::UnsupportedDimension(d, 1, 8)),
    }
}

pub(crate) fn poly_eval(coeffs: &[i64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c as f64)
}

fn poly_deriv_eval(coeffs: &[i64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (i, &c)| acc * x + (i as f64) * c as f64)
}

/// Bisection to bracket width ~1e-15 followed by Newton polishing.
pub(crate) fn real_root(coeffs: &[i64], (mut lo, mut hi): (f64, f64)) -> Result<f64> {
    let (flo, fhi) = (poly_eval(coeffs, lo), poly_eval(coeffs, hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !(lo < hi) {
        return Err(DiophError::NoRootInBracket(lo, hi));
    }
    let neg_at_lo = flo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = poly_eval(coeffs, mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let dfx = poly_deriv_eval(coeffs, x);
        if dfx == 0.0 {
            break;
        }
        let next = x - poly_eval(coeffs, x) / dfx;
        if (next - x).abs() > (hi - lo).max(1e-15) {
            break;
        }
        x = next;
    }
    Ok(x)
}

/// `min_{1 <= q <= q_max} q^{1/d} ||q alpha||`.
pub fn badness_statistic(alpha: &BadVector, q_max: u64) -> f64 {
    let inv_d = 1.0 / alpha.dim() as f64;
    (1..=q_max.max(1))
        .map(|q| (q as f64).powf(inv_d) * alpha.sup_dist(q))
        .fold(f64::INFINITY, f64::min)
}

/// `min ||alpha . b|| * ||b||_inf^d` over nonzero integer `b` with
/// `||b||_inf <= b_max`, by exhaustive enumeration of one representative of
/// each `{b, -b}` pair.
pub fn transference_statistic(alpha: &BadVector, b_max: u64) -> Result<f64> {
    let d = alpha.dim();
    let side = 2 * b_max.max(1) + 1;
    let size = checked_power(side, d).map(|s| s - 1);
    match size {
        Some(size) if size <= ENUMERATION_BUDGET => {}
        _ => {
            return Err(DiophError::BudgetExceeded {
                size: size.unwrap_or(u64::MAX),
                budget: ENUMERATION_BUDGET,
            })
        }
    }
    let b_max = b_max.max(1) as i64;
    let a = alpha.alpha();
    // index -> vector with the last coordinate most significant; the
    // representative of {b, -b} is the one whose last nonzero entry is positive
    let total = side.pow(d as u32);
    let value = (0..total)
        .into_par_iter()
        .filter_map(|mut idx| {
            let mut dotp = 0.0;
            let mut sup = 0i64;
            let mut last_nonzero = 0i64;
            for aj in a.iter() {
                let bj = (idx % side) as i64 - b_max;
                idx /= side;
                if bj != 0 {
                    last_nonzero = bj;
                }
                sup = sup.max(bj.abs());
                dotp += aj * bj as f64;
            }
            if last_nonzero <= 0 {
                return None;
            }
            Some(dist_to_int(dotp) * (sup as f64).powi(d as i32))
        })
        .min_by(f64::total_cmp)
        .unwrap_or(f64::INFINITY);
    Ok(value)
}

fn checked_power(base: u64, exp: usize) -> Option<u64> {
    (0..exp).try_fold(1u64, |acc, _| acc.checked_mul(base))
}

/// One best simultaneous approximation `q alpha ~ p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestApproximant {
    pub q: u64,
    pub p: Vec<i64>,
    pub err: f64,
}

/// Every `q <= q_max` at which `||q alpha||` reaches a strict running minimum.
pub fn best_approximants(alpha: &BadVector, q_max: u64) -> Vec<BestApproximant> {
    let mut out: Vec<BestApproximant> = Vec::new();
    let mut best = f64::INFINITY;
    for q in 1..=q_max.max(1) {
        let err = alpha.sup_dist(q);
        if err < best {
            best = err;
            let qf = q as f64;
            let p = alpha
                .alpha()
                .iter()
                .map(|a| (qf * a).round_ties_even() as i64)
                .collect();
            out.push(BestApproximant { q, p, err });
        }
    }
    out
}

/// Result of a dispersion computation. `resolution` is the grid step when
/// the value is a grid lower bound; the true dispersion is then at most
/// `value + resolution / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub value: f64,
    pub resolution: Option<f64>,
}

/// Sup-norm dispersion of a point set on the unit torus, exact for `d = 1`
/// and on a grid of step [`DEFAULT_DISPERSION_STEP`] for `d = 2, 3`.
pub fn torus_dispersion(points: &[Vec<f64>]) -> Result<Dispersion> {
    torus_dispersion_with_step(points, DEFAULT_DISPERSION_STEP)
}

pub fn torus_dispersion_with_step(points: &[Vec<f64>], step: f64) -> Result<Dispersion> {
    let d = points.first().ok_or(DiophError::Empty)?.len();
    if points.iter().any(|p| p.len() != d) {
        return Err(DiophError::RaggedPoints);
    }
    if !(1..=3).contains(&d) {
        return Err(DiophError::UnsupportedDimension(d, 1, 3));
    }
    if d == 1 {
        let xs: Vec<f64> = points.iter().map(|p| frac(p[0])).collect();
        return Ok(Dispersion {
            value: 0.5 * max_circular_gap(xs),
            resolution: None,
        });
    }
    if !(step > 0.0 && step <= 0.5) {
        return Err(DiophError::InvalidParameter(format!("grid step {step}")));
    }
    let index = TorusIndex::new(points, d);
    let g = (1.0 / step).round() as usize;
    let h = 1.0 / g as f64;
    let nodes = g.pow(d as u32);
    let value = (0..nodes)
        .into_par_iter()
        .with_min_len(256)
        .map(|mut idx| {
            let mut y = [0.0; 3];
            for yj in y.iter_mut().take(d) {
                *yj = (idx % g) as f64 * h;
                idx /= g;
            }
            index.nearest_sup(&y[..d])
        })
        .reduce(|| 0.0, f64::max);
    Ok(Dispersion {
        value,
        resolution: Some(h),
    })
}

/// Largest gap between consecutive points of a set on the circle `R/Z`.
pub(crate) fn max_circular_gap(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let wrap = xs[0] + 1.0 - xs[xs.len() - 1];
    xs.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
}

#[inline]
fn torus_gap(a: f64, b: f64) -> f64 {
    let t = (a - b).abs();
    t.min(1.0 - t)
}

/// Bucket grid over the unit torus `[0,1)^d`, `d <= 3`, for sup-norm
/// nearest-point queries.
struct TorusIndex {
    d: usize,
    cells: usize,
    start: Vec<usize>,
    pts: Vec<[f64; 3]>,
}

impl TorusIndex {
    fn new(points: &[Vec<f64>], d: usize) -> Self {
        let cells = ((points.len() as f64).powf(1.0 / d as f64).floor() as usize).clamp(1, 1024);
        let total = cells.pow(d as u32);
        let keyed: Vec<(usize, [f64; 3])> = points
            .iter()
            .map(|p| {
                let mut c = [0.0; 3];
                for j in 0..d {
                    c[j] = frac(p[j]);
                }
                (Self::cell_of(&c[..d], cells), c)
            })
            .collect();
        let mut counts = vec![0usize; total + 1];
        for (k, _) in &keyed {
            counts[k + 1] += 1;
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut pts = vec![[0.0; 3]; keyed.len()];
        for (k, c) in keyed {
            pts[fill[k]] = c;
            fill[k] += 1;
        }
        Self {
            d,
            cells,
            start: counts,
            pts,
        }
    }

    fn cell_of(c: &[f64], cells: usize) -> usize {
        c.iter().rev().fold(0, |acc, &x| {
            acc * cells + ((x * cells as f64) as usize).min(cells - 1)
        })
    }

    fn scan_cell(&self, cell: usize, y: &[f64], best: &mut f64) {
        for p in &self.pts[self.start[cell]..self.start[cell + 1]] {
            let mut dist = 0.0_f64;
            for j in 0..self.d {
                dist = dist.max(torus_gap(p[j], y[j]));
                if dist >= *best {
                    break;
                }
            }
            if dist < *best {
                *best = dist;
            }
        }
    }

    fn nearest_sup(&self, y: &[f64]) -> f64 {
        let c = self.cells as i64;
        let h = 1.0 / self.cells as f64;
        let mut home = [0i64; 3];
        for j in 0..self.d {
            home[j] = ((y[j] * self.cells as f64) as i64).min(c - 1);
        }
        let mut best = f64::INFINITY;
        let mut r = 0i64;
        loop {
            if 2 * r + 1 >= c {
                for cell in 0..self.cells.pow(self.d as u32) {
                    self.scan_cell(cell, y, &mut best);
                }
                return best;
            }
            self.for_each_ring_cell(&home, r, |cell| self.scan_cell(cell, y, &mut best));
            // cells at ring r + 1 are at least r * h away along some axis
            if best <= r as f64 * h {
                return best;
            }
            r += 1;
        }
    }

    fn for_each_ring_cell(&self, home: &[i64; 3], r: i64, mut f: impl FnMut(usize)) {
        let c = self.cells as i64;
        let span = 2 * r + 1;
        let count = span.pow(self.d as u32);
        for mut idx in 0..count {
            let mut offs = [0i64; 3];
            let mut on_ring = false;
            for o in offs.iter_mut().take(self.d) {
                *o = idx % span - r;
                idx /= span;
                on_ring |= o.abs() == r;
            }
            if !on_ring {
                continue;
            }
            let mut cell = 0usize;
            for j in (0..self.d).rev() {
                cell = cell * self.cells + (home[j] + offs[j]).rem_euclid(c) as usize;
            }
            f(cell);
        }
    }
}

/// Which multiples of `alpha` enter a density search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Multiplier of the `q`-th term (1-based) of the filtered sequence.
    #[inline]
    pub fn multiplier(parity: Option<Parity>, q: u64) -> u64 {
        match parity {
            None => q,
            Some(Parity::Even) => 2 * q,
            Some(Parity::Odd) => 2 * q - 1,
        }
    }
}

/// Knobs for [`epsilon_dense_bound_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySearch {
    pub step: f64,
    pub max_terms: u64,
}

impl Default for DensitySearch {
    fn default() -> Self {
        Self {
            step: DEFAULT_DISPERSION_STEP,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }
}

/// Smallest number `m` of (filtered) multiples of `alpha` whose reduction
/// mod 1 has dispersion at most `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCertificate {
    pub epsilon: f64,
    pub m: u64,
    pub achieved_dispersion: f64,
    pub resolution: Option<f64>,
    pub parity: Option<Parity>,
    /// `m * epsilon^d`
    pub empirical_k: f64,
}

pub fn epsilon_dense_bound(
    alpha: &BadVector,
    epsilon: f64,
    parity: Option<Parity>,
) -> Result<DensityCertificate> {
    epsilon_dense_bound_with(alpha, epsilon, parity, DensitySearch::default())
}

pub fn epsilon_dense_bound_with(
    alpha: &BadVector,
    epsilon: f64,
    parity: Option<Parity>,
    search: DensitySearch,
) -> Result<DensityCertificate> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(DiophError::BadEpsilon(epsilon));
    }
    let points = |m: u64| -> Vec<Vec<f64>> {
        (1..=m)
            .map(|q| alpha.multiple_mod_one(Parity::multiplier(parity, q)))
            .collect()
    };
    let eval = |m: u64| torus_dispersion_with_step(&points(m), search.step);

    let mut hi = 1u64;
    let mut hi_disp = eval(hi)?;
    let mut lo = 0u64;
    while hi_disp.value > epsilon {
        if hi >= search.max_terms {
            return Err(DiophError::TermCapExceeded(search.max_terms));
        }
        lo = hi;
        hi = (hi * 2).min(search.max_terms);
        hi_disp = eval(hi)?;
    }
    // invariant: dispersion(lo) > epsilon (or lo = 0), dispersion(hi) <= epsilon
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let disp = eval(mid)?;
        if disp.value <= epsilon {
            hi = mid;
            hi_disp = disp;
        } else {
            lo = mid;
        }
    }
    Ok(DensityCertificate {
        epsilon,
        m: hi,
        achieved_dispersion: hi_disp.value,
        resolution: hi_disp.resolution,
        parity,
        empirical_k: hi as f64 * epsilon.powi(alpha.dim() as i32),
    })
}

/// The lattice `L = Z p/q + Z^d` attached to a best approximant. `basis`
/// holds integer numerators (one basis vector per row) over the common
/// denominator `q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximantLattice {
    pub q: u64,
    pub p: Vec<i64>,
    pub basis: Vec<Vec<i64>>,
}

impl ApproximantLattice {
    pub fn new(q: u64, p: Vec<i64>) -> Self {
        let d = p.len();
        let qi = q as i64;
        let mut gens: Vec<Vec<i128>> = vec![p.iter().map(|&x| x as i128).collect()];
        for i in 0..d {
            let mut row = vec![0i128; d];
            row[i] = qi as i128;
            gens.push(row);
        }
        let basis = hermite_rows(gens, d)
            .into_iter()
            .map(|r| r.into_iter().map(|x| x as i64).collect())
            .collect();
        Self { q, p, basis }
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    /// Index of the dual lattice `{v in Z^d : v . p = 0 mod q}` in `Z^d`.
    pub fn dual_index(&self) -> u64 {
        let g = self
            .p
            .iter()
            .fold(self.q as i64, |g, &x| gcd(g, x.rem_euclid(self.q as i64)));
        self.q / g as u64
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Row-style Hermite normal form; returns the `d` nonzero rows.
fn hermite_rows(mut rows: Vec<Vec<i128>>, d: usize) -> Vec<Vec<i128>> {
    let mut pivot_row = 0;
    for col in 0..d {
        loop {
            let nz: Vec<usize> = (pivot_row..rows.len())
                .filter(|&r| rows[r][col] != 0)
                .collect();
            if nz.is_empty() {
                break;
            }
            let min_r = *nz.iter().min_by_key(|&&r| rows[r][col].abs()).unwrap();
            rows.swap(pivot_row, min_r);
            let mut done = true;
            for r in (pivot_row + 1)..rows.len() {
                if rows[r][col] != 0 {
                    let f = rows[r][col].div_euclid(rows[pivot_row][col]);
                    for c in 0..d {
                        rows[r][c] -= f * rows[pivot_row][c];
                    }
                    if rows[r][col] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if rows[pivot_row][col] < 0 {
            for c in 0..d {
                rows[pivot_row][c] = -rows[pivot_row][c];
            }
        }
        if rows[pivot_row][col] != 0 {
            for r in 0..pivot_row {
                let f = rows[r][col].div_euclid(rows[pivot_row][col]);
                for c in 0..d {
                    rows[r][c] -= f * rows[pivot_row][c];
                }
            }
            pivot_row += 1;
        }
    }
    rows.truncate(pivot_row);
    rows
}

/// Shortest dual vector and covering radius of one approximant lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeStats {
    pub lattice: ApproximantLattice,
    pub mu1_dual: f64,
    pub shortest_dual: Vec<i64>,
    pub covering_radius: f64,
}

impl LatticeStats {
    pub fn product(&self) -> f64 {
        self.mu1_dual * self.covering_radius
    }
}

/// Statistics of the lattice attached to the `nu_index`-th (1-based) best
/// approximant of `alpha`, for `d <= 3`.
pub fn approximant_lattice_stats(alpha: &BadVector, nu_index: usize) -> Result<LatticeStats> {
    let d = alpha.dim();
    if !(1..=3).contains(&d) {
        return Err(DiophError::UnsupportedDimension(d, 1, 3));
    }
    if nu_index == 0 {
        return Err(DiophError::InvalidParameter("nu_index is 1-based".into()));
    }
    let mut q_max = 64u64;
    let approx = loop {
        let list = best_approximants(alpha, q_max);
        if list.len() >= nu_index {
            break list[nu_index - 1].clone();
        }
        if q_max >= 1 << 32 {
            return Err(DiophError::ApproximantOutOfRange(nu_index, q_max));
        }
        q_max *= 4;
    };
    lattice_stats(ApproximantLattice::new(approx.q, approx.p))
}

pub fn lattice_stats(lattice: ApproximantLattice) -> Result<LatticeStats> {
    let (mu1_dual, shortest_dual) = shortest_dual_vector(&lattice)?;
    let covering_radius = if lattice.dim() == 1 {
        // L = (g/q) Z
        let g = lattice.q / lattice.dual_index();
        g as f64 / (2.0 * lattice.q as f64)
    } else {
        covering_radius_search(&lattice)
    };
    Ok(LatticeStats {
        lattice,
        mu1_dual,
        shortest_dual,
        covering_radius,
    })
}

/// Exhaustive search for the shortest nonzero `v in Z^d` with
/// `v . p = 0 (mod q)`. Minkowski's theorem puts a nonzero dual vector in
/// the cube of half-side `index^{1/d}`, so the shortest one has Euclidean
/// norm at most `sqrt(d) index^{1/d}`, which bounds every coordinate.
fn shortest_dual_vector(lat: &ApproximantLattice) -> Result<(f64, Vec<i64>)> {
    let d = lat.dim();
    let index = lat.dual_index() as f64;
    let radius = ((d as f64).sqrt() * index.powf(1.0 / d as f64) + 1e-9).floor() as i64;
    let side = (2 * radius + 1) as u64;
    let size = checked_power(side, d).unwrap_or(u64::MAX);
    if size > ENUMERATION_BUDGET {
        return Err(DiophError::BudgetExceeded {
            size,
            budget: ENUMERATION_BUDGET,
        });
    }
    let q = lat.q as i128;
    let best = (0..size)
        .into_par_iter()
        .filter_map(|mut idx| {
            let mut v = [0i64; 3];
            let mut dotp: i128 = 0;
            let mut n2: i128 = 0;
            for j in 0..d {
                v[j] = (idx % side) as i64 - radius;
                idx /= side;
                dotp += v[j] as i128 * lat.p[j] as i128;
                n2 += (v[j] as i128) * (v[j] as i128);
            }
            (n2 > 0 && dotp.rem_euclid(q) == 0).then_some((n2, v))
        })
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or_else(|| DiophError::InvalidParameter("no dual vector found".into()))?;
    Ok(((best.0 as f64).sqrt(), best.1[..d].to_vec()))
}

/// Lattice basis (rows, real coordinates) after a size-reduction pass that
/// keeps closest-point rounding local.
fn reduced_basis(lat: &ApproximantLattice) -> Vec<Vec<f64>> {
    let q = lat.q as f64;
    let mut b: Vec<Vec<f64>> = lat
        .basis
        .iter()
        .map(|r| r.iter().map(|&x| x as f64 / q).collect())
        .collect();
    lll_reduce(&mut b);
    b
}

/// Textbook LLL with delta = 3/4 on a handful of real rows.
fn lll_reduce(b: &mut [Vec<f64>]) {
    let n = b.len();
    let dotv = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, c)| a * c).sum() };
    let gso = |b: &[Vec<f64>]| -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut bs: Vec<Vec<f64>> = Vec::with_capacity(b.len());
        let mut mu = vec![vec![0.0; b.len()]; b.len()];
        for i in 0..b.len() {
            let mut v = b[i].clone();
            for j in 0..i {
                mu[i][j] = dotv(&b[i], &bs[j]) / dotv(&bs[j], &bs[j]);
                for (vk, bk) in v.iter_mut().zip(&bs[j]) {
                    *vk -= mu[i][j] * bk;
                }
            }
            bs.push(v);
        }
        (bs, mu)
    };
    let mut k = 1;
    let mut guard = 0;
    while k < n && guard < 10_000 {
        guard += 1;
        for j in (0..k).rev() {
            let (_, mu) = gso(b);
            let r = mu[k][j].round();
            if r != 0.0 {
                let bj = b[j].clone();
                for (x, y) in b[k].iter_mut().zip(&bj) {
                    *x -= r * y;
                }
            }
        }
        let (bs, mu) = gso(b);
        let lhs = dotv(&bs[k], &bs[k]);
        let rhs = (0.75 - mu[k][k - 1] * mu[k][k - 1]) * dotv(&bs[k - 1], &bs[k - 1]);
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
}

/// Lattice points near `z` (coefficient offsets in `-2..=2` around the
/// rounded coordinates), as `(squared distance, point)` sorted by distance.
fn nearby_lattice_points(basis: &[Vec<f64>], inv: &[Vec<f64>], z: &[f64]) -> Vec<(f64, Vec<f64>)> {
    let d = basis.len();
    let coef: Vec<f64> = (0..d)
        .map(|i| (0..d).map(|j| z[j] * inv[j][i]).sum::<f64>().round())
        .collect();
    let span = 5i64;
    let mut out: Vec<(f64, Vec<f64>)> = (0..span.pow(d as u32))
        .map(|mut idx| {
            let mut point = vec![0.0; d];
            for i in 0..d {
                let c = coef[i] + (idx % span - 2) as f64;
                idx /= span;
                for (pj, bij) in point.iter_mut().zip(&basis[i]) {
                    *pj += c * bij;
                }
            }
            let dist: f64 = point.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
            (dist, point)
        })
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn distance_to_lattice(basis: &[Vec<f64>], inv: &[Vec<f64>], z: &[f64]) -> f64 {
    nearby_lattice_points(basis, inv, z)[0].0.sqrt()
}

/// Point equidistant from `d + 1` affinely independent points.
fn circumcenter(pts: &[Vec<f64>]) -> Option<Vec<f64>> {
    let d = pts.len() - 1;
    let x0 = &pts[0];
    let rows: Vec<Vec<f64>> = pts[1..]
        .iter()
        .map(|x| x.iter().zip(x0).map(|(a, b)| 2.0 * (a - b)).collect())
        .collect();
    let rhs: Vec<f64> = pts[1..]
        .iter()
        .map(|x| x.iter().map(|a| a * a).sum::<f64>() - x0.iter().map(|a| a * a).sum::<f64>())
        .collect();
    let det = match d {
        2 => rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0],
        _ => {
            rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
                - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
                + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0])
        }
    };
    if det.abs() < 1e-14 {
        return None;
    }
    let inv = invert(&rows);
    Some(
        (0..d)
            .map(|i| (0..d).map(|j| inv[i][j] * rhs[j]).sum())
            .collect(),
    )
}

/// Inverse of a square matrix given by rows (Gauss-Jordan).
fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs()))
            .unwrap();
        a.swap(c, p);
        let pv = a[c][c];
        for x in a[c].iter_mut() {
            *x /= pv;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    let pivot = a[c].clone();
                    for (x, y) in a[r].iter_mut().zip(&pivot) {
                        *x -= f * y;
                    }
                }
            }
        }
    }
    a.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Covering radius by grid maximization over the fundamental parallelepiped
/// of a reduced basis. Each of the best grid samples is then snapped to the
/// circumcenter of its `d + 1` nearest lattice points, which is accepted when
/// no lattice point lies strictly closer (a Voronoi vertex).
fn covering_radius_search(lat: &ApproximantLattice) -> f64 {
    let basis = reduced_basis(lat);
    let d = basis.len();
    let inv = invert(&basis);
    let to_point = |t: &[f64]| -> Vec<f64> {
        let mut z = vec![0.0; d];
        for i in 0..d {
            for (zj, bij) in z.iter_mut().zip(&basis[i]) {
                *zj += t[i] * bij;
            }
        }
        z
    };
    let g: usize = if d == 2 { 96 } else { 40 };
    let mut samples: Vec<(f64, Vec<f64>)> = (0..g.pow(d as u32))
        .into_par_iter()
        .map(|mut idx| {
            let t: Vec<f64> = (0..d)
                .map(|_| {
                    let v = (idx % g) as f64 / g as f64;
                    idx /= g;
                    v
                })
                .collect();
            let z = to_point(&t);
            (distance_to_lattice(&basis, &inv, &z), z)
        })
        .collect();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = samples[0].0;
    for (_, z) in samples.iter().take(64) {
        let near = nearby_lattice_points(&basis, &inv, z);
        let simplex: Vec<Vec<f64>> = near.iter().take(d + 1).map(|(_, p)| p.clone()).collect();
        if let Some(c) = circumcenter(&simplex) {
            let radius = crate::geom::dist2(&c, &simplex[0]);
            let nearest = distance_to_lattice(&basis, &inv, &c);
            if nearest >= radius * (1.0 - 1e-12) {
                best = best.max(nearest);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const PHI: f64 = 1.618_033_988_749_895;

    #[test]
    fn default_vectors() {
        let g = make_bad_vector(1).unwrap();
        assert_abs_diff_eq!(g.alpha()[0], PHI, epsilon = 1e-14);
        assert_eq!(g.certificate().min_poly, vec![-1, -1, 1]);

        let t = make_bad_vector(2).unwrap();
        let theta = 2.0 * (2.0 * std::f64::consts::PI / 7.0).cos();
        assert_abs_diff_eq!(t.alpha()[0], theta, epsilon = 1e-14);
        assert_abs_diff_eq!(t.alpha()[1], theta * theta, epsilon = 1e-14);
        assert_abs_diff_eq!(t.alpha()[0], 1.246_979_603_717_467, epsilon = 1e-14);
        assert_abs_diff_eq!(t.alpha()[1], 1.554_958_132_087_371, epsilon = 1e-14);
        assert!(t.certificate().residual < 1e-12);

        for d in 1..=8 {
            let v = make_bad_vector(d).unwrap();
            assert_eq!(v.dim(), d);
            assert!(v.transference_check().1 > 0.0);
            assert!(v.certificate().residual < 1e-12);
            for a in v.alpha() {
                assert!(*a > 0.0 && *a < 2.0 && *a != 1.0);
            }
        }
        assert_eq!(
            make_bad_vector(0),
            Err(DiophError::UnsupportedDimension(0, 1, 8))
        );
        assert!(make_bad_vector(9).is_err());
    }

    #[test]
    fn golden_badness() {
        let g = make_bad_vector(1).unwrap();
        assert_abs_diff_eq!(badness_statistic(&g, 1), 2.0 - PHI, epsilon = 1e-15);
        let v = badness_statistic(&g, 10_000);
        assert!((0.38..=0.48).contains(&v));
        let brute = (1..=10_000u64)
            .map(|q| {
                let x = q as f64 * g.alpha()[0];
                q as f64 * (x - x.round()).abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert_eq!(v, brute);
    }

    #[test]
    fn transference_matches_badness_in_dimension_one() {
        let g = make_bad_vector(1).unwrap();
        assert_abs_diff_eq!(
            transference_statistic(&g, 1).unwrap(),
            2.0 - PHI,
            epsilon = 1e-15
        );
        assert_eq!(
            transference_statistic(&g, 100).unwrap(),
            badness_statistic(&g, 100)
        );
    }

    #[test]
    fn transference_two_dim_matches_naive_enumeration() {
        let t = make_bad_vector(2).unwrap();
        let v = transference_statistic(&t, 30).unwrap();
        let a = t.alpha();
        let mut naive = f64::INFINITY;
        for b1 in -30i64..=30 {
            for b2 in -30i64..=30 {
                if b1 == 0 && b2 == 0 {
                    continue;
                }
                let s = a[0] * b1 as f64 + a[1] * b2 as f64;
                let m = b1.abs().max(b2.abs()) as f64;
                naive = naive.min((s - s.round()).abs() * m * m);
            }
        }
        assert!(v > 0.0);
        assert_eq!(v, naive);
    }

    #[test]
    fn transference_budget() {
        let v = make_bad_vector(8).unwrap();
        assert!(matches!(
            transference_statistic(&v, 50),
            Err(DiophError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn golden_best_approximants() {
        let g = make_bad_vector(1).unwrap();
        let list = best_approximants(&g, 25);
        let qs: Vec<u64> = list.iter().map(|b| b.q).collect();
        assert_eq!(qs, vec![1, 2, 3, 5, 8, 13, 21]);
        let five = &list[3];
        assert_eq!(five.p, vec![8]);
        assert_abs_diff_eq!(five.err, 5.0 * PHI - 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(five.err, 0.0901699, epsilon = 1e-7);
        assert_eq!(best_approximants(&g, 1).len(), 1);
    }

    #[test]
    fn dispersion_one_dim() {
        let d = torus_dispersion(&[vec![0.0], vec![0.5]]).unwrap();
        assert_eq!(d.value, 0.25);
        assert_eq!(d.resolution, None);
        assert_eq!(torus_dispersion(&[vec![0.0]]).unwrap().value, 0.5);
        assert_eq!(torus_dispersion(&[]), Err(DiophError::Empty));
    }

    #[test]
    fn dispersion_one_dim_matches_pairwise_oracle() {
        let xs: Vec<f64> = (1..=13u64).map(|q| frac(q as f64 * PHI)).collect();
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let got = torus_dispersion(&pts).unwrap().value;
        // for each point, its clockwise neighbour is the closest point ahead
        let mut max_gap = 0.0_f64;
        for &a in &xs {
            let gap = xs
                .iter()
                .map(|&b| (b - a).rem_euclid(1.0))
                .filter(|&g| g > 0.0)
                .fold(1.0, f64::min);
            max_gap = max_gap.max(gap);
        }
        assert_abs_diff_eq!(got, max_gap / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn dispersion_two_dim_grid_square() {
        // 4x4 lattice: every point of the torus is within 1/8 in sup norm
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                pts.push(vec![i as f64 / 4.0, j as f64 / 4.0]);
            }
        }
        let d = torus_dispersion(&pts).unwrap();
        assert_abs_diff_eq!(d.value, 0.125, epsilon = 1e-12);
        assert_eq!(d.resolution, Some(1.0 / 512.0));
    }

    #[test]
    fn dispersion_two_dim_matches_brute_force() {
        let t = make_bad_vector(2).unwrap();
        let pts: Vec<Vec<f64>> = (1..=200).map(|q| t.multiple_mod_one(q)).collect();
        let step = 1.0 / 64.0;
        let got = torus_dispersion_with_step(&pts, step).unwrap().value;
        let mut brute = 0.0_f64;
        for i in 0..64 {
            for j in 0..64 {
                let y = [i as f64 * step, j as f64 * step];
                let near = pts
                    .iter()
                    .map(|p| torus_gap(p[0], y[0]).max(torus_gap(p[1], y[1])))
                    .fold(f64::INFINITY, f64::min);
                brute = brute.max(near);
            }
        }
        assert_eq!(got, brute);
    }

    #[test]
    fn dispersion_three_dim_matches_brute_force() {
        let v = make_bad_vector(3).unwrap();
        let pts: Vec<Vec<f64>> = (1..=300).map(|q| v.multiple_mod_one(q)).collect();
        let step = 1.0 / 16.0;
        let got = torus_dispersion_with_step(&pts, step).unwrap().value;
        let mut brute = 0.0_f64;
        for i in 0..16 {
            for j in 0..16 {
                for k in 0..16 {
                    let y = [i as f64 * step, j as f64 * step, k as f64 * step];
                    let near = pts
                        .iter()
                        .map(|p| (0..3).map(|a| torus_gap(p[a], y[a])).fold(0.0, f64::max))
                        .fold(f64::INFINITY, f64::min);
                    brute = brute.max(near);
                }
            }
        }
        assert_eq!(got, brute);
    }

    #[test]
    fn epsilon_dense_golden_quarter() {
        let g = make_bad_vector(1).unwrap();
        let cert = epsilon_dense_bound(&g, 0.25, None).unwrap();
        // sorted-gap oracle: smallest prefix whose largest circular gap is <= 1/2
        let mut m = 1u64;
        loop {
            let xs: Vec<f64> = (1..=m).map(|q| frac(q as f64 * PHI)).collect();
            if max_circular_gap(xs) <= 0.5 {
                break;
            }
            m += 1;
        }
        assert_eq!(cert.m, m);
        assert!(cert.achieved_dispersion <= 0.25);
        assert_eq!(cert.empirical_k, m as f64 * 0.25);
    }

    #[test]
    fn epsilon_dense_even_filter_equals_doubled_vector() {
        let g = make_bad_vector(1).unwrap();
        let doubled = g.scaled(2).unwrap();
        for eps in [0.25, 0.1, 0.03] {
            let even = epsilon_dense_bound(&g, eps, Some(Parity::Even)).unwrap();
            let plain = epsilon_dense_bound(&doubled, eps, None).unwrap();
            assert_eq!(even.m, plain.m);
            assert_eq!(even.achieved_dispersion, plain.achieved_dispersion);
        }
    }

    #[test]
    fn epsilon_dense_errors() {
        let g = make_bad_vector(1).unwrap();
        assert!(matches!(
            epsilon_dense_bound(&g, 0.0, None),
            Err(DiophError::BadEpsilon(_))
        ));
        assert!(matches!(
            epsilon_dense_bound(&g, 0.5, None),
            Err(DiophError::BadEpsilon(_))
        ));
        let tiny = DensitySearch {
            max_terms: 8,
            ..DensitySearch::default()
        };
        assert_eq!(
            epsilon_dense_bound_with(&g, 0.001, None, tiny),
            Err(DiophError::TermCapExceeded(8))
        );
    }

    #[test]
    fn golden_lattices_closed_form() {
        let g = make_bad_vector(1).unwrap();
        let list = best_approximants(&g, 100);
        for (nu, b) in list.iter().enumerate().take(6) {
            let s = approximant_lattice_stats(&g, nu + 1).unwrap();
            assert_eq!(s.lattice.q, b.q);
            assert_eq!(s.mu1_dual, b.q as f64);
            assert_eq!(s.covering_radius, 1.0 / (2.0 * b.q as f64));
            assert_eq!(s.product(), 0.5);
        }
        let five = lattice_stats(ApproximantLattice::new(5, vec![8])).unwrap();
        assert_eq!(five.mu1_dual, 5.0);
        assert_eq!(five.covering_radius, 0.1);
        assert_eq!(five.lattice.basis, vec![vec![1]]);
    }

    #[test]
    fn hermite_basis_spans_lattice() {
        let lat = ApproximantLattice::new(7, vec![3, 5]);
        // q L = Z(3,5) + 7 Z^2 has index 7 in Z^2, so det of basis is 7
        let b = &lat.basis;
        assert_eq!(b.len(), 2);
        assert_eq!((b[0][0] * b[1][1] - b[0][1] * b[1][0]).abs(), 7);
        assert_eq!(lat.dual_index(), 7);
    }

    /// Covering radius of a planar lattice as the circumradius of the acute
    /// Delaunay triangle of a Lagrange-reduced basis.
    fn planar_covering_radius(mut b1: [f64; 2], mut b2: [f64; 2]) -> f64 {
        let dot = |a: [f64; 2], b: [f64; 2]| a[0] * b[0] + a[1] * b[1];
        loop {
            if dot(b1, b1) > dot(b2, b2) {
                std::mem::swap(&mut b1, &mut b2);
            }
            let ratio = dot(b1, b2) / dot(b1, b1);
            if ratio.abs() <= 0.5 {
                break;
            }
            let mu = ratio.round();
            b2 = [b2[0] - mu * b1[0], b2[1] - mu * b1[1]];
        }
        if dot(b1, b2) < 0.0 {
            b2 = [-b2[0], -b2[1]];
        }
        let len = |a: [f64; 2]| dot(a, a).sqrt();
        let c = [b2[0] - b1[0], b2[1] - b1[1]];
        let area = 0.5 * (b1[0] * b2[1] - b1[1] * b2[0]).abs();
        len(b1) * len(b2) * len(c) / (4.0 * area)
    }

    #[test]
    fn planar_covering_radius_matches_delaunay_oracle() {
        let t = make_bad_vector(2).unwrap();
        for nu in 1..=6 {
            let s = approximant_lattice_stats(&t, nu).unwrap();
            let q = s.lattice.q as f64;
            let b = &s.lattice.basis;
            let exact = planar_covering_radius(
                [b[0][0] as f64 / q, b[0][1] as f64 / q],
                [b[1][0] as f64 / q, b[1][1] as f64 / q],
            );
            assert!(
                (s.covering_radius - exact).abs() < 1e-9,
                "nu={nu} grid={} exact={exact}",
                s.covering_radius
            );
            assert!(s.product() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn shortest_dual_vector_brute_force() {
        let lat = ApproximantLattice::new(13, vec![4, 7]);
        let (mu, v) = shortest_dual_vector(&lat).unwrap();
        let mut best = i64::MAX;
        for a in -13i64..=13 {
            for b in -13i64..=13 {
                if (a, b) != (0, 0) && (4 * a + 7 * b).rem_euclid(13) == 0 {
                    best = best.min(a * a + b * b);
                }
            }
        }
        assert_eq!(mu, (best as f64).sqrt());
        assert_eq!((4 * v[0] + 7 * v[1]).rem_euclid(13), 0);
    }

    #[test]
    fn three_dim_lattice_respects_banaszczyk() {
        let v = make_bad_vector(3).unwrap();
        for nu in 1..=3 {
            let s = approximant_lattice_stats(&v, nu).unwrap();
            assert!(s.product() <= 1.5 + 1e-9, "nu={nu}: {}", s.product());
            assert!(s.covering_radius > 0.0);
        }
    }
}
