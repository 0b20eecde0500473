//! Geodesic flow on a regular tetrahedron inscribed in the unit sphere and
//! the greedy cap-exclusion subsequence built from it.
//!
//! The flow starts at vertex `B` going into face `ABC` with velocity
//! `alpha_1 BC + alpha_2 BA`. It is advanced by walking faces in 3D: the
//! position is kept in barycentric weights over the four vertices, and at an
//! edge crossing the velocity is carried into the neighbouring face by
//! unfolding (the far vertex `R` of the old face is replaced by the far
//! vertex `S` of the new one, whose unfolded image is `P + Q - R`).
//!
//! Independently, the unfolding sends the flow to the straight line
//! `t (alpha_1, alpha_2)` in skew coordinates where the tiling vertices are
//! `Z^2`; reducing mod 2 gives the toral flow on `[-1, 1)^2`, and folding a
//! toral point back onto the surface uses the parity labelling
//! `(0,0) -> B, (1,0) -> C, (0,1) -> A, (1,1) -> D`.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dioph::BadVector;
use crate::geom::{dist2, geodesic_distance, GeomError, UnitVector, CAP_SLACK};
use crate::lift::{reduce_mod_two, ToralPoint, TorusConvention};

pub const A: usize = 0;
pub const B: usize = 1;
pub const C: usize = 2;
pub const D: usize = 3;

/// Weight below which a crossing point counts as passing through a vertex.
pub const NEAR_VERTEX_TOLERANCE: f64 = 1e-10;

/// Faces as ordered vertex triples `(origin, first axis, second axis)`,
/// labelled 1..=4: ABC, ABD, ACD, BCD.
pub const FACES: [[usize; 3]; 4] = [[B, C, A], [B, D, A], [C, D, A], [B, C, D]];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TetraError {
    #[error("greedy search exhausted p_cutoff = {p_cutoff} at k = {k}")]
    CutoffExhausted { k: usize, p_cutoff: u64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

pub type Result<T> = std::result::Result<T, TetraError>;

/// Face label (1-based) of the face not containing `vertex`.
fn face_missing(vertex: usize) -> usize {
    match vertex {
        D => 1,
        C => 2,
        B => 3,
        A => 4,
        _ => unreachable!("vertex index {vertex}"),
    }
}

fn missing_vertex(label: usize) -> usize {
    [D, C, B, A][label - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tetrahedron {
    pub vertices: [[f64; 3]; 4],
}

impl Tetrahedron {
    pub fn vertex(&self, v: usize) -> [f64; 3] {
        self.vertices[v]
    }

    pub fn edge_length(&self, a: usize, b: usize) -> f64 {
        dist2(&self.vertices[a], &self.vertices[b])
    }

    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for v in &self.vertices {
            for i in 0..3 {
                c[i] += v[i] / 4.0;
            }
        }
        c
    }

    /// Distance from `vertex` to the plane of the opposite face.
    pub fn height(&self, vertex: usize) -> f64 {
        let f = FACES[face_missing(vertex) - 1];
        let (o, p, r) = (
            self.vertices[f[0]],
            self.vertices[f[1]],
            self.vertices[f[2]],
        );
        let u = sub(p, o);
        let w = sub(r, o);
        let n = cross(u, w);
        let nn = dot3(n, n).sqrt();
        dot3(sub(self.vertices[vertex], o), n).abs() / nn
    }

    /// Point of `face` with weights `(1 - a - b, a, b)` on its ordered triple.
    pub fn face_point(&self, label: usize, local: [f64; 2]) -> [f64; 3] {
        let f = FACES[label - 1];
        let (o, p, r) = (
            self.vertices[f[0]],
            self.vertices[f[1]],
            self.vertices[f[2]],
        );
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = o[i] + local[0] * (p[i] - o[i]) + local[1] * (r[i] - o[i]);
        }
        out
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Vertices `(1,1,1)`, `(1,-1,-1)`, `(-1,1,-1)`, `(-1,-1,1)` over `sqrt(3)`
/// as `A, B, C, D`.
pub fn standard_tetrahedron() -> Tetrahedron {
    let s = 1.0 / 3f64.sqrt();
    Tetrahedron {
        vertices: [[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]],
    }
}

/// The matrix sending the planar edge vectors `BC = (sqrt(8/3), 0)` and
/// `BA = (sqrt(2/3), 4/3)` to `(1, 0)` and `(0, 1)`, with its inverse.
pub fn unfold_matrix() -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
    let a = (3.0f64 / 8.0).sqrt();
    let m = [[a, -3.0 / 8.0], [0.0, 0.75]];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let inv = [
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ];
    (m, inv)
}

/// A point on the tetrahedron surface in every representation we track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    /// Face label 1..=4.
    pub face: usize,
    /// Weights on the face's two axis vertices.
    pub local: [f64; 2],
    pub world: [f64; 3],
    /// Position on the unfolded line, in lattice (`M`-image) coordinates.
    pub unfolded: [f64; 2],
}

/// Sequential face-walker for the geodesic flow.
#[derive(Debug, Clone)]
pub struct TetraFlow {
    tet: Tetrahedron,
    alpha: [f64; 2],
    t: f64,
    /// Barycentric weights over A, B, C, D; zero off the current face.
    weights: [f64; 4],
    /// Barycentric velocity, summing to zero.
    velocity: [f64; 4],
    /// Unfolded lattice coordinates of the current face's vertices.
    plane: [[i64; 2]; 4],
    /// Vertex not on the current face.
    off_face: usize,
    crossings: u64,
    near_vertex_events: u64,
}

impl TetraFlow {
    pub fn new(alpha: [f64; 2], tet: Tetrahedron) -> Result<Self> {
        if !(alpha[0] > 0.0 && alpha[1] > 0.0 && alpha.iter().all(|a| a.is_finite())) {
            return Err(TetraError::InvalidConfig(format!(
                "flow direction must be positive, got {alpha:?}"
            )));
        }
        let mut weights = [0.0; 4];
        weights[B] = 1.0;
        let mut velocity = [0.0; 4];
        velocity[A] = alpha[1];
        velocity[B] = -alpha[0] - alpha[1];
        velocity[C] = alpha[0];
        let mut plane = [[0i64; 2]; 4];
        plane[C] = [1, 0];
        plane[A] = [0, 1];
        Ok(Self {
            tet,
            alpha,
            t: 0.0,
            weights,
            velocity,
            plane,
            off_face: D,
            crossings: 0,
            near_vertex_events: 0,
        })
    }

    pub fn from_bad_vector(alpha: &BadVector, tet: Tetrahedron) -> Result<Self> {
        if alpha.dim() != 2 {
            return Err(TetraError::InvalidConfig(format!(
                "flow needs a 2-dimensional vector, got dimension {}",
                alpha.dim()
            )));
        }
        Self::new([alpha.alpha()[0], alpha.alpha()[1]], tet)
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn crossings(&self) -> u64 {
        self.crossings
    }

    pub fn near_vertex_events(&self) -> u64 {
        self.near_vertex_events
    }

    pub fn tetrahedron(&self) -> &Tetrahedron {
        &self.tet
    }

    /// Moves the walker forward to time `target >= self.time()`.
    pub fn advance_to(&mut self, target: f64) {
        assert!(target >= self.t, "flow cannot run backwards");
        loop {
            let remaining = target - self.t;
            // first face vertex whose weight reaches zero
            let mut hit: Option<(usize, f64)> = None;
            for v in 0..4 {
                if v == self.off_face || self.velocity[v] >= 0.0 {
                    continue;
                }
                let tau = self.weights[v] / -self.velocity[v];
                match hit {
                    Some((_, best)) if tau >= best => {}
                    _ => hit = Some((v, tau)),
                }
            }
            let (drop, tau) = hit.expect("some weight decreases along the flow");
            if tau > remaining {
                for v in 0..4 {
                    self.weights[v] += self.velocity[v] * remaining;
                }
                self.weights[self.off_face] = 0.0;
                self.t = target;
                return;
            }
            self.cross(drop, tau);
        }
    }

    fn cross(&mut self, drop: usize, tau: f64) {
        for v in 0..4 {
            self.weights[v] += self.velocity[v] * tau;
        }
        self.t += tau;
        self.weights[drop] = 0.0;
        let new_vertex = self.off_face;
        let edge: Vec<usize> = (0..4).filter(|&v| v != drop && v != new_vertex).collect();
        let (p, q) = (edge[0], edge[1]);
        // resynchronize: clamp and renormalize the two edge weights
        let wp = self.weights[p].max(0.0);
        let wq = self.weights[q].max(0.0);
        let s = wp + wq;
        self.weights[p] = wp / s;
        self.weights[q] = wq / s;
        if self.weights[p].min(self.weights[q]) < NEAR_VERTEX_TOLERANCE {
            self.near_vertex_events += 1;
            log::warn!(
                "flow passes within {:.1e} of a vertex at t = {}",
                self.weights[p].min(self.weights[q]),
                self.t
            );
        }
        let lr = self.velocity[drop];
        self.velocity[p] += lr;
        self.velocity[q] += lr;
        self.velocity[new_vertex] = -lr;
        self.velocity[drop] = 0.0;
        self.plane[new_vertex] = [
            self.plane[p][0] + self.plane[q][0] - self.plane[drop][0],
            self.plane[p][1] + self.plane[q][1] - self.plane[drop][1],
        ];
        self.off_face = drop;
        self.crossings += 1;
    }

    pub fn world(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for v in 0..4 {
            if v == self.off_face {
                continue;
            }
            for i in 0..3 {
                out[i] += self.weights[v] * self.tet.vertices[v][i];
            }
        }
        out
    }

    /// World-space velocity.
    pub fn world_velocity(&self) -> [f64; 3] {
        let mut out = [0.0; 3];
        for v in 0..4 {
            for i in 0..3 {
                out[i] += self.velocity[v] * self.tet.vertices[v][i];
            }
        }
        out
    }

    /// Unfolded position accumulated through the crossings.
    pub fn unfolded(&self) -> [f64; 2] {
        let mut out = [0.0; 2];
        for v in 0..4 {
            if v == self.off_face {
                continue;
            }
            out[0] += self.weights[v] * self.plane[v][0] as f64;
            out[1] += self.weights[v] * self.plane[v][1] as f64;
        }
        out
    }

    pub fn surface_point(&self) -> SurfacePoint {
        let face = face_missing(self.off_face);
        let f = FACES[face - 1];
        SurfacePoint {
            face,
            local: [self.weights[f[1]], self.weights[f[2]]],
            world: self.world(),
            unfolded: self.unfolded(),
        }
    }

    pub fn alpha(&self) -> [f64; 2] {
        self.alpha
    }
}

/// Position of the flow at time `t`, walking faces from `t = 0`.
pub fn tetra_flow(t: f64, alpha: &BadVector, tet: &Tetrahedron) -> Result<SurfacePoint> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(TetraError::InvalidConfig(format!("time {t}")));
    }
    let mut flow = TetraFlow::from_bad_vector(alpha, tet.clone())?;
    flow.advance_to(t);
    Ok(flow.surface_point())
}

/// `t alpha` reduced mod 2 into `[-1, 1)^2`.
pub fn toral_flow(t: f64, alpha: &BadVector) -> ToralPoint {
    let z: Vec<f64> = alpha.alpha().iter().map(|a| t * a).collect();
    ToralPoint::reduce(&z, TorusConvention::Doubled)
}

/// Vertex sitting at lattice point `(x, y)` of the unfolded tiling.
fn lattice_vertex(x: i64, y: i64) -> usize {
    match (x.rem_euclid(2), y.rem_euclid(2)) {
        (0, 0) => B,
        (1, 0) => C,
        (0, 1) => A,
        _ => D,
    }
}

/// Folds a point of the unfolded plane back onto the tetrahedron surface.
pub fn fold_to_surface(z: [f64; 2], tet: &Tetrahedron) -> SurfacePoint {
    let (fx, fy) = (z[0].floor(), z[1].floor());
    let (i, j) = (fx as i64, fy as i64);
    let (a, b) = (z[0] - fx, z[1] - fy);
    let (verts, w) = if a + b < 1.0 {
        ([(i, j), (i + 1, j), (i, j + 1)], [1.0 - a - b, a, b])
    } else {
        (
            [(i + 1, j + 1), (i, j + 1), (i + 1, j)],
            [a + b - 1.0, 1.0 - a, 1.0 - b],
        )
    };
    let mut weights = [0.0; 4];
    let mut world = [0.0; 3];
    let mut present = [false; 4];
    for (&(x, y), &wk) in verts.iter().zip(&w) {
        let v = lattice_vertex(x, y);
        weights[v] += wk;
        present[v] = true;
        for c in 0..3 {
            world[c] += wk * tet.vertices[v][c];
        }
    }
    let off = (0..4)
        .find(|&v| !present[v])
        .expect("triangle has three labels");
    let face = face_missing(off);
    debug_assert_eq!(missing_vertex(face), off);
    let f = FACES[face - 1];
    SurfacePoint {
        face,
        local: [weights[f[1]], weights[f[2]]],
        world,
        unfolded: z,
    }
}

/// `min(||(x - y)/2||, ||(x + y)/2||)` with `||.||` the sup distance to `Z^2`.
pub fn folded_toral_distance(x: &[f64], y: &[f64]) -> f64 {
    let sup = |s: f64| -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| crate::geom::dist_to_int((a + s * b) / 2.0))
            .fold(0.0, f64::max)
    };
    sup(-1.0).min(sup(1.0))
}

/// Disagreement between the face-walker at time `t` and the closed-form
/// toral flow: the larger of the folded toral distance between `toral_flow`
/// and the walker's unfolded coordinate, and the Euclidean distance between
/// the walker's world point and the fold of `t alpha`.
pub fn fold_consistency(t: f64, alpha: &BadVector, tet: &Tetrahedron) -> Result<f64> {
    let walked = tetra_flow(t, alpha, tet)?;
    Ok(fold_defect(t, alpha, tet, &walked))
}

pub(crate) fn fold_defect(
    t: f64,
    alpha: &BadVector,
    tet: &Tetrahedron,
    walked: &SurfacePoint,
) -> f64 {
    let toral = toral_flow(t, alpha);
    let walked_toral: Vec<f64> = walked.unfolded.iter().map(|&z| reduce_mod_two(z)).collect();
    let toral_gap = folded_toral_distance(toral.coords(), &walked_toral);
    let z = [t * alpha.alpha()[0], t * alpha.alpha()[1]];
    let folded = fold_to_surface(z, tet);
    toral_gap.max(dist2(&folded.world, &walked.world))
}

pub fn radial_project(x: &[f64]) -> Result<UnitVector> {
    Ok(UnitVector::normalize(x.to_vec())?)
}

/// Parameters of the greedy cap-exclusion selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyConfig {
    pub alpha: BadVector,
    pub gamma: f64,
    pub k_target: usize,
    /// Maximum number of integer times tried for a single `k`.
    pub p_cutoff: u64,
}

impl GreedyConfig {
    pub const DEFAULT_GAMMA: f64 = 0.1;
    pub const DEFAULT_P_CUTOFF: u64 = 1_000_000;

    pub fn new(alpha: BadVector, k_target: usize) -> Self {
        Self {
            alpha,
            gamma: Self::DEFAULT_GAMMA,
            k_target,
            p_cutoff: Self::DEFAULT_P_CUTOFF,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.alpha.dim() != 2 || self.alpha.alpha().iter().any(|&a| !(a > 0.0)) {
            return Err(TetraError::InvalidConfig(
                "alpha must be 2-dimensional with positive coordinates".into(),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(TetraError::InvalidConfig(format!("gamma {}", self.gamma)));
        }
        if self.k_target == 0 || self.p_cutoff == 0 {
            return Err(TetraError::InvalidConfig(
                "k_target and p_cutoff must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Selected times `j_k` and directions `u_k`, indexed from `k = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyState {
    pub j: Vec<u64>,
    pub u: Vec<UnitVector>,
    pub max_step_gap: u64,
    pub near_vertex_events: u64,
}

/// Number of `m >= 1` with `m < k^(2/3)`, i.e. the largest `m` with `m^3 < k^2`.
pub fn exclusion_window(k: usize) -> usize {
    let k2 = (k as u128) * (k as u128);
    let mut m = (k as f64).powf(2.0 / 3.0).floor() as u128 + 1;
    while m > 0 && m * m * m >= k2 {
        m -= 1;
    }
    m as usize
}

/// Angular radius `gamma k^(-1/3)` of the excluded caps at step `k`.
pub fn exclusion_radius(gamma: f64, k: usize) -> f64 {
    gamma / (k as f64).cbrt()
}

pub fn greedy_select(cfg: &GreedyConfig) -> Result<GreedyState> {
    greedy_extend(
        cfg,
        GreedyState {
            j: Vec::new(),
            u: Vec::new(),
            max_step_gap: 0,
            near_vertex_events: 0,
        },
    )
}

/// Continues a (possibly empty) saved state up to `cfg.k_target`.
pub fn greedy_extend(cfg: &GreedyConfig, mut state: GreedyState) -> Result<GreedyState> {
    cfg.validate()?;
    if state.j.len() != state.u.len() {
        return Err(TetraError::InvalidConfig("state j/u lengths differ".into()));
    }
    let tet = standard_tetrahedron();
    let mut flow = TetraFlow::from_bad_vector(&cfg.alpha, tet)?;
    let sample = |flow: &mut TetraFlow, p: u64| -> Result<UnitVector> {
        flow.advance_to(p as f64);
        radial_project(&flow.world())
    };
    if state.j.is_empty() {
        let u1 = sample(&mut flow, 1)?;
        state.j.push(1);
        state.u.push(u1);
    } else {
        // replay the integer steps so the walker state matches a fresh run
        for p in 1..=*state.j.last().unwrap() {
            flow.advance_to(p as f64);
        }
    }
    while state.j.len() < cfg.k_target {
        let k = state.j.len() + 1;
        let window = exclusion_window(k);
        let radius = exclusion_radius(cfg.gamma, k);
        let prev = *state.j.last().unwrap();
        let mut p = prev;
        let chosen = loop {
            p += 1;
            if p - prev > cfg.p_cutoff {
                return Err(TetraError::CutoffExhausted {
                    k,
                    p_cutoff: cfg.p_cutoff,
                });
            }
            let candidate = sample(&mut flow, p)?;
            let excluded =
                (1..=window).any(|m| candidate.angle_to(&state.u[k - 1 - m]) <= radius + CAP_SLACK);
            if !excluded {
                break candidate;
            }
        };
        state.max_step_gap = state.max_step_gap.max(p - prev);
        state.j.push(p);
        state.u.push(chosen);
    }
    state.near_vertex_events = flow.near_vertex_events();
    Ok(state)
}

/// Exhaustive audit of the two separation properties of a greedy run:
/// backward exclusion `d(u_k, u_{k-m}) > gamma k^(-1/3)` and forward
/// separation `d(u_{k+m}, u_k) > gamma (k + k^(2/3))^(-1/3)`, both for
/// `1 <= m < k^(2/3)`. Returns the smallest margins (distance minus bound).
pub fn audit_separation(state: &GreedyState, gamma: f64) -> Result<(f64, f64)> {
    let n = state.u.len();
    let mut backward = f64::INFINITY;
    let mut forward = f64::INFINITY;
    for k in 1..=n {
        let window = exclusion_window(k);
        let back_bound = exclusion_radius(gamma, k);
        let kf = k as f64;
        let fwd_bound = gamma / (kf + kf.powf(2.0 / 3.0)).cbrt();
        for m in 1..=window {
            if k > m {
                let d = geodesic_distance(&state.u[k - 1], &state.u[k - 1 - m])?;
                backward = backward.min(d - back_bound);
            }
            if k + m <= n {
                let d = geodesic_distance(&state.u[k - 1 + m], &state.u[k - 1])?;
                forward = forward.min(d - fwd_bound);
            }
        }
    }
    Ok((backward, forward))
}

/// Samples `(t, face, world)` every `dt` up to `t_max` and writes them as CSV.
pub fn write_flow_trace<W: Write>(
    out: &mut W,
    alpha: &BadVector,
    t_max: f64,
    dt: f64,
) -> std::io::Result<()> {
    let mut flow = TetraFlow::from_bad_vector(alpha, standard_tetrahedron())
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e.to_string()))?;
    writeln!(out, "t,face,x,y,z")?;
    let steps = (t_max / dt).floor() as u64;
    for i in 0..=steps {
        let t = i as f64 * dt;
        flow.advance_to(t);
        let p = flow.surface_point();
        writeln!(
            out,
            "{:.17e},{},{:.17e},{:.17e},{:.17e}",
            t, p.face, p.world[0], p.world[1], p.world[2]
        )?;
    }
    Ok(())
}
