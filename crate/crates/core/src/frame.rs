//! Surface reconstruction: integrate dr = ω1e1 + ω2e2 and the frame
//! equations de1 = ω3e2 + ω13e3, de2 = −ω3e1 + ω23e3, de3 = −ω13e1 − ω23e2
//! over a gridded solution, then attach both fundamental forms and a
//! discrete Gaussian curvature.
//!
//! ω12 = ω3 is the sign that makes d(dr) = 0 agree with the residual
//! convention of the verifier (dω1 = ω3∧ω2, dω2 = ω1∧ω3).

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{delta_of, Family, Forms};
use crate::immersion::{ImmersionError, ImmersionTriple, TripleKind};
use crate::jet::JetError;
use crate::pde::{sample_jet, FieldError, SolutionField};

type V3 = [f64; 3];

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}
fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
fn scale(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}
fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}
fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

/// Default bound on frame drift before the integration is refused.
pub const DRIFT_THRESHOLD: f64 = 1e-6;
/// Triangles with area below this (relative to the squared edge scale) are
/// degenerate for the curvature estimate.
const DEGENERATE_AREA: f64 = 1e-14;
/// Vertices with EG − F² below this fraction of EG count as degenerate.
const DEGENERATE_METRIC: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrameError {
    #[error("ω1∧ω2 vanishes at ({x}, {t}) (EG − F² = {det})")]
    Degenerate { x: f64, t: f64, det: f64 },
    #[error("frame drift {drift:e} exceeds {threshold:e}; use more substeps or a finer grid")]
    Drift { drift: f64, threshold: f64 },
    #[error("invalid frame options: {0}")]
    BadOptions(String),
    #[error(transparent)]
    Immersion(#[from] ImmersionError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// Position and orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub r: V3,
    pub e1: V3,
    pub e2: V3,
    pub e3: V3,
}

impl FrameState {
    /// max |e_i·e_j − δ_ij| together with |e3 − e1×e2|.
    pub fn drift(&self) -> f64 {
        let e = [self.e1, self.e2, self.e3];
        let mut m = norm(sub(self.e3, cross(self.e1, self.e2)));
        for i in 0..3 {
            for j in i..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                m = m.max((dot(e[i], e[j]) - want).abs());
            }
        }
        m
    }

    fn to_array(self) -> [f64; 12] {
        let mut y = [0.0; 12];
        for (k, v) in [self.r, self.e1, self.e2, self.e3].into_iter().enumerate() {
            y[3 * k..3 * k + 3].copy_from_slice(&v);
        }
        y
    }

    fn from_array(y: &[f64; 12]) -> Self {
        let v = |k: usize| [y[3 * k], y[3 * k + 1], y[3 * k + 2]];
        FrameState { r: v(0), e1: v(1), e2: v(2), e3: v(3) }
    }

    /// Largest componentwise difference.
    pub fn gap(&self, o: &FrameState) -> f64 {
        let (a, b) = (self.to_array(), o.to_array());
        a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    /// Initial frame at a point where r_x = f11e1 + f21e2: rotate (e1, e2)
    /// in the horizontal plane so that r_x points along the first axis.
    pub fn initial(f11: f64, f21: f64) -> FrameState {
        let n = f11.hypot(f21);
        let (c, s) = if n > 0.0 { (f11 / n, f21 / n) } else { (1.0, 0.0) };
        FrameState { r: [0.0; 3], e1: [c, -s, 0.0], e2: [s, c, 0.0], e3: [0.0, 0.0, 1.0] }
    }
}

/// E, F, G of I = ω1² + ω2².
pub fn first_form_coefficients(f: &Forms<f64>) -> [f64; 3] {
    [
        f[0][0] * f[0][0] + f[1][0] * f[1][0],
        f[0][0] * f[0][1] + f[1][0] * f[1][1],
        f[0][1] * f[0][1] + f[1][1] * f[1][1],
    ]
}

/// a1, a2, a3 of II = aω1² + 2bω1ω2 + cω2².
pub fn second_form_coefficients(f: &Forms<f64>, (a, b, c): (f64, f64, f64)) -> [f64; 3] {
    let [f11, f12] = f[0];
    let [f21, f22] = f[1];
    [
        a * f11 * f11 + 2.0 * b * f11 * f21 + c * f21 * f21,
        a * f11 * f12 + b * (f11 * f22 + f12 * f21) + c * f21 * f22,
        a * f12 * f12 + 2.0 * b * f12 * f22 + c * f22 * f22,
    ]
}

/// Everything the frame equations read at one point: f_ij and the dx, dt
/// coefficients of ω13 and ω23.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub f: Forms<f64>,
    pub conn: [[f64; 2]; 2],
}

impl Coefficients {
    pub fn at(fam: &Family, trip: &ImmersionTriple, field: &SolutionField, x: f64, t: f64) -> Result<Self, FrameError> {
        let p = sample_jet(field, x, t, 2)?;
        let f = fam.forms_at(&p)?;
        let conn = match trip.kind {
            // a = 2ε/tan u has poles at sin u = 0, but with f11 = 0 and
            // f12 = sin u/η the products a·f1j stay bounded:
            // ω13 = −εη dx + (ε cos u/η) dt, ω23 = −(ε sin u/η) dt.
            TripleKind::SolutionDependent { eta, eps } => {
                let (s, c) = p.z[0].sin_cos();
                [[-eps * eta, eps * c / eta], [0.0, -eps * s / eta]]
            }
            _ => {
                let v = trip.at(x, t)?;
                let col = |j: usize| (v.a * f[0][j] + v.b * f[1][j], v.b * f[0][j] + v.c * f[1][j]);
                let ((g13x, g23x), (g13t, g23t)) = (col(0), col(1));
                [[g13x, g13t], [g23x, g23t]]
            }
        };
        Ok(Coefficients { f, conn })
    }

    /// II from the connection: a1 = f11g11 + f21g21, a2 = f11g12 + f21g22,
    /// a3 = f12g12 + f22g22 with g the ω13, ω23 coefficients.
    pub fn second_form(&self) -> [f64; 3] {
        let (f, g) = (&self.f, &self.conn);
        [
            f[0][0] * g[0][0] + f[1][0] * g[1][0],
            f[0][0] * g[0][1] + f[1][0] * g[1][1],
            f[0][1] * g[0][1] + f[1][1] * g[1][1],
        ]
    }

    fn lerp(&self, o: &Coefficients, s: f64) -> Coefficients {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..2 {
                out.f[i][j] += s * (o.f[i][j] - self.f[i][j]);
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                out.conn[i][j] += s * (o.conn[i][j] - self.conn[i][j]);
            }
        }
        out
    }

    /// Right-hand side of the frame system along direction `j` (0 = x, 1 = t).
    fn rate(&self, j: usize, y: &[f64; 12]) -> [f64; 12] {
        let s = FrameState::from_array(y);
        let (f1, f2, f3) = (self.f[0][j], self.f[1][j], self.f[2][j]);
        let (g13, g23) = (self.conn[0][j], self.conn[1][j]);
        let d = FrameState {
            r: add(scale(s.e1, f1), scale(s.e2, f2)),
            e1: add(scale(s.e2, f3), scale(s.e3, g13)),
            e2: add(scale(s.e1, -f3), scale(s.e3, g23)),
            e3: add(scale(s.e1, -g13), scale(s.e2, -g23)),
        };
        d.to_array()
    }
}

/// How coefficients between grid nodes are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Evaluate the field's jets wherever RK4 asks (exact fields).
    Analytic,
    /// Jets at grid nodes only, linear in between (numeric fields).
    NodeLinear,
}

/// Normalizing area of the angle-defect estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaWeight {
    /// One third of the incident triangle areas.
    Barycentric,
    /// Voronoi area, with the obtuse-triangle fallback.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameOptions {
    pub origin: (f64, f64),
    /// Grid cells in x and t; the mesh has one more vertex in each.
    pub steps: (usize, usize),
    pub h: (f64, f64),
    /// RK4 steps per grid cell.
    pub substeps: usize,
    pub sampling: Sampling,
    pub area: AreaWeight,
    pub drift_threshold: f64,
    /// Keep going through vertices where ω1∧ω2 = 0 (a cusp edge of the
    /// surface) and leave them out of the curvature estimate; otherwise
    /// such a vertex is an error.
    pub allow_degenerate: bool,
}

impl FrameOptions {
    /// Covers [x0, x1] × [t0, t1] with `nx` × `nt` vertices.
    pub fn over(x: (f64, f64), t: (f64, f64), nx: usize, nt: usize) -> FrameOptions {
        let cells = |n: usize| n.saturating_sub(1);
        let step = |(a, b): (f64, f64), n: usize| if n > 1 { (b - a) / (n - 1) as f64 } else { 0.0 };
        FrameOptions {
            origin: (x.0, t.0),
            steps: (cells(nx), cells(nt)),
            h: (step(x, nx), step(t, nt)),
            substeps: 4,
            sampling: Sampling::Analytic,
            area: AreaWeight::Barycentric,
            drift_threshold: DRIFT_THRESHOLD,
            allow_degenerate: true,
        }
    }
}

/// A reconstructed quad grid, vertex (i, j) at index j·nx + i.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceMesh {
    pub nx: usize,
    pub nt: usize,
    pub origin: (f64, f64),
    pub h: (f64, f64),
    pub frames: Vec<FrameState>,
    /// (E, F, G) from the forms at each vertex.
    pub first: Vec<[f64; 3]>,
    /// (a1, a2, a3) from the forms and the triple at each vertex.
    pub second: Vec<[f64; 3]>,
    /// Discrete K; `None` on the boundary, at degenerate vertices and at
    /// vertices whose 1-ring contains one.
    pub curvature: Vec<Option<f64>>,
    /// Vertices where ω1∧ω2 vanishes.
    pub degenerate: Vec<bool>,
    pub drift_max: f64,
    /// Largest gap between the x-then-t and t-then-x sweeps.
    pub compat_max: f64,
}

impl SurfaceMesh {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (self.origin.0 + i as f64 * self.h.0, self.origin.1 + j as f64 * self.h.1)
    }

    pub fn positions(&self) -> Vec<V3> {
        self.frames.iter().map(|f| f.r).collect()
    }

    pub fn diagnostics(&self) -> MeshDiagnostics {
        let ks: Vec<f64> = self.curvature.iter().flatten().copied().collect();
        let interior = self.nx.saturating_sub(2) * self.nt.saturating_sub(2);
        let (k_min, k_max) = ks.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &k| (a.min(k), b.max(k)));
        let finite = !ks.is_empty();
        MeshDiagnostics {
            k_min: finite.then_some(k_min),
            k_max: finite.then_some(k_max),
            k_mean: finite.then(|| ks.iter().sum::<f64>() / ks.len() as f64),
            k_median: finite.then(|| {
                let mut v = ks.clone();
                v.sort_by(f64::total_cmp);
                let m = v.len() / 2;
                if v.len() % 2 == 1 {
                    v[m]
                } else {
                    0.5 * (v[m - 1] + v[m])
                }
            }),
            within_band: if interior == 0 {
                0.0
            } else {
                ks.iter().filter(|k| (**k + 1.0).abs() <= K_BAND).count() as f64 / interior as f64
            },
            drift_max: self.drift_max,
            compat_max: self.compat_max,
            interior_vertices: interior,
            degenerate_vertices: self.degenerate.iter().filter(|&&d| d).count(),
            excluded_vertices: interior - ks.len(),
        }
    }

    /// Wavefront OBJ: one v and vn (= e3) per vertex, each quad split along
    /// its (i, j)–(i+1, j+1) diagonal, triangles wound counter-clockwise
    /// about e3.
    pub fn to_obj(&self) -> String {
        let mut out = String::from("# reconstructed surface\n");
        for f in &self.frames {
            writeln!(out, "v {:.12e} {:.12e} {:.12e}", f.r[0], f.r[1], f.r[2]).unwrap();
        }
        for f in &self.frames {
            writeln!(out, "vn {:.12e} {:.12e} {:.12e}", f.e3[0], f.e3[1], f.e3[2]).unwrap();
        }
        for [a, b, c] in self.triangles() {
            let (pa, pb, pc) = (self.frames[a].r, self.frames[b].r, self.frames[c].r);
            let n = cross(sub(pb, pa), sub(pc, pa));
            let up = add(add(self.frames[a].e3, self.frames[b].e3), self.frames[c].e3);
            let (b, c) = if dot(n, up) >= 0.0 { (b, c) } else { (c, b) };
            writeln!(out, "f {0}//{0} {1}//{1} {2}//{2}", a + 1, b + 1, c + 1).unwrap();
        }
        out
    }

    fn triangles(&self) -> Vec<[usize; 3]> {
        grid_triangles(self.nx, self.nt)
    }
}

/// Half-width of the curvature band reported in `MeshDiagnostics::within_band`.
pub const K_BAND: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshDiagnostics {
    #[serde(rename = "K_min")]
    pub k_min: Option<f64>,
    #[serde(rename = "K_max")]
    pub k_max: Option<f64>,
    #[serde(rename = "K_mean")]
    pub k_mean: Option<f64>,
    /// Robust against the large values next to a cusp that misses the vertices.
    #[serde(rename = "K_median")]
    pub k_median: Option<f64>,
    /// Share of interior vertices with |K + 1| ≤ `K_BAND`.
    pub within_band: f64,
    pub drift_max: f64,
    pub compat_max: f64,
    pub interior_vertices: usize,
    /// Vertices (boundary included) where ω1∧ω2 vanishes.
    pub degenerate_vertices: usize,
    /// Interior vertices without a curvature estimate.
    pub excluded_vertices: usize,
}

fn grid_triangles(nx: usize, nt: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for j in 0..nt.saturating_sub(1) {
        for i in 0..nx.saturating_sub(1) {
            let v = |a: usize, b: usize| b * nx + a;
            out.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            out.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    out
}

/// Node coefficients plus on-demand evaluation between nodes.
struct Sampler<'a> {
    fam: &'a Family,
    trip: &'a ImmersionTriple,
    field: &'a SolutionField,
    opts: &'a FrameOptions,
    nodes: Vec<Coefficients>,
    nx: usize,
}

impl Sampler<'_> {
    fn node(&self, i: usize, j: usize) -> &Coefficients {
        &self.nodes[j * self.nx + i]
    }

    /// Coefficients a fraction `s` of the way from node `from` to the next
    /// node in direction `dir`.
    fn along(&self, dir: usize, from: (usize, usize), s: f64) -> Result<Coefficients, FrameError> {
        let (i, j) = from;
        let next = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
        if s == 0.0 {
            return Ok(*self.node(i, j));
        }
        if s == 1.0 {
            return Ok(*self.node(next.0, next.1));
        }
        match self.opts.sampling {
            Sampling::NodeLinear => Ok(self.node(i, j).lerp(self.node(next.0, next.1), s)),
            Sampling::Analytic => {
                let (ox, ot) = self.opts.origin;
                let (hx, ht) = self.opts.h;
                let (mut x, mut t) = (ox + i as f64 * hx, ot + j as f64 * ht);
                if dir == 0 {
                    x += s * hx;
                } else {
                    t += s * ht;
                }
                Coefficients::at(self.fam, self.trip, self.field, x, t)
            }
        }
    }

    /// Advance `state` across one grid cell in direction `dir`.
    fn cross_cell(&self, dir: usize, from: (usize, usize), state: FrameState) -> Result<FrameState, FrameError> {
        let n = self.opts.substeps;
        let h = if dir == 0 { self.opts.h.0 } else { self.opts.h.1 } / n as f64;
        let mut y = state.to_array();
        let mut start = self.along(dir, from, 0.0)?;
        for k in 0..n {
            let s0 = k as f64 / n as f64;
            let mid = self.along(dir, from, s0 + 0.5 / n as f64)?;
            let end = self.along(dir, from, (k + 1) as f64 / n as f64)?;
            let axpy = |a: &[f64; 12], b: &[f64; 12], c: f64| std::array::from_fn::<f64, 12, _>(|m| a[m] + c * b[m]);
            let k1 = start.rate(dir, &y);
            let k2 = mid.rate(dir, &axpy(&y, &k1, 0.5 * h));
            let k3 = mid.rate(dir, &axpy(&y, &k2, 0.5 * h));
            let k4 = end.rate(dir, &axpy(&y, &k3, h));
            y = std::array::from_fn(|m| y[m] + h / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m]));
            start = end;
        }
        Ok(FrameState::from_array(&y))
    }

    /// Sweep: spine along `first` from the origin, then lines along the
    /// other direction from every spine vertex (in parallel).
    fn sweep(&self, first: usize, start: FrameState, nx: usize, nt: usize) -> Result<Vec<FrameState>, FrameError> {
        let (n_spine, n_line) = if first == 0 { (nx, nt) } else { (nt, nx) };
        let at = |a: usize, b: usize| if first == 0 { (a, b) } else { (b, a) };
        let mut spine = vec![start];
        for a in 0..n_spine - 1 {
            spine.push(self.cross_cell(first, at(a, 0), spine[a])?);
        }
        let lines = spine
            .par_iter()
            .enumerate()
            .map(|(a, &s)| {
                let mut line = vec![s];
                for b in 0..n_line - 1 {
                    line.push(self.cross_cell(1 - first, at(a, b), line[b])?);
                }
                Ok(line)
            })
            .collect::<Result<Vec<_>, FrameError>>()?;
        let mut out = vec![start; nx * nt];
        for (a, line) in lines.into_iter().enumerate() {
            for (b, s) in line.into_iter().enumerate() {
                let (i, j) = at(a, b);
                out[j * nx + i] = s;
            }
        }
        Ok(out)
    }
}

/// Integrate the frame over the grid described by `opts`: x-spine from the
/// origin, then t-lines. The t-then-x sweep is also run and the largest gap
/// between the two is reported as `compat_max`.
pub fn integrate_frame(
    fam: &Family,
    trip: &ImmersionTriple,
    field: &SolutionField,
    opts: &FrameOptions,
) -> Result<SurfaceMesh, FrameError> {
    if opts.substeps == 0 {
        return Err(FrameError::BadOptions("substeps must be positive".into()));
    }
    let (nx, nt) = (opts.steps.0 + 1, opts.steps.1 + 1);
    if (nx > 1 && !(opts.h.0 > 0.0)) || (nt > 1 && !(opts.h.1 > 0.0)) {
        return Err(FrameError::BadOptions(format!("step sizes {:?} must be positive", opts.h)));
    }
    let (ox, ot) = opts.origin;
    let nodes = (0..nx * nt)
        .into_par_iter()
        .map(|k| {
            let (x, t) = (ox + (k % nx) as f64 * opts.h.0, ot + (k / nx) as f64 * opts.h.1);
            let c = Coefficients::at(fam, trip, field, x, t)?;
            let [e, f, g] = first_form_coefficients(&c.f);
            let det = e * g - f * f;
            let degenerate = det <= DEGENERATE_METRIC * (e * g) || delta_of(&c.f, 1, 2) == 0.0;
            if degenerate && !opts.allow_degenerate {
                return Err(FrameError::Degenerate { x, t, det });
            }
            Ok((c, degenerate))
        })
        .collect::<Result<Vec<_>, FrameError>>()?;
    let (nodes, degenerate): (Vec<_>, Vec<_>) = nodes.into_iter().unzip();
    let sampler = Sampler { fam, trip, field, opts, nodes, nx };
    let c0 = sampler.node(0, 0);
    let start = FrameState::initial(c0.f[0][0], c0.f[1][0]);
    let frames = sampler.sweep(0, start, nx, nt)?;
    let other = sampler.sweep(1, start, nx, nt)?;
    let compat_max = frames.iter().zip(&other).fold(0.0f64, |m, (a, b)| m.max(a.gap(b)));
    let drift_max = frames.iter().chain(&other).fold(0.0f64, |m, f| m.max(f.drift()));
    if drift_max > opts.drift_threshold {
        return Err(FrameError::Drift { drift: drift_max, threshold: opts.drift_threshold });
    }
    let first = sampler.nodes.iter().map(|c| first_form_coefficients(&c.f)).collect();
    let second = sampler.nodes.iter().map(|c| c.second_form()).collect();
    let positions: Vec<V3> = frames.iter().map(|f| f.r).collect();
    let mut curvature = discrete_gaussian_curvature(nx, nt, &positions, opts.area);
    // the angle defect is meaningless on a 1-ring that straddles a cusp edge
    for v in 0..nx * nt {
        let (i, j) = ((v % nx) as i64, (v / nx) as i64);
        let ring = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)];
        let touches = ring.iter().any(|&(di, dj)| {
            let (a, b) = (i + di, j + dj);
            a >= 0 && b >= 0 && a < nx as i64 && b < nt as i64 && degenerate[(b as usize) * nx + a as usize]
        });
        if touches {
            curvature[v] = None;
        }
    }
    Ok(SurfaceMesh {
        nx,
        nt,
        origin: opts.origin,
        h: opts.h,
        frames,
        first,
        second,
        curvature,
        degenerate,
        drift_max,
        compat_max,
    })
}

/// Angle-defect Gaussian curvature at interior vertices of an `nx` × `nt`
/// grid of positions (index j·nx + i), triangulated as in the OBJ export.
/// `None` on the boundary and where an incident triangle is degenerate.
pub fn discrete_gaussian_curvature(nx: usize, nt: usize, r: &[V3], area: AreaWeight) -> Vec<Option<f64>> {
    assert_eq!(r.len(), nx * nt, "position count must match the grid");
    let tris = grid_triangles(nx, nt);
    let mut angle = vec![0.0; r.len()];
    let mut weight = vec![0.0; r.len()];
    let mut bad = vec![false; r.len()];
    for t in &tris {
        let p = t.map(|v| r[v]);
        let e = [sub(p[1], p[0]), sub(p[2], p[1]), sub(p[0], p[2])];
        let l2 = e.map(|v| dot(v, v));
        let a = 0.5 * norm(cross(e[0], e[2]));
        let degenerate = !(a > DEGENERATE_AREA * l2.iter().fold(0.0f64, |m, &v| m.max(v)));
        // interior angle at corner k lies between the edges leaving it
        let angles: [f64; 3] = std::array::from_fn(|k| {
            let (u, w) = (sub(p[(k + 1) % 3], p[k]), sub(p[(k + 2) % 3], p[k]));
            norm(cross(u, w)).atan2(dot(u, w))
        });
        for k in 0..3 {
            let v = t[k];
            if degenerate {
                bad[v] = true;
                continue;
            }
            angle[v] += angles[k];
            weight[v] += match area {
                AreaWeight::Barycentric => a / 3.0,
                AreaWeight::Mixed => {
                    if angles.iter().any(|&q| q > 0.5 * PI) {
                        if angles[k] > 0.5 * PI {
                            a / 2.0
                        } else {
                            a / 4.0
                        }
                    } else {
                        // Voronoi share: edges at corner k weighted by the cotangent of the opposite angle
                        let cot = |q: f64| q.cos() / q.sin();
                        let (i1, i2) = ((k + 1) % 3, (k + 2) % 3);
                        let l_k1 = dot(sub(p[i1], p[k]), sub(p[i1], p[k]));
                        let l_k2 = dot(sub(p[i2], p[k]), sub(p[i2], p[k]));
                        (l_k1 * cot(angles[i2]) + l_k2 * cot(angles[i1])) / 8.0
                    }
                }
            };
        }
    }
    (0..r.len())
        .map(|v| {
            let (i, j) = (v % nx, v / nx);
            let interior = i > 0 && j > 0 && i + 1 < nx && j + 1 < nt;
            (interior && !bad[v] && weight[v] > 0.0).then(|| (2.0 * PI - angle[v]) / weight[v])
        })
        .collect()
}
