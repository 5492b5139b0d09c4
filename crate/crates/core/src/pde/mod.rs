//! Desk-scale solutions of the third-order evolution class and of
//! sine-Gordon, exposed as fields that can be sampled for jets.
//!
//! Boundary treatment is a choice of this crate, not of the theory: the
//! third-order class is marched on periodic grids, sine-Gordon on a bounded
//! interval with decay at the left end.

mod helmholtz;
mod io;
mod march;
mod stencil;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::FamilyError;
use crate::jet::{Dual, EvalError, Expression, JetPoint, Taylor};

pub use helmholtz::{helmholtz_apply, helmholtz_invert, HelmholtzMethod};
pub use io::{read_pssf, write_pssf, PSSF_MAGIC, PSSF_VERSION};
pub use march::{sine_gordon_march, solve_mol, MolOptions, SineGordonOptions, BLOWUP_CAP, CFL_C};
pub use stencil::{fd_weights, Stencil};

/// Highest x-order a numeric field can be sampled at.
pub const MAX_NUMERIC_ORDER: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("({x}, {t}) lies outside the field's domain")]
    OutOfDomain { x: f64, t: f64 },
    #[error("({x}, {t}) is not a grid node of the numeric field")]
    OffGrid { x: f64, t: f64 },
    #[error("the stencil at x = {x} leaves the bounded grid")]
    StencilOutside { x: f64 },
    #[error("requested jet order {order} exceeds the supported {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("dt = {dt} exceeds the CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("solution blew up (|u| > cap or non-finite) at t = {t}")]
    BlowUp { t: f64 },
    #[error("invalid march options: {0}")]
    BadOptions(String),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("field file: {0}")]
    Format(String),
}

impl From<std::io::Error> for FieldError {
    fn from(e: std::io::Error) -> Self {
        FieldError::Format(e.to_string())
    }
}

/// Uniform 1-D grid. Periodic grids have `nx` nodes (x_max is the image of
/// x_min); bounded grids have `nx + 1` nodes including both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub periodic: bool,
}

impl Grid1D {
    pub fn periodic(x_min: f64, x_max: f64, nx: usize) -> Result<Grid1D, FieldError> {
        Grid1D::checked(Grid1D { x_min, x_max, nx, periodic: true })
    }

    pub fn bounded(x_min: f64, x_max: f64, nx: usize) -> Result<Grid1D, FieldError> {
        Grid1D::checked(Grid1D { x_min, x_max, nx, periodic: false })
    }

    fn checked(g: Grid1D) -> Result<Grid1D, FieldError> {
        if g.nx < 16 {
            return Err(FieldError::BadGrid(format!("nx = {} (need at least 16)", g.nx)));
        }
        if !(g.x_min.is_finite() && g.x_max.is_finite() && g.x_max > g.x_min) {
            return Err(FieldError::BadGrid(format!("[{}, {}] is not an interval", g.x_min, g.x_max)));
        }
        Ok(g)
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.nx as f64
    }

    /// Number of stored nodes.
    pub fn len(&self) -> usize {
        if self.periodic {
            self.nx
        } else {
            self.nx + 1
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.x(i)).collect()
    }

    /// Index of the node at `x`, if `x` is one.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let r = (x - self.x_min) / self.dx();
        let i = r.round();
        if (r - i).abs() > 1e-7 || i < 0.0 {
            return None;
        }
        let i = i as usize;
        match i {
            i if i < self.len() => Some(i),
            i if self.periodic && i == self.nx => Some(0),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    /// Marched or imported arrays; jets come from stencils of this order.
    Numeric { scheme: String, stencil_order: usize },
    /// Closed-form u(x, t); jets are exact.
    Exact { expression: String },
}

/// u(x, t) on a grid at a list of times.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub grid: Grid1D,
    pub times: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    /// u_t rows from the semi-discrete operator, when the march provides them.
    pub ut: Option<Vec<Vec<f64>>>,
    pub provenance: Provenance,
    exact: Option<Expression>,
}

impl SolutionField {
    /// Arrays sampled with central stencils of `stencil_order`.
    pub fn numeric(
        grid: Grid1D,
        times: Vec<f64>,
        u: Vec<Vec<f64>>,
        ut: Option<Vec<Vec<f64>>>,
        scheme: &str,
        stencil_order: usize,
    ) -> Result<SolutionField, FieldError> {
        if times.is_empty() || times.len() != u.len() {
            return Err(FieldError::BadOptions(format!("{} times for {} rows", times.len(), u.len())));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FieldError::BadOptions("times must increase".into()));
        }
        if u.iter().chain(ut.iter().flatten()).any(|row| row.len() != grid.len()) {
            return Err(FieldError::BadOptions(format!("rows must have {} entries", grid.len())));
        }
        if ut.as_ref().is_some_and(|r| r.len() != times.len()) {
            return Err(FieldError::BadOptions("u_t rows must match the times".into()));
        }
        if !(stencil_order >= 2 && stencil_order % 2 == 0) {
            return Err(FieldError::BadOptions(format!("stencil order {stencil_order} is not even")));
        }
        let provenance = Provenance::Numeric { scheme: scheme.to_string(), stencil_order };
        Ok(SolutionField { grid, times, u, ut, provenance, exact: None })
    }

    /// Closed form in `x` and `t`, tabulated on the grid at `times`.
    pub fn exact(expression: &str, grid: Grid1D, times: Vec<f64>) -> Result<SolutionField, FieldError> {
        let e = Expression::parse(expression, &["x", "t"])
            .map_err(|err| FieldError::BadOptions(format!("expression `{expression}`: {err}")))?;
        if times.is_empty() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FieldError::BadOptions("times must be non-empty and increasing".into()));
        }
        let u = times
            .iter()
            .map(|&t| grid.nodes().into_iter().map(|x| e.eval(&[x, t])).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let provenance = Provenance::Exact { expression: expression.to_string() };
        Ok(SolutionField { grid, times, u, ut: None, provenance, exact: Some(e) })
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// x-interval and t-interval covered.
    pub fn domain(&self) -> ((f64, f64), (f64, f64)) {
        ((self.grid.x_min, self.grid.x_max), (self.times[0], *self.times.last().unwrap()))
    }

    fn in_domain(&self, x: f64, t: f64) -> bool {
        let ((x0, x1), (t0, t1)) = self.domain();
        let tol = 1e-9 * (1.0 + t0.abs().max(t1.abs()));
        x >= x0 - 1e-9 * self.grid.dx() && x <= x1 + 1e-9 * self.grid.dx() && t >= t0 - tol && t <= t1 + tol
    }

    fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    /// u_t on row `s`: stored rows, else a Fornberg stencil over up to five
    /// neighbouring snapshots.
    fn time_derivative_row(&self, s: usize) -> Result<Vec<f64>, FieldError> {
        if let Some(ut) = &self.ut {
            return Ok(ut[s].clone());
        }
        let n = self.times.len();
        if n < 2 {
            return Err(FieldError::OrderTooHigh { order: 1, max: 0 });
        }
        let k = n.min(5);
        let lo = s.saturating_sub(k / 2).min(n - k);
        let ts = &self.times[lo..lo + k];
        let w = fd_weights(self.times[s], ts, 1).swap_remove(1);
        Ok((0..self.grid.len()).map(|i| (0..k).map(|j| w[j] * self.u[lo + j][i]).sum()).collect())
    }

    fn stencil_at(&self, row: &[f64], i: usize, deriv: usize, order: usize) -> Result<f64, FieldError> {
        let st = Stencil::central(deriv, order);
        if self.grid.periodic {
            Ok(st.at_periodic(row, i, self.grid.dx()))
        } else {
            st.at_bounded(row, i, self.grid.dx()).ok_or(FieldError::StencilOutside { x: self.grid.x(i) })
        }
    }
}

/// Jet (z_0..z_order, w_1, v_1) of the field at (x, t), with the measured
/// mixed derivatives z_{k,t} (k ≤ order) in `zt`. Exact fields are
/// differentiated analytically; numeric ones need a grid node and a stored
/// time.
pub fn sample_jet(field: &SolutionField, x: f64, t: f64, order: usize) -> Result<JetPoint, FieldError> {
    if !field.in_domain(x, t) {
        return Err(FieldError::OutOfDomain { x, t });
    }
    if let Some(e) = &field.exact {
        return exact_jet(e, x, t, order);
    }
    if order > MAX_NUMERIC_ORDER {
        return Err(FieldError::OrderTooHigh { order, max: MAX_NUMERIC_ORDER });
    }
    let Provenance::Numeric { stencil_order, .. } = field.provenance else { unreachable!("numeric field") };
    let (Some(i), Some(s)) = (field.grid.node_index(x), field.time_index(t)) else {
        return Err(FieldError::OffGrid { x, t });
    };
    let row = &field.u[s];
    let z = (0..=order).map(|k| field.stencil_at(row, i, k, stencil_order)).collect::<Result<Vec<_>, _>>()?;
    let ut = field.time_derivative_row(s)?;
    let zt = (0..=order).map(|k| field.stencil_at(&ut, i, k, stencil_order)).collect::<Result<Vec<_>, _>>()?;
    let mut p = JetPoint::new(x, t, z, vec![zt[0]], vec![field.stencil_at(&ut, i, 1, stencil_order)?]);
    p.zt = zt;
    Ok(p)
}

fn exact_jet(e: &Expression, x: f64, t: f64, order: usize) -> Result<JetPoint, FieldError> {
    let degree = order.max(1);
    let xv = Dual::constant(Taylor::variable(x, degree));
    let tv = Dual::variable(Taylor::constant(t), 0, 1);
    let r = e.eval(&[xv, tv])?;
    let z = (0..=order).map(|k| r.v.derivative(k)).collect();
    let dt = r.partial(0);
    let mut p = JetPoint::new(x, t, z, vec![dt.derivative(0)], vec![dt.derivative(1)]);
    p.zt = (0..=order).map(|k| dt.derivative(k)).collect();
    Ok(p)
}

/// u = 4·arctan(exp(ηx + t/η)), a one-soliton of u_xt = sin u.
pub fn exact_sine_gordon_kink(eta: f64, x: f64, t: f64) -> f64 {
    4.0 * (eta * x + t / eta).exp().atan()
}

/// Source text of the kink for exact fields.
pub fn kink_expression(eta: f64) -> String {
    format!("4*atan(exp(({eta:?})*x + t/({eta:?})))")
}

/// Exact kink tabulated on `grid` at `times`.
pub fn kink_field(eta: f64, grid: Grid1D, times: Vec<f64>) -> Result<SolutionField, FieldError> {
    if eta == 0.0 || !eta.is_finite() {
        return Err(FieldError::BadOptions(format!("η = {eta}")));
    }
    SolutionField::exact(&kink_expression(eta), grid, times)
}

/// Rows as CSV "t,x,u".
pub fn field_to_csv(field: &SolutionField) -> String {
    use std::fmt::Write as _;
    let mut out = String::from("t,x,u\n");
    for (t, row) in field.times.iter().zip(&field.u) {
        for (i, u) in row.iter().enumerate() {
            writeln!(out, "{t:.17e},{:.17e},{u:.17e}", field.grid.x(i)).unwrap();
        }
    }
    out
}

/// ∫(u² + u_x²)dx on a periodic row, u_x by the given stencil order.
pub fn h1_energy(grid: &Grid1D, u: &[f64], order: usize) -> f64 {
    let ux = Stencil::central(1, order).apply_periodic(u, grid.dx());
    u.iter().zip(&ux).map(|(a, b)| a * a + b * b).sum::<f64>() * grid.dx()
}
