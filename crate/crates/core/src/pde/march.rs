//! Method-of-lines marches with classical RK4 in time.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::helmholtz::{helmholtz_invert, HelmholtzMethod};
use super::stencil::Stencil;
use super::{FieldError, Grid1D, SolutionField};
use crate::family::{Evolution, Family};

/// Abort once |u|∞ exceeds this.
pub const BLOWUP_CAP: f64 = 1e6;
/// CFL heuristic dt ≤ CFL_C·dx / max|λu²|. After the Helmholtz inverse the
/// transport term behaves like advection with speed λu², and RK4 stays
/// stable on the imaginary axis up to |dt·ω| ≈ 2.8; with the 4th-order
/// first-derivative symbol peaking near 1.37/dx this leaves a margin of 2.
pub const CFL_C: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MolOptions {
    pub t_max: f64,
    pub dt: f64,
    /// Stored times after t = 0.
    pub snapshots: usize,
    pub stencil_order: usize,
    pub helmholtz: HelmholtzMethod,
}

impl Default for MolOptions {
    fn default() -> Self {
        MolOptions { t_max: 1.0, dt: 1e-2, snapshots: 10, stencil_order: 4, helmholtz: HelmholtzMethod::Spectral }
    }
}

/// Steps per snapshot and the adjusted dt.
fn schedule(t_span: f64, dt: f64, snapshots: usize) -> Result<(usize, f64), FieldError> {
    if !(t_span > 0.0 && t_span.is_finite() && dt > 0.0 && dt.is_finite()) || snapshots == 0 {
        return Err(FieldError::BadOptions(format!("t span {t_span}, dt {dt}, {snapshots} snapshots")));
    }
    let per = ((t_span / snapshots as f64) / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((per, t_span / (per * snapshots) as f64))
}

fn rk4_step(u: &[f64], dt: f64, rhs: &dyn Fn(&[f64]) -> Result<Vec<f64>, FieldError>) -> Result<Vec<f64>, FieldError> {
    let axpy = |a: &[f64], k: &[f64], s: f64| a.iter().zip(k).map(|(x, y)| x + s * y).collect::<Vec<_>>();
    let k1 = rhs(u)?;
    let k2 = rhs(&axpy(u, &k1, 0.5 * dt))?;
    let k3 = rhs(&axpy(u, &k2, 0.5 * dt))?;
    let k4 = rhs(&axpy(u, &k3, dt))?;
    Ok((0..u.len()).map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect())
}

fn blown_up(u: &[f64]) -> bool {
    u.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP_CAP)
}

/// March u_t − u_xxt = λu²u_xxx + G(u, u_x, u_xx) on a periodic grid:
/// u_t = (1 − ∂xx)⁻¹(λu²u_xxx + G), central stencils in space, RK4 in time.
pub fn solve_mol(fam: &Family, grid: Grid1D, u0: &[f64], opts: &MolOptions) -> Result<SolutionField, FieldError> {
    let Evolution::ThirdOrder { lambda } = fam.evolution() else {
        return Err(FieldError::BadOptions(format!("{} is not a third-order evolution equation", fam.label())));
    };
    if !grid.periodic {
        return Err(FieldError::BadGrid("the third-order march needs a periodic grid".into()));
    }
    if u0.len() != grid.len() || u0.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::BadOptions("u0 must be finite with one value per node".into()));
    }
    let dx = grid.dx();
    let umax = u0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let speed = lambda.abs() * umax * umax;
    if speed > 0.0 && opts.dt > CFL_C * dx / speed {
        return Err(FieldError::Cfl { dt: opts.dt, limit: CFL_C * dx / speed });
    }
    let (per, dt) = schedule(opts.t_max, opts.dt, opts.snapshots)?;
    let [d1, d2, d3] = [1, 2, 3].map(|k| Stencil::central(k, opts.stencil_order));
    let rhs = |u: &[f64]| -> Result<Vec<f64>, FieldError> {
        let forcing = (0..u.len())
            .into_par_iter()
            .map(|i| {
                let z = [u[i], d1.at_periodic(u, i, dx), d2.at_periodic(u, i, dx)];
                let g = fam.rhs(&z)?;
                Ok(lambda * u[i] * u[i] * d3.at_periodic(u, i, dx) + g)
            })
            .collect::<Result<Vec<f64>, FieldError>>()?;
        Ok(helmholtz_invert(&grid, &forcing, opts.helmholtz))
    };
    let mut u = u0.to_vec();
    let mut times = vec![0.0];
    let mut rows = vec![u.clone()];
    let mut ut = vec![rhs(&u)?];
    for snap in 1..=opts.snapshots {
        for step in 0..per {
            u = rk4_step(&u, dt, &rhs)?;
            if blown_up(&u) {
                return Err(FieldError::BlowUp { t: ((snap - 1) * per + step + 1) as f64 * dt });
            }
        }
        times.push((snap * per) as f64 * dt);
        ut.push(rhs(&u)?);
        rows.push(u.clone());
    }
    let scheme = format!(
        "RK4 method of lines, dt = {dt:e}, central-{} stencils, {} Helmholtz inverse, periodic",
        opts.stencil_order,
        opts.helmholtz.describe()
    );
    SolutionField::numeric(grid, times, rows, Some(ut), &scheme, opts.stencil_order)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SineGordonOptions {
    pub t0: f64,
    pub t_max: f64,
    pub dt: f64,
    pub snapshots: usize,
    /// 4 for cubic-interpolation quadrature, 2 for the trapezoid rule.
    pub order: usize,
}

impl Default for SineGordonOptions {
    fn default() -> Self {
        SineGordonOptions { t0: 0.0, t_max: 1.0, dt: 0.05, snapshots: 10, order: 4 }
    }
}

/// Running integral ∫_{x_min}^{x_i} f on a bounded grid.
fn cumulative_integral(f: &[f64], dx: f64, order: usize) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let piece = if order == 2 {
            0.5 * dx * (f[i] + f[i + 1])
        } else if i == 0 {
            dx / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
        } else if i == n - 2 {
            dx / 24.0 * (f[n - 4] - 5.0 * f[n - 3] + 19.0 * f[n - 2] + 9.0 * f[n - 1])
        } else {
            dx / 24.0 * (-f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2])
        };
        out[i + 1] = out[i] + piece;
    }
    out
}

/// March u_xt = sin u in light-cone form u_t(x) = ∫_{x_min}^x sin u dx'
/// on a bounded grid. The integration constant is zero, i.e. u_t is taken
/// to vanish at x_min, which holds up to the decay of the data there.
pub fn sine_gordon_march(grid: Grid1D, u0: &[f64], opts: &SineGordonOptions) -> Result<SolutionField, FieldError> {
    if grid.periodic {
        return Err(FieldError::BadGrid("the light-cone march needs a bounded grid".into()));
    }
    if opts.order != 2 && opts.order != 4 {
        return Err(FieldError::BadOptions(format!("quadrature order {} (2 or 4)", opts.order)));
    }
    if u0.len() != grid.len() || u0.iter().any(|v| !v.is_finite()) {
        return Err(FieldError::BadOptions("u0 must be finite with one value per node".into()));
    }
    let (per, dt) = schedule(opts.t_max - opts.t0, opts.dt, opts.snapshots)?;
    let dx = grid.dx();
    let rhs = |u: &[f64]| -> Result<Vec<f64>, FieldError> {
        let s: Vec<f64> = u.iter().map(|v| v.sin()).collect();
        Ok(cumulative_integral(&s, dx, opts.order))
    };
    let mut u = u0.to_vec();
    let mut times = vec![opts.t0];
    let mut rows = vec![u.clone()];
    let mut ut = vec![rhs(&u)?];
    for snap in 1..=opts.snapshots {
        for step in 0..per {
            u = rk4_step(&u, dt, &rhs)?;
            if blown_up(&u) {
                return Err(FieldError::BlowUp { t: opts.t0 + ((snap - 1) * per + step + 1) as f64 * dt });
            }
        }
        times.push(opts.t0 + (snap * per) as f64 * dt);
        ut.push(rhs(&u)?);
        rows.push(u.clone());
    }
    let scheme = format!("RK4 light-cone march, dt = {dt:e}, order-{} quadrature, decay at x_min", opts.order);
    SolutionField::numeric(grid, times, rows, Some(ut), &scheme, opts.order)
}
