//! (1 − ∂xx) and its inverse on a periodic grid, diagonalized by the FFT.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::stencil::Stencil;
use super::Grid1D;

/// How ∂xx is discretized inside the Helmholtz operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HelmholtzMethod {
    /// Exact Fourier symbol −k².
    Spectral,
    /// Symbol of the central second-derivative stencil of this order
    /// (order 2 is the cyclic-tridiagonal operator).
    Stencil(usize),
}

impl HelmholtzMethod {
    pub fn describe(&self) -> String {
        match self {
            HelmholtzMethod::Spectral => "spectral".into(),
            HelmholtzMethod::Stencil(p) => format!("central-{p} stencil symbol"),
        }
    }

    /// Eigenvalue of 1 − ∂xx on Fourier mode j.
    fn eigenvalues(&self, grid: &Grid1D) -> Vec<f64> {
        let n = grid.nx;
        let dx = grid.dx();
        let len = grid.x_max - grid.x_min;
        let stencil = match self {
            HelmholtzMethod::Spectral => None,
            HelmholtzMethod::Stencil(p) => Some(Stencil::central(2, *p)),
        };
        (0..n)
            .map(|j| {
                let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
                let k = 2.0 * std::f64::consts::PI * m / len;
                match &stencil {
                    None => 1.0 + k * k,
                    Some(s) => 1.0 - s.symbol(k * dx).0 / (dx * dx),
                }
            })
            .collect()
    }
}

fn spectral_scale(grid: &Grid1D, data: &[f64], method: HelmholtzMethod, invert: bool) -> Vec<f64> {
    let n = grid.nx;
    assert_eq!(data.len(), n, "array length must match the grid");
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fwd.process(&mut buf);
    for (c, lam) in buf.iter_mut().zip(method.eigenvalues(grid)) {
        *c = if invert { *c / lam } else { *c * lam };
    }
    inv.process(&mut buf);
    buf.iter().map(|c| c.re / n as f64).collect()
}

/// u with (1 − ∂xx)u = rhs.
pub fn helmholtz_invert(grid: &Grid1D, rhs: &[f64], method: HelmholtzMethod) -> Vec<f64> {
    spectral_scale(grid, rhs, method, true)
}

/// (1 − ∂xx)u.
pub fn helmholtz_apply(grid: &Grid1D, u: &[f64], method: HelmholtzMethod) -> Vec<f64> {
    match method {
        HelmholtzMethod::Spectral => spectral_scale(grid, u, method, false),
        HelmholtzMethod::Stencil(p) => {
            let d2 = Stencil::central(2, p).apply_periodic(u, grid.dx());
            u.iter().zip(d2).map(|(a, b)| a - b).collect()
        }
    }
}
