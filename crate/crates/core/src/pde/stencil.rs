//! Finite-difference weights (Fornberg's recursion) and central stencils on
//! uniform grids.

/// Weights `w[m][j]` such that Σ_j w[m][j]·f(xs[j]) approximates the m-th
/// derivative of f at `x0`, for m = 0..=max_deriv.
pub fn fd_weights(x0: f64, xs: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut w = vec![vec![0.0; n]; max_deriv + 1];
    if n == 0 {
        return w;
    }
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[k][i] = c1 * (k as f64 * w[k - 1][i - 1] - c5 * w[k][i - 1]) / c2;
                }
                w[0][i] = -c1 * c5 * w[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                w[k][j] = (c4 * w[k][j] - k as f64 * w[k - 1][j]) / c3;
            }
            w[0][j] = c4 * w[0][j] / c3;
        }
        c1 = c2;
    }
    w
}

/// A central stencil for unit spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub deriv: usize,
    pub order: usize,
    pub offsets: Vec<i64>,
    pub weights: Vec<f64>,
}

impl Stencil {
    /// Central stencil of even accuracy `order` for the `deriv`-th derivative.
    pub fn central(deriv: usize, order: usize) -> Stencil {
        assert!(order >= 2 && order % 2 == 0, "central stencils have even order");
        let half = ((deriv + 1) / 2 + order / 2 - 1) as i64;
        let half = half.max(if deriv == 0 { 0 } else { 1 });
        let offsets: Vec<i64> = (-half..=half).collect();
        let xs: Vec<f64> = offsets.iter().map(|&o| o as f64).collect();
        let weights = fd_weights(0.0, &xs, deriv).swap_remove(deriv);
        Stencil { deriv, order, offsets, weights }
    }

    pub fn half_width(&self) -> usize {
        self.offsets.iter().map(|o| o.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Applied at node `i` of a periodic array with spacing `dx`.
    pub fn at_periodic(&self, u: &[f64], i: usize, dx: f64) -> f64 {
        let n = u.len() as i64;
        let s: f64 = self
            .offsets
            .iter()
            .zip(&self.weights)
            .map(|(&o, &w)| w * u[(i as i64 + o).rem_euclid(n) as usize])
            .sum();
        s / dx.powi(self.deriv as i32)
    }

    /// Applied at node `i` of a bounded array; `None` if the stencil leaves it.
    pub fn at_bounded(&self, u: &[f64], i: usize, dx: f64) -> Option<f64> {
        let h = self.half_width();
        if i < h || i + h >= u.len() {
            return None;
        }
        let s: f64 = self.offsets.iter().zip(&self.weights).map(|(&o, &w)| w * u[(i as i64 + o) as usize]).sum();
        Some(s / dx.powi(self.deriv as i32))
    }

    /// The whole periodic derivative array.
    pub fn apply_periodic(&self, u: &[f64], dx: f64) -> Vec<f64> {
        (0..u.len()).map(|i| self.at_periodic(u, i, dx)).collect()
    }

    /// Fourier symbol Σ w_m e^{iθm}; real for the symmetric even-derivative
    /// stencils.
    pub fn symbol(&self, theta: f64) -> (f64, f64) {
        self.offsets.iter().zip(&self.weights).fold((0.0, 0.0), |(re, im), (&o, &w)| {
            let (s, c) = (theta * o as f64).sin_cos();
            (re + w * c, im + w * s)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_weights() {
        let s = Stencil::central(1, 2);
        assert_eq!(s.offsets, vec![-1, 0, 1]);
        assert!((s.weights[0] + 0.5).abs() < 1e-15 && s.weights[1].abs() < 1e-15);
        let s = Stencil::central(2, 4);
        let want = [-1.0 / 12.0, 4.0 / 3.0, -2.5, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in s.weights.iter().zip(want) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        assert_eq!(Stencil::central(3, 4).offsets.len(), 7);
        assert_eq!(Stencil::central(5, 4).offsets.len(), 9);
    }

    #[test]
    fn one_sided_weights_are_exact_on_polynomials() {
        let xs = [0.0, 0.3, 0.7, 1.2, 2.0];
        let w = fd_weights(0.1, &xs, 2);
        let f = |x: f64| 1.0 - 2.0 * x + 3.0 * x * x - x.powi(4) / 10.0;
        let d2: f64 = w[2].iter().zip(xs).map(|(a, x)| a * f(x)).sum();
        let exact = 6.0 - 1.2 * 0.1f64.powi(2);
        assert!((d2 - exact).abs() < 1e-10);
    }
}
