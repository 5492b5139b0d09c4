//! Jet coordinates, an expression language with exact forward-mode partials,
//! total derivatives and on-shell prolongation.

mod dual;
mod expr;
mod point;
mod scalar;
mod taylor;

use std::collections::BTreeMap;

use thiserror::Error;

pub use dual::Dual;
pub use expr::{EvalError, Expression, Func, ParseError};
pub use point::{Coord, JetPoint};
pub use scalar::{DomainError, Scalar};
pub use taylor::{factorial, Taylor};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("jet coordinate {0} is missing")]
    Missing(Coord),
    #[error("mixed derivative z{0},t is missing (jet not prolonged far enough)")]
    MissingMixed(usize),
    #[error("variable `{0}` is not a jet coordinate")]
    NotJetVariable(String),
    #[error("x-derivative of {0} is not determined off-shell")]
    Undetermined(Coord),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Value and first partials of an expression, keyed by variable name.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: f64,
    pub partials: BTreeMap<String, f64>,
}

/// A differential function on jet space.
pub trait JetFunction {
    /// Value and first partials with respect to the coordinates it depends on.
    fn partials(&self, p: &JetPoint) -> Result<(f64, Vec<(Coord, f64)>), JetError>;

    /// Normalized Taylor coefficients of the function along the x-flow up to
    /// `degree`: coefficient m times m! is D_x^m of the function at `p`.
    fn x_series(&self, p: &JetPoint, degree: usize) -> Result<Taylor, JetError>;
}

/// The series of a jet coordinate as the point slides along x.
///
/// z_i(x+ε) = Σ z_{i+m} ε^m/m!. For w_j only the first order is known
/// (w_{j,x} = v_j); v_k has no determined x-derivative off-shell.
pub fn coord_series(p: &JetPoint, c: Coord, degree: usize) -> Result<Taylor, JetError> {
    match c {
        Coord::X => Ok(Taylor::variable(p.x, degree)),
        Coord::T => Ok(Taylor::constant(p.t)),
        Coord::Z(i) => {
            let coeffs = (0..=degree)
                .map(|m| Ok(p.z(i + m)? / factorial(m)))
                .collect::<Result<Vec<_>, JetError>>()?;
            Ok(Taylor::new(coeffs))
        }
        Coord::W(j) => match degree {
            0 => Ok(Taylor::constant(p.w(j)?)),
            1 => Ok(Taylor::new(vec![p.w(j)?, p.v(j)?])),
            _ => Err(JetError::Undetermined(Coord::V(j))),
        },
        Coord::V(k) => match degree {
            0 => Ok(Taylor::constant(p.v(k)?)),
            _ => Err(JetError::Undetermined(c)),
        },
    }
}

impl Expression {
    /// Jet coordinates of the variable table, in table order.
    pub fn coords(&self) -> Result<Vec<Coord>, JetError> {
        self.vars()
            .iter()
            .map(|v| Coord::from_name(v).ok_or_else(|| JetError::NotJetVariable(v.clone())))
            .collect()
    }

    pub fn eval_with_partials(&self, p: &JetPoint) -> Result<EvalResult, JetError> {
        let (value, parts) = self.partials(p)?;
        let partials = self.vars().iter().cloned().zip(parts.into_iter().map(|(_, d)| d)).collect();
        Ok(EvalResult { value, partials })
    }
}

impl JetFunction for Expression {
    fn partials(&self, p: &JetPoint) -> Result<(f64, Vec<(Coord, f64)>), JetError> {
        let coords = self.coords()?;
        let n = coords.len();
        let args = coords
            .iter()
            .enumerate()
            .map(|(i, c)| Ok(Dual::variable(p.get(*c)?, i, n)))
            .collect::<Result<Vec<_>, JetError>>()?;
        let r = self.eval(&args)?;
        let parts = coords.iter().enumerate().map(|(i, c)| (*c, r.partial(i))).collect();
        Ok((r.v, parts))
    }

    fn x_series(&self, p: &JetPoint, degree: usize) -> Result<Taylor, JetError> {
        let args = self
            .coords()?
            .into_iter()
            .map(|c| coord_series(p, c, degree))
            .collect::<Result<Vec<_>, JetError>>()?;
        let mut r = self.eval(&args)?;
        r.c.resize(degree + 1, 0.0);
        Ok(r)
    }
}

/// D_x h at `p`: h_x + Σ h_{z_i} z_{i+1} (+ Σ h_{w_j} v_j).
pub fn total_derivative_x<H: JetFunction + ?Sized>(h: &H, p: &JetPoint) -> Result<f64, JetError> {
    Ok(h.x_series(p, 1)?.coeff(1))
}

/// D_x^k h at `p`.
pub fn total_derivative_x_n<H: JetFunction + ?Sized>(h: &H, p: &JetPoint, k: usize) -> Result<f64, JetError> {
    Ok(h.x_series(p, k)?.derivative(k))
}

/// How the mixed derivatives z_{k,t} follow from the equation.
pub trait OnShell {
    /// `p` with `zt[0..=upto]` filled in.
    fn prolong(&self, p: &JetPoint, upto: usize) -> Result<JetPoint, JetError>;
}

/// Mixed derivatives taken as already recorded in the jet (for instance
/// measured on a numeric field) rather than derived from an equation.
pub struct Recorded;

impl OnShell for Recorded {
    fn prolong(&self, p: &JetPoint, upto: usize) -> Result<JetPoint, JetError> {
        if p.zt.len() > upto {
            Ok(p.clone())
        } else {
            Err(JetError::MissingMixed(p.zt.len()))
        }
    }
}

/// The flux of u_t − u_xxt = F: z_{k+2,t} = z_{k,t} − D_x^k F.
pub struct ThirdOrderFlux<'a, F: JetFunction + ?Sized>(pub &'a F);

impl<F: JetFunction + ?Sized> OnShell for ThirdOrderFlux<'_, F> {
    fn prolong(&self, p: &JetPoint, upto: usize) -> Result<JetPoint, JetError> {
        prolong_onshell(p, self.0, upto)
    }
}

/// z_{0,t} = w_1, z_{1,t} = v_1 and z_{k,t} for k = 2..upto from the flux F.
pub fn prolong_onshell<F: JetFunction + ?Sized>(p: &JetPoint, flux: &F, upto: usize) -> Result<JetPoint, JetError> {
    let mut zt = vec![p.w(1)?];
    if upto >= 1 {
        zt.push(p.v(1)?);
    }
    if upto >= 2 {
        let series = flux.x_series(p, upto - 2)?;
        for k in 2..=upto {
            let dkf = series.derivative(k - 2);
            zt.push(zt[k - 2] - dkf);
        }
    }
    let mut out = p.clone();
    out.zt = zt;
    Ok(out)
}

/// D_t h on-shell: h_t + Σ h_{z_i} z_{i,t} + Σ h_{w_j} w_{j+1} + Σ h_{v_k} v_{k+1}.
pub fn total_derivative_t<H: JetFunction + ?Sized, S: OnShell + ?Sized>(
    h: &H,
    p: &JetPoint,
    shell: &S,
) -> Result<f64, JetError> {
    let (_, parts) = h.partials(p)?;
    let top = parts
        .iter()
        .filter_map(|(c, _)| match c {
            Coord::Z(i) => Some(*i),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let q = shell.prolong(p, top.max(1))?;
    let mut acc = 0.0;
    for (c, d) in parts {
        acc += d * match c {
            Coord::X => 0.0,
            Coord::T => 1.0,
            Coord::Z(i) => q.zt(i)?,
            Coord::W(j) => p.w(j + 1)?,
            Coord::V(k) => p.v(k + 1)?,
        };
    }
    Ok(acc)
}

/// Convenience form taking the flux F directly.
pub fn total_derivative_t_onshell<H: JetFunction + ?Sized, F: JetFunction + ?Sized>(
    h: &H,
    p: &JetPoint,
    flux: &F,
) -> Result<f64, JetError> {
    total_derivative_t(h, p, &ThirdOrderFlux(flux))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jet(z: &[f64]) -> JetPoint {
        JetPoint::new(0.3, -0.2, z.to_vec(), vec![0.5, 0.25], vec![-1.5, 0.75])
    }

    #[test]
    fn dx_examples() {
        let p = jet(&[1.0, 2.0, 3.0, 4.0]);
        let e = |s: &str| Expression::parse(s, &["z0", "z1", "z2"]).unwrap();
        assert_eq!(total_derivative_x(&e("z0"), &p).unwrap(), 2.0);
        assert_eq!(total_derivative_x(&e("z0*z1"), &p).unwrap(), 7.0);
        assert_eq!(total_derivative_x(&e("z0 - z2"), &p).unwrap(), 2.0 - 4.0);
        let short = jet(&[1.0, 2.0, 3.0]);
        assert_eq!(total_derivative_x(&e("z2"), &short), Err(JetError::Missing(Coord::Z(3))));
    }

    #[test]
    fn dx_of_w_uses_v_and_rejects_v() {
        let p = jet(&[1.0, 2.0]);
        let w = Expression::parse("x*w1", &["x", "w1"]).unwrap();
        assert_eq!(total_derivative_x(&w, &p).unwrap(), 0.5 + 0.3 * -1.5);
        let v = Expression::parse("v1", &["v1"]).unwrap();
        assert_eq!(total_derivative_x(&v, &p), Err(JetError::Undetermined(Coord::V(1))));
        let s = Expression::parse("s", &["s"]).unwrap();
        assert!(matches!(total_derivative_x(&s, &p), Err(JetError::NotJetVariable(_))));
    }

    #[test]
    fn prolongation_examples() {
        let p = jet(&[0.5, -0.4, 0.3, 0.2, 0.1]);
        let f = Expression::parse("z0^2*z3 + z1*z2", &["z0", "z1", "z2", "z3"]).unwrap();
        let q = prolong_onshell(&p, &f, 3).unwrap();
        let fv = 0.25 * 0.2 + -0.4 * 0.3;
        assert!((q.zt[2] - (0.5 - fv)).abs() < 1e-15);
        let dxf = total_derivative_x(&f, &p).unwrap();
        assert!((q.zt[3] - (-1.5 - dxf)).abs() < 1e-15);
        let zero = Expression::parse("0", &["z0"]).unwrap();
        let q = prolong_onshell(&p, &zero, 4).unwrap();
        assert_eq!(q.zt, vec![0.5, -1.5, 0.5, -1.5, 0.5]);
        assert!(prolong_onshell(&p, &f, 5).is_err());
    }

    #[test]
    fn dt_examples() {
        let p = jet(&[0.5, -0.4, 0.3, 0.2]);
        let f = Expression::parse("z0*z3 + z1", &["z0", "z1", "z2", "z3"]).unwrap();
        let h = |s: &str| Expression::parse(s, &["z0", "z1", "z2", "t", "w1", "v1"]).unwrap();
        assert_eq!(total_derivative_t_onshell(&h("z0"), &p, &f).unwrap(), 0.5);
        assert_eq!(total_derivative_t_onshell(&h("z1"), &p, &f).unwrap(), -1.5);
        let fv = 0.5 * 0.2 - 0.4;
        assert!((total_derivative_t_onshell(&h("z2"), &p, &f).unwrap() - (0.5 - fv)).abs() < 1e-15);
        assert_eq!(total_derivative_t_onshell(&h("t*w1 + v1"), &p, &f).unwrap(), 0.5 + -0.2 * 0.25 + 0.75);
    }

    #[test]
    fn eval_with_partials_reports_every_declared_variable() {
        let p = jet(&[3.0, 0.0]);
        let e = Expression::parse("z0^2", &["z0", "z1"]).unwrap();
        let r = e.eval_with_partials(&p).unwrap();
        assert_eq!(r.value, 9.0);
        assert_eq!(r.partials["z0"], 6.0);
        assert_eq!(r.partials["z1"], 0.0);
        assert_eq!(r.partials.len(), 2);
    }
}
