//! First-order forward-mode dual numbers over any [`Scalar`].
//!
//! The gradient is stored densely but lazily: a missing trailing entry is
//! zero, so constants carry an empty gradient and never need to know the
//! number of seeded variables. Nesting `Dual<Dual<f64>>` yields second
//! derivatives.

use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::{DomainError, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Dual<T> {
    pub v: T,
    pub d: Vec<T>,
}

impl<T: Scalar> Dual<T> {
    pub fn constant(v: T) -> Self {
        Dual { v, d: Vec::new() }
    }

    /// Seed variable `i` of `n`.
    pub fn variable(v: T, i: usize, n: usize) -> Self {
        let mut d = vec![T::cst(0.0); n.max(i + 1)];
        d[i] = T::cst(1.0);
        Dual { v, d }
    }

    pub fn partial(&self, i: usize) -> T {
        self.d.get(i).cloned().unwrap_or_else(|| T::cst(0.0))
    }

    /// Apply a unary function given its value and derivative at `self.v`.
    fn chain(&self, v: T, dv: T) -> Self {
        Dual {
            v,
            d: self.d.iter().map(|x| x.clone() * dv.clone()).collect(),
        }
    }
}

fn merge<T: Clone>(a: &[T], b: &[T], both: impl Fn(&T, &T) -> T, left: impl Fn(&T) -> T, right: impl Fn(&T) -> T) -> Vec<T> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| match (a.get(i), b.get(i)) {
            (Some(x), Some(y)) => both(x, y),
            (Some(x), None) => left(x),
            (None, Some(y)) => right(y),
            (None, None) => unreachable!(),
        })
        .collect()
}

impl<T: Scalar> Add for Dual<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let d = merge(&self.d, &o.d, |x, y| x.clone() + y.clone(), T::clone, T::clone);
        Dual { v: self.v + o.v, d }
    }
}

impl<T: Scalar> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let d = merge(&self.d, &o.d, |x, y| x.clone() - y.clone(), T::clone, |y| -y.clone());
        Dual { v: self.v - o.v, d }
    }
}

impl<T: Scalar> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let (av, bv) = (&self.v, &o.v);
        let d = merge(
            &self.d,
            &o.d,
            |x, y| x.clone() * bv.clone() + y.clone() * av.clone(),
            |x| x.clone() * bv.clone(),
            |y| y.clone() * av.clone(),
        );
        Dual { v: self.v * o.v, d }
    }
}

impl<T: Scalar> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual {
            v: -self.v,
            d: self.d.into_iter().map(|x| -x).collect(),
        }
    }
}

impl<T: Scalar> Add<f64> for Dual<T> {
    type Output = Self;
    fn add(self, c: f64) -> Self {
        Dual { v: self.v + c, d: self.d }
    }
}

impl<T: Scalar> Sub<f64> for Dual<T> {
    type Output = Self;
    fn sub(self, c: f64) -> Self {
        Dual { v: self.v - c, d: self.d }
    }
}

impl<T: Scalar> Mul<f64> for Dual<T> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        Dual {
            v: self.v * c,
            d: self.d.into_iter().map(|x| x * c).collect(),
        }
    }
}

impl<T: Scalar> Scalar for Dual<T> {
    fn cst(c: f64) -> Self {
        Dual::constant(T::cst(c))
    }
    fn re(&self) -> f64 {
        self.v.re()
    }
    fn recip(&self) -> Result<Self, DomainError> {
        let r = self.v.recip()?;
        let dr = -(r.clone() * r.clone());
        Ok(self.chain(r, dr))
    }
    fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e.clone(), e)
    }
    fn sin(&self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(&self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn tan(&self) -> Result<Self, DomainError> {
        let t = self.v.tan()?;
        let dt = t.sq() + 1.0;
        Ok(self.chain(t, dt))
    }
    fn sqrt(&self) -> Result<Self, DomainError> {
        let s = self.v.sqrt()?;
        let ds = (s.clone() * 2.0).recip()?;
        Ok(self.chain(s, ds))
    }
    fn atan(&self) -> Self {
        let da = (self.v.sq() + 1.0).recip().expect("1 + x^2 is never zero");
        self.chain(self.v.atan(), da)
    }
    fn powi(&self, n: i32) -> Result<Self, DomainError> {
        if n == 0 {
            return Ok(Self::cst(1.0));
        }
        let p = self.v.powi(n)?;
        let dp = self.v.powi(n - 1)? * (n as f64);
        Ok(self.chain(p, dp))
    }
}
