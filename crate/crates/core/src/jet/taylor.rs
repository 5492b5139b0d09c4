//! Truncated univariate Taylor series, `c[k]` being the k-th normalized
//! coefficient (derivative / k!). Used to push jets along the x-flow so that
//! repeated total derivatives come out exactly.

use std::ops::{Add, Mul, Neg, Sub};

use super::scalar::{DomainError, Scalar, TAN_POLE_EPS};

#[derive(Clone, Debug, PartialEq)]
pub struct Taylor {
    pub c: Vec<f64>,
}

impl Taylor {
    pub fn new(c: Vec<f64>) -> Self {
        assert!(!c.is_empty(), "a Taylor series needs its constant term");
        Taylor { c }
    }

    pub fn constant(v: f64) -> Self {
        Taylor { c: vec![v] }
    }

    /// `v + ε`, truncated at `degree`.
    pub fn variable(v: f64, degree: usize) -> Self {
        let mut c = vec![0.0; degree + 1];
        c[0] = v;
        if degree > 0 {
            c[1] = 1.0;
        }
        Taylor { c }
    }

    pub fn coeff(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    /// k-th derivative with respect to the series variable.
    pub fn derivative(&self, k: usize) -> f64 {
        self.coeff(k) * factorial(k)
    }

    fn len(&self) -> usize {
        self.c.len()
    }

    /// `k * c[k]`: the series of ε·d/dε, shared by the exp/sin/cos/atan recurrences.
    fn weighted(&self, n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 * self.coeff(k)).collect()
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl Add for Taylor {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let n = self.len().max(o.len());
        let c = (0..n).map(|k| self.coeff(k) + o.coeff(k)).collect();
        Taylor { c }
    }
}

impl Sub for Taylor {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let n = self.len().max(o.len());
        let c = (0..n).map(|k| self.coeff(k) - o.coeff(k)).collect();
        Taylor { c }
    }
}

impl Mul for Taylor {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let n = self.len().max(o.len());
        let c = (0..n)
            .map(|k| {
                let lo = k.saturating_sub(o.len() - 1);
                let hi = k.min(self.len() - 1);
                (lo..=hi).map(|j| self.c[j] * o.c[k - j]).sum()
            })
            .collect();
        Taylor { c }
    }
}

impl Neg for Taylor {
    type Output = Self;
    fn neg(self) -> Self {
        Taylor { c: self.c.into_iter().map(|x| -x).collect() }
    }
}

impl Add<f64> for Taylor {
    type Output = Self;
    fn add(mut self, v: f64) -> Self {
        self.c[0] += v;
        self
    }
}

impl Sub<f64> for Taylor {
    type Output = Self;
    fn sub(mut self, v: f64) -> Self {
        self.c[0] -= v;
        self
    }
}

impl Mul<f64> for Taylor {
    type Output = Self;
    fn mul(self, v: f64) -> Self {
        Taylor { c: self.c.into_iter().map(|x| x * v).collect() }
    }
}

impl Scalar for Taylor {
    fn cst(c: f64) -> Self {
        Taylor::constant(c)
    }
    fn re(&self) -> f64 {
        self.c[0]
    }
    fn recip(&self) -> Result<Self, DomainError> {
        let a0 = self.c[0];
        if a0 == 0.0 {
            return Err(DomainError::DivisionByZero);
        }
        let n = self.len();
        let mut b = vec![0.0; n];
        b[0] = 1.0 / a0;
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| self.c[j] * b[k - j]).sum();
            b[k] = -s / a0;
        }
        Ok(Taylor { c: b })
    }
    fn exp(&self) -> Self {
        let n = self.len();
        let w = self.weighted(n);
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| w[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Taylor { c: e }
    }
    fn sin(&self) -> Self {
        sin_cos(self).0
    }
    fn cos(&self) -> Self {
        sin_cos(self).1
    }
    fn tan(&self) -> Result<Self, DomainError> {
        let (s, c) = sin_cos(self);
        if c.c[0].abs() < TAN_POLE_EPS {
            return Err(DomainError::TanPole);
        }
        Ok(s * c.recip()?)
    }
    fn sqrt(&self) -> Result<Self, DomainError> {
        let a0 = self.c[0];
        if a0 < 0.0 {
            return Err(DomainError::SqrtOfNegative);
        }
        let n = self.len();
        let mut r = vec![0.0; n];
        r[0] = a0.sqrt();
        if n > 1 && r[0] == 0.0 {
            return Err(DomainError::DivisionByZero);
        }
        for k in 1..n {
            let s: f64 = (1..k).map(|j| r[j] * r[k - j]).sum();
            r[k] = (self.c[k] - s) / (2.0 * r[0]);
        }
        Ok(Taylor { c: r })
    }
    fn atan(&self) -> Self {
        let n = self.len();
        let q = (self.sq() + 1.0).recip().expect("1 + x^2 is never zero");
        let w = self.weighted(n);
        let mut y = vec![0.0; n];
        y[0] = self.c[0].atan();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| w[j] * q.coeff(k - j)).sum();
            y[k] = s / k as f64;
        }
        Taylor { c: y }
    }
}

fn sin_cos(a: &Taylor) -> (Taylor, Taylor) {
    let n = a.len();
    let w = a.weighted(n);
    let mut s = vec![0.0; n];
    let mut c = vec![0.0; n];
    s[0] = a.c[0].sin();
    c[0] = a.c[0].cos();
    for k in 1..n {
        let ss: f64 = (1..=k).map(|j| w[j] * c[k - j]).sum();
        let cs: f64 = (1..=k).map(|j| w[j] * s[k - j]).sum();
        s[k] = ss / k as f64;
        c[k] = -cs / k as f64;
    }
    (Taylor { c: s }, Taylor { c })
}
