use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Why an elementary operation refused its argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainError {
    DivisionByZero,
    SqrtOfNegative,
    TanPole,
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DomainError::DivisionByZero => "division by zero",
            DomainError::SqrtOfNegative => "sqrt of negative",
            DomainError::TanPole => "tan at pole",
        };
        f.write_str(s)
    }
}

impl std::error::Error for DomainError {}

/// |cos| below this counts as a pole of tan.
pub const TAN_POLE_EPS: f64 = 1e-15;

/// Number-like values the expression evaluator and the coefficient families
/// are generic over: plain reals, forward-mode duals and truncated Taylor
/// series (and nestings of those).
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn cst(c: f64) -> Self;
    /// The underlying real value (zeroth coefficient all the way down).
    fn re(&self) -> f64;
    fn recip(&self) -> Result<Self, DomainError>;
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn tan(&self) -> Result<Self, DomainError>;
    fn sqrt(&self) -> Result<Self, DomainError>;
    fn atan(&self) -> Self;

    fn try_div(&self, rhs: &Self) -> Result<Self, DomainError> {
        Ok(self.clone() * rhs.recip()?)
    }

    fn sq(&self) -> Self {
        self.clone() * self.clone()
    }

    fn powi(&self, n: i32) -> Result<Self, DomainError> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let mut acc = Self::cst(1.0);
        let mut base = self.clone();
        let mut k = n as u32;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base.clone();
            }
            k >>= 1;
            if k > 0 {
                base = base.sq();
            }
        }
        Ok(acc)
    }
}

impl Scalar for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn re(&self) -> f64 {
        *self
    }
    fn recip(&self) -> Result<Self, DomainError> {
        if *self == 0.0 {
            Err(DomainError::DivisionByZero)
        } else {
            Ok(1.0 / self)
        }
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn tan(&self) -> Result<Self, DomainError> {
        let c = f64::cos(*self);
        if c.abs() < TAN_POLE_EPS {
            Err(DomainError::TanPole)
        } else {
            Ok(f64::sin(*self) / c)
        }
    }
    fn sqrt(&self) -> Result<Self, DomainError> {
        if *self < 0.0 {
            Err(DomainError::SqrtOfNegative)
        } else {
            Ok(f64::sqrt(*self))
        }
    }
    fn atan(&self) -> Self {
        f64::atan(*self)
    }
    fn powi(&self, n: i32) -> Result<Self, DomainError> {
        if n < 0 && *self == 0.0 {
            return Err(DomainError::DivisionByZero);
        }
        Ok(f64::powi(*self, n))
    }
}
