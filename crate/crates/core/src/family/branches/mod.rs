mod sine_gordon;
mod t22;
mod t23;
mod t24;
mod t25;

use rand::Rng;

use crate::jet::{Dual, EvalError, Expression, Scalar};

pub(crate) use sine_gordon::SineGordonRule;
pub(crate) use t22::T22Rule;
pub(crate) use t23::T23Rule;
pub(crate) use t24::T24Rule;
pub(crate) use t25::{T25iRule, T25iiRule};

/// Parsed user expressions of a spec.
#[derive(Debug, Clone, Default)]
pub struct Exprs {
    pub f: Option<Expression>,
    pub phi12: Option<Expression>,
    pub phi: Option<Expression>,
}

impl Exprs {
    pub(crate) fn f(&self) -> Expression {
        self.f.clone().expect("presence checked by the registry")
    }
    pub(crate) fn phi12(&self) -> Expression {
        self.phi12.clone().expect("presence checked by the registry")
    }
    pub(crate) fn phi(&self) -> Expression {
        self.phi.clone().expect("presence checked by the registry")
    }
}

/// f(s) and f'(s).
pub(crate) fn with_slope<T: Scalar>(f: &Expression, s: &T) -> Result<(T, T), EvalError> {
    let r = f.eval(&[Dual::variable(s.clone(), 0, 1)])?;
    let d = r.partial(0);
    Ok((r.v, d))
}

/// φ12(z0, z1) with both first partials.
pub(crate) fn with_gradient<T: Scalar>(e: &Expression, z0: &T, z1: &T) -> Result<(T, T, T), EvalError> {
    let r = e.eval(&[Dual::variable(z0.clone(), 0, 2), Dual::variable(z1.clone(), 1, 2)])?;
    let (d0, d1) = (r.partial(0), r.partial(1));
    Ok((r.v, d0, d1))
}

/// φ(z0), φ'(z0), φ''(z0) through a nested dual.
pub(crate) fn with_two_slopes<T: Scalar>(e: &Expression, z0: &T) -> Result<(T, T, T), EvalError> {
    let x = Dual { v: Dual::variable(z0.clone(), 0, 1), d: vec![Dual::constant(T::cst(1.0))] };
    let r = e.eval(&[x])?;
    let second = r.partial(0).partial(0);
    Ok((r.v.v.clone(), r.v.partial(0), second))
}

pub(crate) fn divide<T: Scalar>(num: T, den: &T, what: &str) -> Result<T, EvalError> {
    num.try_div(den).map_err(|kind| EvalError::Domain { kind, node: what.to_string() })
}

const PROFILES: [&str; 5] = ["s", "2*s + s^3", "exp(s)", "s + sin(s)/2", "3*s - 1"];
const PHI12S: [&str; 5] = ["z1", "z0*(z1 - z0)^2", "z0 + z1^2 + 1", "exp(z0)*z1 + 1", "sin(z0) + z1"];
const PHIS: [&str; 4] = ["1 + z0^2", "exp(z0)", "2 + sin(z0)", "z0 - 3"];

/// A profile f(s) with f' bounded away from zero.
pub fn random_profile(rng: &mut dyn rand::RngCore) -> &'static str {
    PROFILES[rng.gen_range(0..PROFILES.len())]
}

pub fn random_phi12(rng: &mut dyn rand::RngCore) -> &'static str {
    PHI12S[rng.gen_range(0..PHI12S.len())]
}

pub fn random_phi(rng: &mut dyn rand::RngCore) -> &'static str {
    PHIS[rng.gen_range(0..PHIS.len())]
}

/// Uniform magnitude in [lo, hi] with a random sign.
pub(crate) fn signed(rng: &mut dyn rand::RngCore, lo: f64, hi: f64) -> f64 {
    let v = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

pub(crate) fn coin(rng: &mut dyn rand::RngCore) -> i32 {
    if rng.gen_bool(0.5) {
        1
    } else {
        -1
    }
}
