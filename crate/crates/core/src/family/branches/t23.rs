use std::sync::Arc;

use rand::Rng;

use super::{coin, divide, random_profile, signed, with_slope, Exprs};
use crate::family::spec::{satisfies, Check};
use crate::family::{
    Branch, BranchRule, Coefficients, Constants, Evolution, FamilyError, FamilySpec, Forms, ImmersionCase, Violation,
};
use crate::jet::{EvalError, Expression, Scalar};

/// Quadratic part fixed by λ; only f is free.
#[derive(Debug)]
pub(crate) struct T23 {
    f: Expression,
    k: Constants,
    gamma: f64,
}

impl<T: Scalar> Coefficients<T> for T23 {
    fn forms(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError> {
        let Constants { lambda, mu2, eta2, mu3, eta3 } = self.k;
        let f = self.f.eval(&[z[0].clone() - z[2].clone()])?;
        let w = z[0].sq() * (-lambda);
        let q = z[0].clone() * z[1].clone() * (-2.0 / self.gamma * lambda * eta2);
        let f21 = f.clone() * mu2 + eta2;
        let f31 = f.clone() * mu3 + eta3;
        Ok([
            [f.clone(), w.clone() * f + q.clone()],
            [f21.clone(), w.clone() * f21 + q.clone() * mu2],
            [f31.clone(), w * f31 + q * mu3],
        ])
    }

    fn rhs(&self, z: &[T; 3]) -> Result<T, EvalError> {
        let Constants { lambda, mu2, eta2, mu3, eta3 } = self.k;
        let (f, fp) = with_slope(&self.f, &(z[0].clone() - z[2].clone()))?;
        let z01 = z[0].clone() * z[1].clone();
        let tail = z[1].sq() + z[0].clone() * z[2].clone() + z01.clone() * (mu3 * eta2 - mu2 * eta3);
        let bracket = z01.clone() * f * 2.0 + z01 * z[0].clone() * fp.clone() + tail * (2.0 * eta2 / self.gamma);
        divide(bracket * (-lambda), &fp, "f'(s)")
    }
}

impl Branch for T23 {
    fn name(&self) -> &str {
        "T23"
    }

    fn constants(&self) -> Option<Constants> {
        Some(self.k)
    }

    fn evolution(&self) -> Evolution {
        Evolution::ThirdOrder { lambda: self.k.lambda }
    }

    fn immersion(&self) -> ImmersionCase {
        ImmersionCase::None { citation: "Prop 4.2" }
    }
}

/// Roots of η2² − η3² − (μ2η3 − μ3η2)² = 0 in η3; `None` when complex.
pub(crate) fn solve_eta3(mu2: f64, eta2: f64, mu3: f64, root: f64) -> Option<f64> {
    let q = 1.0 + mu2 * mu2;
    let disc = q - mu3 * mu3;
    (disc >= 0.0).then(|| (mu2 * mu3 * eta2 + root * eta2 * f64::sqrt(disc)) / q)
}

pub(crate) struct T23Rule;

fn read(spec: &FamilySpec) -> (Constants, f64, Vec<Violation>) {
    let mut c = Check::new(spec, &["lambda", "mu2", "eta2", "mu3", "eta3", "root"]);
    let lambda = c.require("lambda");
    let mu2 = c.require("mu2");
    let eta2 = c.require("eta2");
    let mu3 = c.require("mu3");
    c.that(lambda != 0.0, "λ ≠ 0", || format!("λ = {lambda}"));
    c.that(eta2 != 0.0, "η2 ≠ 0", || format!("η2 = {eta2}"));
    let root = c.root();
    let eta3 = match spec.params.eta3 {
        Some(e) => {
            let res = eta2 * eta2 - e * e - (mu2 * e - mu3 * eta2).powi(2);
            c.that(satisfies(res, eta2 * eta2), "η2² − η3² − (μ2η3 − μ3η2)² = 0", || {
                format!("η2 = {eta2}, η3 = {e}, μ2 = {mu2}, μ3 = {mu3}: residual {res:e}")
            });
            e
        }
        None => match root {
            None => {
                c.fail("η3 or root present", "T23 needs `eta3` or a `root` selector to solve for it".into());
                f64::NAN
            }
            Some(r) => match solve_eta3(mu2, eta2, mu3, r) {
                Some(e) => e,
                None => {
                    c.fail("μ3² ≤ 1 + μ2²", format!("μ2 = {mu2}, μ3 = {mu3}: no real η3"));
                    f64::NAN
                }
            },
        },
    };
    let gamma = mu2 * mu3 * eta2 - (1.0 + mu2 * mu2) * eta3;
    if eta3.is_finite() {
        c.that(gamma != 0.0, "γ = μ2μ3η2 − (1+μ2²)η3 ≠ 0", || format!("γ = {gamma}"));
    }
    (Constants { lambda, mu2, eta2, mu3, eta3 }, gamma, c.out)
}

impl BranchRule for T23Rule {
    fn name(&self) -> &'static str {
        "T23"
    }

    fn expressions(&self) -> &'static [&'static str] {
        &["f"]
    }

    fn validate(&self, spec: &FamilySpec) -> Vec<Violation> {
        read(spec).2
    }

    fn build(&self, spec: &FamilySpec, ex: &Exprs) -> Result<Arc<dyn Branch>, FamilyError> {
        let (k, gamma, v) = read(spec);
        if !v.is_empty() {
            return Err(FamilyError::Constraint(v));
        }
        Ok(Arc::new(T23 { f: ex.f(), k, gamma }))
    }

    fn random_spec(&self, rng: &mut dyn rand::RngCore) -> FamilySpec {
        loop {
            let mu2 = rng.gen_range(-1.0..=1.0);
            let eta2 = signed(rng, 0.3, 2.0);
            let bound = 0.9 * f64::sqrt(1.0 + mu2 * mu2);
            let mu3 = rng.gen_range(-bound..=bound);
            let root = coin(rng);
            let eta3 = solve_eta3(mu2, eta2, mu3, root as f64).expect("μ3 drawn inside the real range");
            let gamma = mu2 * mu3 * eta2 - (1.0 + mu2 * mu2) * eta3;
            if gamma.abs() < 0.1 {
                continue;
            }
            return FamilySpec::new("T23")
                .set("lambda", signed(rng, 0.3, 1.5))
                .set("mu2", mu2)
                .set("eta2", eta2)
                .set("mu3", mu3)
                .set("root", root as f64)
                .with_sign(coin(rng))
                .with_f(random_profile(rng));
        }
    }
}
