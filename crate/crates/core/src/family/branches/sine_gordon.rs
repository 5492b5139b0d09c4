use std::sync::Arc;

use super::{signed, Exprs};
use crate::family::spec::Check;
use crate::family::{
    Branch, BranchRule, Coefficients, Constants, Evolution, FamilyError, FamilySpec, Forms, ImmersionCase, Violation,
};
use crate::jet::{EvalError, Scalar};

/// u_xt = sin u with spectral parameter η.
#[derive(Debug)]
pub(crate) struct SineGordon {
    eta: f64,
}

impl<T: Scalar> Coefficients<T> for SineGordon {
    fn forms(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError> {
        let k = 1.0 / self.eta;
        Ok([
            [T::cst(0.0), z[0].sin() * k],
            [T::cst(self.eta), z[0].cos() * k],
            [z[1].clone(), T::cst(0.0)],
        ])
    }

    fn rhs(&self, z: &[T; 3]) -> Result<T, EvalError> {
        Ok(z[0].sin())
    }
}

impl Branch for SineGordon {
    fn name(&self) -> &str {
        "SINE_GORDON"
    }

    fn constants(&self) -> Option<Constants> {
        None
    }

    fn evolution(&self) -> Evolution {
        Evolution::SineGordon
    }

    fn immersion(&self) -> ImmersionCase {
        ImmersionCase::SolutionDependent { eta: self.eta }
    }
}

pub(crate) struct SineGordonRule;

fn read(spec: &FamilySpec) -> (f64, Vec<Violation>) {
    let mut c = Check::new(spec, &["eta"]);
    let eta = c.require("eta");
    c.that(eta != 0.0, "η ≠ 0", || format!("η = {eta}"));
    (eta, c.out)
}

impl BranchRule for SineGordonRule {
    fn name(&self) -> &'static str {
        "SINE_GORDON"
    }

    fn expressions(&self) -> &'static [&'static str] {
        &[]
    }

    fn validate(&self, spec: &FamilySpec) -> Vec<Violation> {
        read(spec).1
    }

    fn build(&self, spec: &FamilySpec, _: &Exprs) -> Result<Arc<dyn Branch>, FamilyError> {
        let (eta, v) = read(spec);
        if !v.is_empty() {
            return Err(FamilyError::Constraint(v));
        }
        Ok(Arc::new(SineGordon { eta }))
    }

    fn random_spec(&self, rng: &mut dyn rand::RngCore) -> FamilySpec {
        FamilySpec::new("SINE_GORDON").set("eta", signed(rng, 0.5, 2.0))
    }
}
