use std::sync::Arc;

use super::{coin, divide, random_phi12, random_profile, signed, with_gradient, with_slope, Exprs};
use crate::family::spec::Check;
use crate::family::{
    Branch, BranchRule, Coefficients, Constants, Evolution, FamilyError, FamilySpec, Forms, ImmersionCase,
    ReducedCoord, StripConstant, Violation,
};
use crate::jet::{EvalError, Expression, Scalar};

/// λ = 0; f and φ12 free.
#[derive(Debug)]
pub(crate) struct T22 {
    f: Expression,
    phi12: Expression,
    mu2: f64,
    eta2: f64,
    sigma: f64,
    r: f64,
}

impl<T: Scalar> Coefficients<T> for T22 {
    fn forms(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError> {
        let f = self.f.eval(&[z[0].clone() - z[2].clone()])?;
        let p = self.phi12.eval(&[z[0].clone(), z[1].clone()])?;
        let (s, r) = (self.sigma, self.r);
        Ok([
            [f.clone(), p.clone()],
            [f.clone() * self.mu2 + self.eta2, p.clone() * self.mu2],
            [f * (s * r) + s * self.mu2 * self.eta2 / r, p * (s * r)],
        ])
    }

    fn rhs(&self, z: &[T; 3]) -> Result<T, EvalError> {
        let (_, fp) = with_slope(&self.f, &(z[0].clone() - z[2].clone()))?;
        let (p, p0, p1) = with_gradient(&self.phi12, &z[0], &z[1])?;
        let num = p0 * z[1].clone() + p1 * z[2].clone() + p * (self.sigma * self.eta2 / self.r);
        divide(num, &fp, "f'(s)")
    }
}

impl Branch for T22 {
    fn name(&self) -> &str {
        "T22"
    }

    fn constants(&self) -> Option<Constants> {
        let (s, r) = (self.sigma, self.r);
        Some(Constants { lambda: 0.0, mu2: self.mu2, eta2: self.eta2, mu3: s * r, eta3: s * self.mu2 * self.eta2 / r })
    }

    fn evolution(&self) -> Evolution {
        Evolution::ThirdOrder { lambda: 0.0 }
    }

    fn immersion(&self) -> ImmersionCase {
        let coord = ReducedCoord { dx: 1.0, dt: 0.0 };
        if self.mu2 == 0.0 {
            ImmersionCase::Strip {
                label: "Prop 4.1(i)",
                coord,
                kappa: self.eta2,
                sigma: self.sigma,
                b_sign: -1.0,
                constant: StripConstant::CStrip,
            }
        } else {
            ImmersionCase::Ode { label: "Prop 4.1(ii)", coord, kappa: self.eta2, sigma: self.sigma, mu2: self.mu2 }
        }
    }
}

pub(crate) struct T22Rule;

fn read(spec: &FamilySpec) -> (T22, Vec<Violation>) {
    let mut c = Check::new(spec, &["lambda", "mu2", "eta2"]);
    let lambda = c.optional("lambda", 0.0);
    c.that(lambda == 0.0, "λ = 0", || format!("λ = {lambda}"));
    let mu2 = c.require("mu2");
    let eta2 = c.require("eta2");
    c.that(eta2 != 0.0, "η2 ≠ 0", || format!("η2 = {eta2}"));
    let sigma = c.sign();
    let b = T22 {
        f: Expression::parse("s", &["s"]).expect("literal"),
        phi12: Expression::parse("z1", &["z0", "z1"]).expect("literal"),
        mu2,
        eta2,
        sigma,
        r: f64::sqrt(1.0 + mu2 * mu2),
    };
    (b, c.out)
}

impl BranchRule for T22Rule {
    fn name(&self) -> &'static str {
        "T22"
    }

    fn expressions(&self) -> &'static [&'static str] {
        &["f", "phi12"]
    }

    fn validate(&self, spec: &FamilySpec) -> Vec<Violation> {
        read(spec).1
    }

    fn build(&self, spec: &FamilySpec, ex: &Exprs) -> Result<Arc<dyn Branch>, FamilyError> {
        let (mut b, v) = read(spec);
        if !v.is_empty() {
            return Err(FamilyError::Constraint(v));
        }
        b.f = ex.f();
        b.phi12 = ex.phi12();
        Ok(Arc::new(b))
    }

    fn random_spec(&self, rng: &mut dyn rand::RngCore) -> FamilySpec {
        let mu2 = if coin(rng) > 0 { 0.0 } else { signed(rng, 0.2, 1.5) };
        FamilySpec::new("T22")
            .set("mu2", mu2)
            .set("eta2", signed(rng, 0.3, 2.0))
            .with_sign(coin(rng))
            .with_f(random_profile(rng))
            .with_phi12(random_phi12(rng))
    }
}
