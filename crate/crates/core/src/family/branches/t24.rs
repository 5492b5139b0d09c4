use std::sync::Arc;

use rand::Rng;

use super::{coin, divide, random_phi12, random_profile, signed, with_gradient, with_slope, Exprs};
use crate::family::spec::Check;
use crate::family::{
    Branch, BranchRule, Coefficients, Constants, Evolution, FamilyError, FamilySpec, Forms, ImmersionCase,
    ReducedCoord, StripConstant, Violation,
};
use crate::jet::{EvalError, Expression, Scalar};

/// λz0² part plus free f and φ12, shifted by C.
#[derive(Debug)]
pub(crate) struct T24 {
    f: Expression,
    phi12: Expression,
    lambda: f64,
    mu2: f64,
    eta2: f64,
    c: f64,
    sigma: f64,
    r: f64,
}

impl<T: Scalar> Coefficients<T> for T24 {
    fn forms(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError> {
        let (l, mu2, eta2, c, s, r) = (self.lambda, self.mu2, self.eta2, self.c, self.sigma, self.r);
        let f = self.f.eval(&[z[0].clone() - z[2].clone()])?;
        let p = self.phi12.eval(&[z[0].clone(), z[1].clone()])?;
        let wf = z[0].sq() * f.clone() * (-l);
        Ok([
            [f.clone(), wf.clone() + p.clone()],
            [f.clone() * mu2 + eta2, wf.clone() * mu2 + p.clone() * mu2 + c],
            [f * (s * r) + s * mu2 * eta2 / r, wf * (s * r) + p * (s * r) + s * mu2 * c / r],
        ])
    }

    fn rhs(&self, z: &[T; 3]) -> Result<T, EvalError> {
        let (l, c, s, r) = (self.lambda, self.c, self.sigma, self.r);
        let k = s * self.eta2 / r;
        let (f, fp) = with_slope(&self.f, &(z[0].clone() - z[2].clone()))?;
        let (p, p0, p1) = with_gradient(&self.phi12, &z[0], &z[1])?;
        let z0sq = z[0].sq();
        let coef = z[0].clone() * z[1].clone() * (2.0 * l) + z0sq.clone() * (k * l) + s * c / r;
        let num = p0 * z[1].clone() + p1 * z[2].clone() - z0sq * z[1].clone() * fp.clone() * l + p * k - coef * f;
        divide(num, &fp, "f'(s)")
    }
}

impl Branch for T24 {
    fn name(&self) -> &str {
        "T24"
    }

    fn constants(&self) -> Option<Constants> {
        let (s, r) = (self.sigma, self.r);
        Some(Constants {
            lambda: self.lambda,
            mu2: self.mu2,
            eta2: self.eta2,
            mu3: s * r,
            eta3: s * self.mu2 * self.eta2 / r,
        })
    }

    fn evolution(&self) -> Evolution {
        Evolution::ThirdOrder { lambda: self.lambda }
    }

    fn immersion(&self) -> ImmersionCase {
        let sigma = self.sigma;
        if self.mu2 != 0.0 {
            let coord = ReducedCoord { dx: self.eta2, dt: self.c };
            return ImmersionCase::Ode { label: "Prop 4.3(iii)", coord, kappa: 1.0, sigma, mu2: self.mu2 };
        }
        if self.eta2 == 0.0 {
            ImmersionCase::Strip {
                label: "Prop 4.3(i)",
                coord: ReducedCoord { dx: 0.0, dt: 1.0 },
                kappa: self.c,
                sigma,
                b_sign: 1.0,
                constant: StripConstant::Sigma,
            }
        } else {
            ImmersionCase::Strip {
                label: "Prop 4.3(ii)",
                coord: ReducedCoord { dx: self.eta2, dt: self.c },
                kappa: 1.0,
                sigma,
                b_sign: -1.0,
                constant: StripConstant::Sigma,
            }
        }
    }
}

pub(crate) struct T24Rule;

fn read(spec: &FamilySpec) -> (T24, Vec<Violation>) {
    let mut c = Check::new(spec, &["lambda", "mu2", "eta2", "C"]);
    let lambda = c.require("lambda");
    let mu2 = c.require("mu2");
    let eta2 = c.require("eta2");
    let cc = c.require("C");
    let q = (lambda * eta2).powi(2) + cc * cc;
    c.that(q != 0.0, "(λη2)² + C² ≠ 0", || format!("λ = {lambda}, η2 = {eta2}, C = {cc}"));
    let b = T24 {
        f: Expression::parse("s", &["s"]).expect("literal"),
        phi12: Expression::parse("z1", &["z0", "z1"]).expect("literal"),
        lambda,
        mu2,
        eta2,
        c: cc,
        sigma: c.sign(),
        r: f64::sqrt(1.0 + mu2 * mu2),
    };
    (b, c.out)
}

impl BranchRule for T24Rule {
    fn name(&self) -> &'static str {
        "T24"
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
        let lambda = if rng.gen_bool(0.2) { 0.0 } else { signed(rng, 0.3, 1.5) };
        let mu2 = if rng.gen_bool(0.5) { 0.0 } else { signed(rng, 0.2, 1.5) };
        let eta2 = if rng.gen_bool(0.3) { 0.0 } else { signed(rng, 0.3, 2.0) };
        let need_c = lambda * eta2 == 0.0;
        let c = if need_c || rng.gen_bool(0.5) { signed(rng, 0.3, 1.5) } else { 0.0 };
        FamilySpec::new("T24")
            .set("lambda", lambda)
            .set("mu2", mu2)
            .set("eta2", eta2)
            .set("C", c)
            .with_sign(coin(rng))
            .with_f(random_profile(rng))
            .with_phi12(random_phi12(rng))
    }
}
