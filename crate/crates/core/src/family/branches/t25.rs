use std::sync::Arc;

use rand::Rng;

use super::{coin, random_phi, signed, with_two_slopes, Exprs};
use crate::family::spec::{satisfies, Check};
use crate::family::{
    Branch, BranchRule, Coefficients, Constants, Evolution, FamilyError, FamilySpec, Forms, ImmersionCase, Violation,
};
use crate::jet::{EvalError, Expression, Scalar};

/// f11 = m(z0 − z2) − n with an exponential in z0.
#[derive(Debug)]
pub(crate) struct T25i {
    k: Constants,
    theta: f64,
    b: f64,
    m: f64,
    n: f64,
    m1: f64,
    sigma: f64,
    r: f64,
}

impl<T: Scalar> Coefficients<T> for T25i {
    fn forms(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError> {
        let Constants { lambda: l, mu2, eta2, eta3, .. } = self.k;
        let (th, m, n, s, r) = (self.theta, self.m, self.n, self.sigma, self.r);
        let (z0, z1) = (&z[0], &z[1]);
        let be = (z0.clone() * th).exp() * self.b;
        let z0sq = z0.sq();
        let k = -(be.clone() * th) + z0.clone() * (2.0 * l) + 2.0 * l / th;
        let f11 = (z0.clone() - z[2].clone()) * m - n;
        let f12 = -(z0sq.clone() * f11.clone() * l)
            - (-(be * (th * th)) + 2.0 * l) * z1.sq() * (m / th)
            - k.clone() * ((z0.clone() * m - n) * (1.0 / th) + z1.clone() * (s * (mu2 - m * eta2 / th) / r));
        let f22 = f12.clone() * mu2 - z0sq.clone() * (l * eta2) + k.clone() * (z1.clone() * (s * r) - eta2 / th);
        let f32 = f12.clone() * (s * r) - z0sq * (l * eta3) + k * (z1.clone() * mu2 - eta3 / th);
        Ok([
            [f11.clone(), f12],
            [f11.clone() * mu2 + eta2, f22],
            [f11 * (s * r) + eta3, f32],
        ])
    }

    fn rhs(&self, z: &[T; 3]) -> Result<T, EvalError> {
        let l = self.k.lambda;
        let (th, m1) = (self.theta, self.m1);
        let (z0, z1, z2) = (&z[0], &z[1], &z[2]);
        let z01 = z0.clone() * z1.clone();
        let z12 = z1.clone() * z2.clone();
        let poly = z0.sq() * z1.clone() * (-5.0)
            + z01.clone() * z2.clone() * 4.0
            + z01.clone() * (2.0 * m1 - 4.0 / th)
            + z1.clone() * (2.0 * m1 / th)
            - z12.clone() * (2.0 / th);
        let ex = (z0.clone() * th).exp() * (th * self.b);
        let cubic = z1.clone() * z1.sq() * th + z01 * 2.0 + z12 - z1.clone() * m1;
        Ok(poly * l + cubic * ex)
    }
}

impl Branch for T25i {
    fn name(&self) -> &str {
        "T25i"
    }

    fn constants(&self) -> Option<Constants> {
        Some(self.k)
    }

    fn evolution(&self) -> Evolution {
        Evolution::ThirdOrder { lambda: self.k.lambda }
    }

    fn immersion(&self) -> ImmersionCase {
        ImmersionCase::None { citation: "Prop 4.4" }
    }
}

pub(crate) struct T25iRule;

fn read_i(spec: &FamilySpec) -> (T25i, Vec<Violation>) {
    let mut c = Check::new(spec, &["lambda", "theta", "B", "m", "n", "mu2", "eta2", "m1"]);
    let lambda = c.require("lambda");
    let theta = c.require("theta");
    let b = c.require("B");
    let m = c.require("m");
    let n = c.require("n");
    let mu2 = c.require("mu2");
    let eta2 = c.require("eta2");
    c.that(theta != 0.0, "θ ≠ 0", || format!("θ = {theta}"));
    c.that(lambda * lambda + b * b != 0.0, "λ² + B² ≠ 0", || format!("λ = {lambda}, B = {b}"));
    c.that(m != 0.0, "m ≠ 0", || format!("m = {m}"));
    let sigma = c.sign();
    let r = f64::sqrt(1.0 + mu2 * mu2);
    let eta3 = sigma * (theta + m * mu2 * eta2) / (m * r);
    let m1 = 2.0 * n / m + (eta2 * eta2 - eta3 * eta3 - 1.0) / theta;
    if let Some(given) = spec.params.m1 {
        if m != 0.0 && theta != 0.0 {
            c.that(satisfies(given - m1, m1), "m1 = 2n/m + (η2² − η3² − 1)/θ", || {
                format!("m1 = {given}, expected {m1}")
            });
        }
    }
    let k = Constants { lambda, mu2, eta2, mu3: sigma * r, eta3 };
    (T25i { k, theta, b, m, n, m1, sigma, r }, c.out)
}

impl BranchRule for T25iRule {
    fn name(&self) -> &'static str {
        "T25i"
    }

    fn expressions(&self) -> &'static [&'static str] {
        &[]
    }

    fn validate(&self, spec: &FamilySpec) -> Vec<Violation> {
        read_i(spec).1
    }

    fn build(&self, spec: &FamilySpec, _: &Exprs) -> Result<Arc<dyn Branch>, FamilyError> {
        let (b, v) = read_i(spec);
        if !v.is_empty() {
            return Err(FamilyError::Constraint(v));
        }
        Ok(Arc::new(b))
    }

    fn random_spec(&self, rng: &mut dyn rand::RngCore) -> FamilySpec {
        let lambda = if rng.gen_bool(0.2) { 0.0 } else { signed(rng, 0.3, 1.5) };
        let b = if lambda != 0.0 && rng.gen_bool(0.2) { 0.0 } else { signed(rng, 0.2, 1.0) };
        FamilySpec::new("T25i")
            .set("lambda", lambda)
            .set("theta", signed(rng, 0.3, 1.2))
            .set("B", b)
            .set("m", signed(rng, 0.5, 2.0))
            .set("n", rng.gen_range(-1.0..=1.0))
            .set("mu2", rng.gen_range(-1.0..=1.0))
            .set("eta2", rng.gen_range(-1.5..=1.5))
            .with_sign(coin(rng))
    }
}

/// f11 = m(z0 − z2) − n with a free φ(z0) times e^{στz1}.
#[derive(Debug)]
pub(crate) struct T25ii {
    phi: Expression,
    k: Constants,
    tau: f64,
    m: f64,
    n: f64,
    m2: f64,
    sigma: f64,
}

impl<T: Scalar> Coefficients<T> for T25ii {
    fn forms(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError> {
        let Constants { lambda: l, mu2, eta2, .. } = self.k;
        let (tau, m, n, s) = (self.tau, self.m, self.n, self.sigma);
        let d = n / m - self.m2;
        let q = 1.0 + mu2 * mu2;
        let (z0, z1) = (&z[0], &z[1]);
        let (p, dp, _) = with_two_slopes(&self.phi, z0)?;
        let e = (z1.clone() * (s * tau)).exp();
        let pe = p.clone() * e.clone();
        let z0sq = z0.sq();
        let f11 = (z0.clone() - z[2].clone()) * m - n;
        let f12 = -(z0sq.clone() * f11.clone() * l)
            + ((z0.clone() * m - n) * p * (s * tau) + dp * z1.clone() * m) * e
            - z0.clone() * z1.clone() * (s * 2.0 * l * m / tau);
        let f21 = f11.clone() * mu2 + eta2;
        let f22 = f12.clone() * mu2 - z0sq.clone() * (l * eta2) + pe.clone() * (s * tau * eta2);
        let f31 = (f11.clone() * (q / eta2) + mu2) * (s * tau * d) - f21.clone() * (s * tau / m);
        let f32 = (f12.clone() * (q / eta2) - (z0sq * l - pe * (s * tau)) * mu2) * (s * tau * d)
            - f22.clone() * (s * tau / m);
        Ok([[f11, f12], [f21, f22], [f31, f32]])
    }

    fn rhs(&self, z: &[T; 3]) -> Result<T, EvalError> {
        let l = self.k.lambda;
        let (tau, m2, s) = (self.tau, self.m2, self.sigma);
        let (z0, z1, z2) = (&z[0], &z[1], &z[2]);
        let (p, dp, ddp) = with_two_slopes(&self.phi, z0)?;
        let e = (z1.clone() * (s * tau)).exp();
        let z01 = z0.clone() * z1.clone();
        let poly = z0.sq() * z1.clone() * (-3.0) + z01.clone() * z2.clone() * 2.0 + z01.clone() * (2.0 * m2)
            - (z1.sq() + z0.clone() * z2.clone()) * (s * 2.0 / tau);
        let t1 = ddp * z1.sq();
        let t2 = (z01 * tau + z2.clone() * s + z1.clone() * z2.clone() * tau - z1.clone() * (m2 * tau)) * dp * s;
        let t3 = (z1.clone() * s + z0.clone() * z2.clone() * tau - z2.clone() * (m2 * tau)) * p * tau;
        Ok(poly * l + (t1 + t2 + t3) * e)
    }
}

impl Branch for T25ii {
    fn name(&self) -> &str {
        "T25ii"
    }

    fn constants(&self) -> Option<Constants> {
        Some(self.k)
    }

    fn evolution(&self) -> Evolution {
        Evolution::ThirdOrder { lambda: self.k.lambda }
    }

    fn immersion(&self) -> ImmersionCase {
        ImmersionCase::None { citation: "Prop 4.5" }
    }
}

/// d = n/m − m2 from the quadratic constraint; `None` when complex.
pub(crate) fn solve_d(mu2: f64, eta2: f64, tau: f64, m: f64, root: f64) -> Option<f64> {
    let q = 1.0 + mu2 * mu2;
    let disc = q * m * m / (tau * tau) - 1.0;
    (disc >= 0.0).then(|| (eta2 * mu2 * m + root * (eta2 * m).abs() * f64::sqrt(disc)) / (q * m * m))
}

pub(crate) struct T25iiRule;

fn read_ii(spec: &FamilySpec) -> (Constants, [f64; 5], Vec<Violation>) {
    let mut c = Check::new(spec, &["lambda", "tau", "m", "n", "mu2", "eta2", "m2", "root"]);
    let lambda = c.require("lambda");
    let tau = c.require("tau");
    let m = c.require("m");
    let n = c.require("n");
    let mu2 = c.require("mu2");
    let eta2 = c.require("eta2");
    c.that(tau > 0.0, "τ > 0", || format!("τ = {tau}"));
    c.that(m * eta2 != 0.0, "mη2 ≠ 0", || format!("m = {m}, η2 = {eta2}"));
    let root = c.root();
    let q = 1.0 + mu2 * mu2;
    let ok = tau > 0.0 && m * eta2 != 0.0;
    let m2 = match spec.params.m2 {
        Some(m2) => {
            if ok {
                let d = n / m - m2;
                let res = tau * tau * (q * m * m * d * d - 2.0 * eta2 * mu2 * m * d + eta2 * eta2) - (eta2 * m).powi(2);
                c.that(satisfies(res, (eta2 * m).powi(2)), "τ²[(1+μ2²)m²d² − 2η2μ2md + η2²] = η2²m², d = n/m − m2", || {
                    format!("m2 = {m2}: residual {res:e}")
                });
            }
            m2
        }
        None => match root {
            None => {
                c.fail("m2 or root present", "T25ii needs `m2` or a `root` selector to solve for it".into());
                f64::NAN
            }
            Some(_) if !ok => f64::NAN,
            Some(r) => match solve_d(mu2, eta2, tau, m, r) {
                Some(d) => n / m - d,
                None => {
                    c.fail("(1+μ2²)m² ≥ τ²", format!("μ2 = {mu2}, m = {m}, τ = {tau}: no real m2"));
                    f64::NAN
                }
            },
        },
    };
    let sigma = c.sign();
    let d = n / m - m2;
    let mu3 = sigma * tau * d * q / eta2 - sigma * tau / m * mu2;
    let eta3 = sigma * tau * d * mu2 - sigma * tau * eta2 / m;
    (Constants { lambda, mu2, eta2, mu3, eta3 }, [tau, m, n, m2, sigma], c.out)
}

impl BranchRule for T25iiRule {
    fn name(&self) -> &'static str {
        "T25ii"
    }

    fn expressions(&self) -> &'static [&'static str] {
        &["phi"]
    }

    fn validate(&self, spec: &FamilySpec) -> Vec<Violation> {
        read_ii(spec).2
    }

    fn build(&self, spec: &FamilySpec, ex: &Exprs) -> Result<Arc<dyn Branch>, FamilyError> {
        let (k, [tau, m, n, m2, sigma], v) = read_ii(spec);
        if !v.is_empty() {
            return Err(FamilyError::Constraint(v));
        }
        Ok(Arc::new(T25ii { phi: ex.phi(), k, tau, m, n, m2, sigma }))
    }

    fn random_spec(&self, rng: &mut dyn rand::RngCore) -> FamilySpec {
        let tau = rng.gen_range(0.3..=1.2);
        FamilySpec::new("T25ii")
            .set("lambda", rng.gen_range(-1.5..=1.5))
            .set("tau", tau)
            .set("m", signed(rng, 1.2 * tau, 2.0 * tau.max(0.75)))
            .set("n", rng.gen_range(-1.0..=1.0))
            .set("mu2", rng.gen_range(-1.0..=1.0))
            .set("eta2", signed(rng, 0.3, 1.5))
            .set("root", coin(rng) as f64)
            .with_sign(coin(rng))
            .with_phi(random_phi(rng))
    }
}
