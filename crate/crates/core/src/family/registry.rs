use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::branches::{Exprs, SineGordonRule, T22Rule, T23Rule, T24Rule, T25iRule, T25iiRule};
use super::{Branch, Family, FamilyError, FamilySpec, Violation};
use crate::jet::Expression;

/// Turns a spec into a branch strategy.
pub trait BranchRule: Send + Sync {
    fn name(&self) -> &'static str;
    /// Expression slots the branch requires (any of "f", "phi12", "phi").
    fn expressions(&self) -> &'static [&'static str];
    fn validate(&self, spec: &FamilySpec) -> Vec<Violation>;
    /// Called only with a spec that validated and carries exactly the
    /// required expressions, already parsed.
    fn build(&self, spec: &FamilySpec, ex: &Exprs) -> Result<Arc<dyn Branch>, FamilyError>;
    fn random_spec(&self, rng: &mut dyn rand::RngCore) -> FamilySpec;
}

/// A shipped family. `reference_g`, when set, is an independent closed form
/// of G in (z0, z1, z2) the built family must reproduce.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub spec: FamilySpec,
    pub reference_g: Option<&'static str>,
}

pub fn presets() -> Vec<Preset> {
    let p = |name, summary, spec, reference_g| Preset { name, summary, spec, reference_g };
    vec![
        p(
            "novikov",
            "u_t − u_xxt = u²u_xxx + u_x³ − 3uu_x² − 2u²u_x + 4uu_xu_xx − u²u_xx (T24, λ=1, η2=1, C=0)",
            FamilySpec::new("T24")
                .set("lambda", 1.0)
                .set("mu2", 0.0)
                .set("eta2", 1.0)
                .set("C", 0.0)
                .with_f("s")
                .with_phi12("z0*(z1 - z0)^2"),
            Some("z1^3 - 3*z0*z1^2 - 2*z0^2*z1 + 4*z0*z1*z2 - z0^2*z2"),
        ),
        p("sine-gordon", "u_xt = sin u, η = 1", FamilySpec::new("SINE_GORDON").set("eta", 1.0), None),
        p(
            "t22-demo",
            "u_t − u_xxt = u_xx + u_x (T22, μ2=0, η2=1)",
            FamilySpec::new("T22").set("mu2", 0.0).set("eta2", 1.0).with_f("s").with_phi12("z1"),
            Some("z2 + z1"),
        ),
        p(
            "t22-ode-demo",
            "T22 with μ2=0.5, η2=1 (immersion through the b-ODE)",
            FamilySpec::new("T22").set("mu2", 0.5).set("eta2", 1.0).with_f("s").with_phi12("z1"),
            None,
        ),
        p(
            "t23-demo",
            "T23 with λ=1, μ2=μ3=0.5, η2=1 (η3=1, γ=−1)",
            FamilySpec::new("T23")
                .set("lambda", 1.0)
                .set("mu2", 0.5)
                .set("eta2", 1.0)
                .set("mu3", 0.5)
                .set("root", 1.0)
                .with_f("s"),
            None,
        ),
        p(
            "t24-strip-demo",
            "T24 with μ2=η2=0, C=1, λ=1 (strip in t)",
            FamilySpec::new("T24")
                .set("lambda", 1.0)
                .set("mu2", 0.0)
                .set("eta2", 0.0)
                .set("C", 1.0)
                .with_f("s")
                .with_phi12("z1"),
            None,
        ),
        p(
            "t24-ode-demo",
            "T24 with μ2=0.5, η2=1, C=0.5, λ=1 (immersion through the b-ODE)",
            FamilySpec::new("T24")
                .set("lambda", 1.0)
                .set("mu2", 0.5)
                .set("eta2", 1.0)
                .set("C", 0.5)
                .with_f("s")
                .with_phi12("z1 + z0^2"),
            None,
        ),
        p(
            "t25i-demo",
            "T25i with λ=1, θ=1, B=0.5, m=1, n=0.5, μ2=0, η2=1",
            FamilySpec::new("T25i")
                .set("lambda", 1.0)
                .set("theta", 1.0)
                .set("B", 0.5)
                .set("m", 1.0)
                .set("n", 0.5)
                .set("mu2", 0.0)
                .set("eta2", 1.0),
            None,
        ),
        p(
            "t25ii-demo",
            "T25ii with λ=1, τ=1, m=2, n=1, μ2=0, η2=1, φ=1+z0²",
            FamilySpec::new("T25ii")
                .set("lambda", 1.0)
                .set("tau", 1.0)
                .set("m", 2.0)
                .set("n", 1.0)
                .set("mu2", 0.0)
                .set("eta2", 1.0)
                .set("root", 1.0)
                .with_phi("1 + z0^2"),
            None,
        ),
    ]
}

/// Branch rules keyed by name.
pub struct BranchRegistry {
    rules: BTreeMap<String, Arc<dyn BranchRule>>,
}

const SLOTS: [(&str, &[&str]); 3] = [("f", &["s"]), ("phi12", &["z0", "z1"]), ("phi", &["z0"])];

impl BranchRegistry {
    pub fn empty() -> Self {
        BranchRegistry { rules: BTreeMap::new() }
    }

    /// The six catalog branches.
    pub fn builtin() -> &'static BranchRegistry {
        static REG: OnceLock<BranchRegistry> = OnceLock::new();
        REG.get_or_init(|| {
            let mut r = BranchRegistry::empty();
            r.register(Arc::new(T22Rule));
            r.register(Arc::new(T23Rule));
            r.register(Arc::new(T24Rule));
            r.register(Arc::new(T25iRule));
            r.register(Arc::new(T25iiRule));
            r.register(Arc::new(SineGordonRule));
            r
        })
    }

    /// Register (or replace) a rule under its name.
    pub fn register(&mut self, rule: Arc<dyn BranchRule>) {
        self.rules.insert(rule.name().to_string(), rule);
    }

    pub fn names(&self) -> Vec<&str> {
        self.rules.keys().map(String::as_str).collect()
    }

    pub fn rule(&self, name: &str) -> Result<&dyn BranchRule, FamilyError> {
        self.rules.get(name).map(|r| &**r).ok_or_else(|| FamilyError::UnknownBranch(name.to_string()))
    }

    pub fn validate(&self, spec: &FamilySpec) -> Result<Vec<Violation>, FamilyError> {
        Ok(self.rule(&spec.branch)?.validate(spec))
    }

    pub fn build(&self, spec: &FamilySpec) -> Result<Family, FamilyError> {
        let rule = self.rule(&spec.branch)?;
        let wanted = rule.expressions();
        let mut ex = Exprs::default();
        for (slot, vars) in SLOTS {
            let text = match slot {
                "f" => &spec.f,
                "phi12" => &spec.phi12,
                _ => &spec.phi,
            };
            let parsed = match (text, wanted.contains(&slot)) {
                (None, true) => return Err(FamilyError::MissingExpression { branch: spec.branch.clone(), slot }),
                (Some(_), false) => return Err(FamilyError::UnexpectedExpression { branch: spec.branch.clone(), slot }),
                (None, false) => None,
                (Some(t), true) => Some(Expression::parse(t, vars).map_err(|source| FamilyError::Parse { slot, source })?),
            };
            match slot {
                "f" => ex.f = parsed,
                "phi12" => ex.phi12 = parsed,
                _ => ex.phi = parsed,
            }
        }
        let v = rule.validate(spec);
        if !v.is_empty() {
            return Err(FamilyError::Constraint(v));
        }
        let branch = rule.build(spec, &ex)?;
        Ok(Family::from_branch(&spec.branch, spec.clone(), branch))
    }

    /// Build a shipped preset, checking it against its reference G if it has one.
    pub fn preset(&self, name: &str) -> Result<Family, FamilyError> {
        let p = presets().into_iter().find(|p| p.name == name).ok_or_else(|| FamilyError::UnknownPreset(name.into()))?;
        let fam = self.build(&p.spec)?.with_label(p.name);
        if let Some(src) = p.reference_g {
            check_reference(&fam, src)?;
        }
        Ok(fam)
    }
}

fn check_reference(fam: &Family, src: &str) -> Result<(), FamilyError> {
    let reference = Expression::parse(src, &["z0", "z1", "z2"]).expect("preset reference parses");
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..200 {
        let z: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-2.0..=2.0));
        let g = fam.rhs(&z)?;
        let want = reference.eval(&z)?;
        if (g - want).abs() > 1e-10 * want.abs().max(1.0) {
            return Err(FamilyError::PresetMismatch {
                name: fam.label().to_string(),
                detail: format!("G = {g} but reference gives {want} at z = {z:?}"),
            });
        }
    }
    Ok(())
}
