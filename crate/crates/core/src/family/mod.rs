//! The classified 1-form families: coefficient functions f_ij, the equation
//! right-hand side G, parameter validation and shipped presets.
//!
//! Each branch is a strategy object behind [`Branch`]; branches are created
//! from a [`FamilySpec`] by the [`BranchRule`] registered under the spec's
//! branch name.

mod branches;
mod registry;
mod spec;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::jet::{
    coord_series, prolong_onshell, Coord, Dual, EvalError, JetError, JetFunction, JetPoint, OnShell, ParseError,
    Scalar, Taylor,
};

pub use branches::{random_phi, random_phi12, random_profile, Exprs};
pub use registry::{presets, BranchRegistry, BranchRule, Preset};
pub use spec::{FamilySpec, Params, Violation};

/// Coefficients of ω_i = f_i1 dx + f_i2 dt, indexed `[i-1][j-1]`.
pub type Forms<T> = [[T; 2]; 3];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("unknown branch `{0}`")]
    UnknownBranch(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("constraint violation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Constraint(Vec<Violation>),
    #[error("{branch} requires expression `{slot}`")]
    MissingExpression { branch: String, slot: &'static str },
    #[error("{branch} takes no expression `{slot}`")]
    UnexpectedExpression { branch: String, slot: &'static str },
    #[error("expression `{slot}`: {source}")]
    Parse { slot: &'static str, source: ParseError },
    #[error("preset `{name}` does not reproduce its reference G: {detail}")]
    PresetMismatch { name: String, detail: String },
    #[error("{0} is not of the third-order class (no flux F)")]
    NoFlux(String),
    #[error(transparent)]
    Jet(#[from] JetError),
}

impl From<EvalError> for FamilyError {
    fn from(e: EvalError) -> Self {
        FamilyError::Jet(JetError::Eval(e))
    }
}

/// Resolved structure constants: f21 − μ2 f11 = η2 and f31 − μ3 f11 = η3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    pub lambda: f64,
    pub mu2: f64,
    pub eta2: f64,
    pub mu3: f64,
    pub eta3: f64,
}

/// How mixed t-derivatives follow from the equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evolution {
    /// u_t − u_xxt = λu²u_xxx + G.
    ThirdOrder { lambda: f64 },
    /// u_xt = sin u.
    SineGordon,
}

/// s = dx·x + dt·t.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReducedCoord {
    pub dx: f64,
    pub dt: f64,
}

impl ReducedCoord {
    pub fn at(&self, x: f64, t: f64) -> f64 {
        self.dx * x + self.dt * t
    }
}

/// Which strip constant a closed-form branch reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StripConstant {
    CStrip,
    Sigma,
}

/// What the immersion solver should produce for a branch.
#[derive(Debug, Clone, PartialEq)]
pub enum ImmersionCase {
    /// a = ε√L, b = b_sign·β·e^{2σκs}, c = a − σa'/κ on the strip L > 0.
    Strip {
        label: &'static str,
        coord: ReducedCoord,
        kappa: f64,
        sigma: f64,
        b_sign: f64,
        constant: StripConstant,
    },
    /// b from the first-order ODE, a and c algebraic in (s, b).
    Ode {
        label: &'static str,
        coord: ReducedCoord,
        kappa: f64,
        sigma: f64,
        mu2: f64,
    },
    /// a = 2ε/tan u, b = −ε, c = 0 (depends on the solution).
    SolutionDependent { eta: f64 },
    /// Proven non-existence.
    None { citation: &'static str },
}

/// Coefficient functions over one scalar type.
pub trait Coefficients<T> {
    /// f_ij at (z0, z1, z2).
    fn forms(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError>;
    /// G at (z0, z1, z2); for the sine-Gordon branch, sin z0.
    fn rhs(&self, z: &[T; 3]) -> Result<T, EvalError>;
}

/// A catalog branch with its constants resolved.
pub trait Branch: Send + Sync + fmt::Debug + Coefficients<f64> + Coefficients<Dual<f64>> + Coefficients<Taylor> {
    fn name(&self) -> &str;
    /// `None` for families outside the third-order class.
    fn constants(&self) -> Option<Constants>;
    fn evolution(&self) -> Evolution;
    fn immersion(&self) -> ImmersionCase;
}

/// Scalars a [`Family`] can be evaluated over.
pub trait FamilyScalar: Scalar {
    fn forms(b: &dyn Branch, z: &[Self; 3]) -> Result<Forms<Self>, EvalError>;
    fn rhs(b: &dyn Branch, z: &[Self; 3]) -> Result<Self, EvalError>;
}

macro_rules! family_scalar {
    ($t:ty) => {
        impl FamilyScalar for $t {
            fn forms(b: &dyn Branch, z: &[Self; 3]) -> Result<Forms<Self>, EvalError> {
                Coefficients::<$t>::forms(b, z)
            }
            fn rhs(b: &dyn Branch, z: &[Self; 3]) -> Result<Self, EvalError> {
                Coefficients::<$t>::rhs(b, z)
            }
        }
    };
}

family_scalar!(f64);
family_scalar!(Dual<f64>);
family_scalar!(Taylor);

/// A built family: the spec it came from and its branch strategy.
#[derive(Clone)]
pub struct Family {
    label: String,
    spec: FamilySpec,
    branch: Arc<dyn Branch>,
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Family").field("label", &self.label).field("branch", &self.branch).finish()
    }
}

impl Family {
    /// Build with the built-in registry.
    pub fn build(spec: &FamilySpec) -> Result<Family, FamilyError> {
        BranchRegistry::builtin().build(spec)
    }

    pub fn preset(name: &str) -> Result<Family, FamilyError> {
        BranchRegistry::builtin().preset(name)
    }

    /// Wrap an arbitrary branch implementation (custom or deliberately
    /// corrupted families in tests).
    pub fn from_branch(label: &str, spec: FamilySpec, branch: Arc<dyn Branch>) -> Family {
        Family { label: label.to_string(), spec, branch }
    }

    pub fn with_label(mut self, label: &str) -> Family {
        self.label = label.to_string();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn spec(&self) -> &FamilySpec {
        &self.spec
    }

    pub fn branch(&self) -> &dyn Branch {
        &*self.branch
    }

    pub fn branch_name(&self) -> &str {
        self.branch.name()
    }

    pub fn constants(&self) -> Option<Constants> {
        self.branch.constants()
    }

    pub fn evolution(&self) -> Evolution {
        self.branch.evolution()
    }

    pub fn immersion_case(&self) -> ImmersionCase {
        self.branch.immersion()
    }

    pub fn forms<T: FamilyScalar>(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError> {
        T::forms(&*self.branch, z)
    }

    pub fn rhs<T: FamilyScalar>(&self, z: &[T; 3]) -> Result<T, EvalError> {
        T::rhs(&*self.branch, z)
    }

    /// f_ij at a jet (needs z0..z2).
    pub fn forms_at(&self, p: &JetPoint) -> Result<Forms<f64>, JetError> {
        Ok(self.forms(&[p.z(0)?, p.z(1)?, p.z(2)?])?)
    }

    /// G at a jet (needs z0..z2).
    pub fn evaluate_g(&self, p: &JetPoint) -> Result<f64, FamilyError> {
        self.require_flux()?;
        Ok(self.rhs(&[p.z(0)?, p.z(1)?, p.z(2)?])?)
    }

    /// F = λz0²z3 + G (needs z0..z3).
    pub fn evaluate_flux(&self, p: &JetPoint) -> Result<f64, FamilyError> {
        let lambda = self.require_flux()?;
        Ok(lambda * p.z(0)?.powi(2) * p.z(3)? + self.evaluate_g(p)?)
    }

    fn require_flux(&self) -> Result<f64, FamilyError> {
        match self.evolution() {
            Evolution::ThirdOrder { lambda } => Ok(lambda),
            Evolution::SineGordon => Err(FamilyError::NoFlux(self.label.clone())),
        }
    }

    /// Δij = f_i1 f_j2 − f_j1 f_i2 (1-based indices).
    pub fn delta(&self, p: &JetPoint, i: usize, j: usize) -> Result<f64, JetError> {
        Ok(delta_of(&self.forms_at(p)?, i, j))
    }

    /// f_ij as a function on jet space.
    pub fn form(&self, i: usize, j: usize) -> FormFn<'_> {
        assert!((1..=3).contains(&i) && (1..=2).contains(&j), "form index out of range");
        FormFn { fam: self, i: i - 1, j: j - 1 }
    }

    /// F as a function on jet space.
    pub fn flux(&self) -> Result<FluxFn<'_>, FamilyError> {
        let lambda = self.require_flux()?;
        Ok(FluxFn { fam: self, lambda })
    }

    /// φ_i2 = f_i2 + λz0²f_i1.
    pub fn phi_i2<T: FamilyScalar>(&self, z: &[T; 3]) -> Result<[T; 3], EvalError> {
        let lambda = self.constants().map(|c| c.lambda).unwrap_or(0.0);
        let f = self.forms(z)?;
        let w = z[0].sq() * lambda;
        Ok([0, 1, 2].map(|i| f[i][1].clone() + w.clone() * f[i][0].clone()))
    }
}

pub fn delta_of(f: &Forms<f64>, i: usize, j: usize) -> f64 {
    let (a, b) = (&f[i - 1], &f[j - 1]);
    a[0] * b[1] - b[0] * a[1]
}

impl OnShell for Family {
    fn prolong(&self, p: &JetPoint, upto: usize) -> Result<JetPoint, JetError> {
        match self.evolution() {
            Evolution::ThirdOrder { lambda } => prolong_onshell(p, &FluxFn { fam: self, lambda }, upto),
            Evolution::SineGordon => {
                // z_{0,t} = w1, z_{k,t} = D_x^{k-1} sin z0
                let mut zt = vec![p.w(1)?];
                if upto >= 1 {
                    let s = coord_series(p, Coord::Z(0), upto - 1)?.sin();
                    zt.extend((0..upto).map(|m| s.derivative(m)));
                }
                let mut out = p.clone();
                out.zt = zt;
                Ok(out)
            }
        }
    }
}

fn z_duals(p: &JetPoint) -> Result<[Dual<f64>; 3], JetError> {
    let (a, b, c) = (p.z(0)?, p.z(1)?, p.z(2)?);
    Ok([Dual::variable(a, 0, 3), Dual::variable(b, 1, 3), Dual::variable(c, 2, 3)])
}

fn z_series(p: &JetPoint, n: usize, degree: usize) -> Result<Vec<Taylor>, JetError> {
    (0..n).map(|i| coord_series(p, Coord::Z(i), degree)).collect()
}

/// f_ij on jet space; depends on z0, z1, z2.
pub struct FormFn<'a> {
    fam: &'a Family,
    i: usize,
    j: usize,
}

impl JetFunction for FormFn<'_> {
    fn partials(&self, p: &JetPoint) -> Result<(f64, Vec<(Coord, f64)>), JetError> {
        let z = z_duals(p)?;
        let r = self.fam.forms(&z)?[self.i][self.j].clone();
        Ok((r.v, (0..3).map(|k| (Coord::Z(k), r.partial(k))).collect()))
    }

    fn x_series(&self, p: &JetPoint, degree: usize) -> Result<Taylor, JetError> {
        let z = z_series(p, 3, degree)?;
        let mut r = self.fam.forms(&[z[0].clone(), z[1].clone(), z[2].clone()])?[self.i][self.j].clone();
        r.c.resize(degree + 1, 0.0);
        Ok(r)
    }
}

/// F = λz0²z3 + G on jet space; depends on z0..z3.
pub struct FluxFn<'a> {
    fam: &'a Family,
    lambda: f64,
}

impl JetFunction for FluxFn<'_> {
    fn partials(&self, p: &JetPoint) -> Result<(f64, Vec<(Coord, f64)>), JetError> {
        let z = z_duals(p)?;
        let z3 = p.z(3)?;
        let g = self.fam.rhs(&z)?;
        let z0 = &z[0];
        let lead = z0.sq() * (self.lambda * z3);
        let f = lead + g;
        let mut parts: Vec<(Coord, f64)> = (0..3).map(|k| (Coord::Z(k), f.partial(k))).collect();
        parts.push((Coord::Z(3), self.lambda * z0.v * z0.v));
        Ok((f.v, parts))
    }

    fn x_series(&self, p: &JetPoint, degree: usize) -> Result<Taylor, JetError> {
        let z = z_series(p, 4, degree)?;
        let g = self.fam.rhs(&[z[0].clone(), z[1].clone(), z[2].clone()])?;
        let mut r = z[0].sq() * z[3].clone() * self.lambda + g;
        r.c.resize(degree + 1, 0.0);
        Ok(r)
    }
}

/// A random valid spec for a branch, for sampling-based tests.
pub fn random_spec(branch: &str, rng: &mut dyn rand::RngCore) -> Result<FamilySpec, FamilyError> {
    Ok(BranchRegistry::builtin().rule(branch)?.random_spec(rng))
}
