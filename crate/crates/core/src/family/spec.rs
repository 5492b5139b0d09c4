use std::fmt;

use serde::{Deserialize, Serialize};

/// A family as written in a spec file. Expressions are kept as source text
/// and re-parsed on build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub branch: String,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi12: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[serde(default = "plus_one")]
    pub sign: i32,
}

fn plus_one() -> i32 {
    1
}

impl FamilySpec {
    pub fn new(branch: &str) -> Self {
        FamilySpec {
            branch: branch.to_string(),
            params: Params::default(),
            f: None,
            phi12: None,
            phi: None,
            sign: 1,
        }
    }

    pub fn with_f(mut self, f: &str) -> Self {
        self.f = Some(f.to_string());
        self
    }

    pub fn with_phi12(mut self, p: &str) -> Self {
        self.phi12 = Some(p.to_string());
        self
    }

    pub fn with_phi(mut self, p: &str) -> Self {
        self.phi = Some(p.to_string());
        self
    }

    pub fn with_sign(mut self, sign: i32) -> Self {
        self.sign = sign;
        self
    }

    /// Set a numeric parameter by its spec-file key.
    pub fn set(mut self, key: &str, value: f64) -> Self {
        self.params.set(key, value).unwrap_or_else(|| panic!("unknown parameter key `{key}`"));
        self
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

/// Numeric constants of a family. Which keys apply depends on the branch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta2: Option<f64>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Root selector (+1/-1) for constants solved from a quadratic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<i32>,
}

impl Params {
    fn slot(&mut self, key: &str) -> Option<&mut Option<f64>> {
        Some(match key {
            "lambda" => &mut self.lambda,
            "mu2" => &mut self.mu2,
            "eta2" => &mut self.eta2,
            "C" => &mut self.c,
            "mu3" => &mut self.mu3,
            "eta3" => &mut self.eta3,
            "theta" => &mut self.theta,
            "B" => &mut self.b,
            "m1" => &mut self.m1,
            "tau" => &mut self.tau,
            "m2" => &mut self.m2,
            "m" => &mut self.m,
            "n" => &mut self.n,
            "eta" => &mut self.eta,
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: f64) -> Option<()> {
        if key == "root" {
            self.root = Some(value as i32);
            return Some(());
        }
        *self.slot(key)? = Some(value);
        Some(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        if key == "root" {
            return self.root.map(f64::from);
        }
        *self.clone().slot(key)?
    }

    /// Keys that carry a value.
    pub fn present(&self) -> Vec<&'static str> {
        const KEYS: [&str; 15] = [
            "lambda", "mu2", "eta2", "C", "mu3", "eta3", "theta", "B", "m1", "tau", "m2", "m", "n", "eta", "root",
        ];
        KEYS.into_iter().filter(|k| self.get(k).is_some()).collect()
    }
}

/// One failed branch constraint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: String,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated ({})", self.constraint, self.detail)
    }
}

/// Collects violations while reading a spec's parameters.
pub(crate) struct Check<'a> {
    pub spec: &'a FamilySpec,
    pub out: Vec<Violation>,
}

impl<'a> Check<'a> {
    pub fn new(spec: &'a FamilySpec, allowed: &[&str]) -> Self {
        let mut c = Check { spec, out: Vec::new() };
        for key in spec.params.present() {
            if !allowed.contains(&key) {
                c.fail("parameters belong to the branch", format!("{} does not take `{key}`", spec.branch));
            }
        }
        if spec.sign != 1 && spec.sign != -1 {
            c.fail("sign ∈ {+1, −1}", format!("sign = {}", spec.sign));
        }
        c
    }

    pub fn fail(&mut self, constraint: &str, detail: String) {
        self.out.push(Violation { constraint: constraint.to_string(), detail });
    }

    pub fn that(&mut self, ok: bool, constraint: &str, detail: impl FnOnce() -> String) {
        if !ok {
            self.fail(constraint, detail());
        }
    }

    /// A required finite parameter; NaN (and a violation) when absent.
    pub fn require(&mut self, key: &str) -> f64 {
        match self.spec.params.get(key) {
            Some(v) if v.is_finite() => v,
            Some(v) => {
                self.fail(&format!("{key} finite"), format!("{key} = {v}"));
                f64::NAN
            }
            None => {
                self.fail("required parameter present", format!("{} requires `{key}`", self.spec.branch));
                f64::NAN
            }
        }
    }

    pub fn optional(&mut self, key: &str, default: f64) -> f64 {
        match self.spec.params.get(key) {
            Some(v) if !v.is_finite() => {
                self.fail(&format!("{key} finite"), format!("{key} = {v}"));
                f64::NAN
            }
            Some(v) => v,
            None => default,
        }
    }

    pub fn root(&mut self) -> Option<f64> {
        match self.spec.params.root {
            None => None,
            Some(r @ (1 | -1)) => Some(r as f64),
            Some(r) => {
                self.fail("root ∈ {+1, −1}", format!("root = {r}"));
                None
            }
        }
    }

    pub fn sign(&self) -> f64 {
        if self.spec.sign < 0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Relative closeness used when a user supplies a constant that is also
/// determined by a constraint.
pub(crate) fn satisfies(residual: f64, scale: f64) -> bool {
    residual.abs() <= 1e-9 * scale.abs().max(1.0)
}
