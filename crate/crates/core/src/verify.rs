//! Sampled certification of the structure equations dω1 = ω3∧ω2,
//! dω2 = ω1∧ω3, dω3 = ω1∧ω2 and of the classification conditions on
//! f_i1 and φ_i2.
//!
//! Residual convention: R_k is the dx∧dt coefficient of the left side minus
//! that of the right side, with dx∧dt positively oriented, so
//! R1 = D_x f12 − D_t f11 − Δ32, R2 = D_x f22 − D_t f21 − Δ13 and
//! R3 = D_x f32 − D_t f31 − Δ12.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::family::{Branch, Coefficients, Constants, Evolution, Family, FamilyScalar, Forms, ImmersionCase};
use crate::jet::{total_derivative_t, Dual, EvalError, JetError, JetFunction, JetPoint, OnShell, Recorded};

pub const DEFAULT_SEED: u64 = 1729;
pub const DEFAULT_TOL: f64 = 1e-8;
/// Rejection thresholds for sampled jets.
pub const MIN_SLOPE: f64 = 1e-3;
pub const MIN_PHI12: f64 = 1e-3;
pub const NONDEGENERACY_TOL: f64 = 1e-9;
const MAX_FAILURES: usize = 20;

pub const CONVENTION: &str = "R_k = [dx^dt coefficient of d(omega_k)] - [dx^dt coefficient of the wedge]; \
R1 = Dx f12 - Dt f11 - D32, R2 = Dx f22 - Dt f21 - D13, R3 = Dx f32 - Dt f31 - D12; \
pass iff |r| <= tol * max(1, |terms|) for every residual; c42 is the minimum |value| and must exceed tol";

/// Δij = f_i1 f_j2 − f_j1 f_i2 (1-based).
pub fn delta(fam: &Family, p: &JetPoint, i: usize, j: usize) -> Result<f64, JetError> {
    fam.delta(p, i, j)
}

/// (R1, R2, R3) at `p` with on-shell time derivatives. `p` needs z0..z3,
/// w1 and v1.
pub fn structure_residuals(fam: &Family, p: &JetPoint) -> Result<[f64; 3], JetError> {
    Ok(structure_terms(fam, p)?.map(|t| t[0] - t[1] - t[2]))
}

/// (R1, R2, R3) with the mixed derivatives recorded in `p.zt` in place of
/// the on-shell ones. On jets sampled from an approximate solution this
/// measures how far the field is from solving the equation.
pub fn structure_residuals_recorded(fam: &Family, p: &JetPoint) -> Result<[f64; 3], JetError> {
    Ok(terms_with(fam, p, &Recorded)?.map(|t| t[0] - t[1] - t[2]))
}

/// The three terms (D_x f_k2, D_t f_k1, wedge coefficient) of each equation.
fn structure_terms(fam: &Family, p: &JetPoint) -> Result<[[f64; 3]; 3], JetError> {
    terms_with(fam, p, fam)
}

fn terms_with(fam: &Family, p: &JetPoint, shell: &dyn OnShell) -> Result<[[f64; 3]; 3], JetError> {
    let f = fam.forms_at(p)?;
    let d = |i: usize, j: usize| crate::family::delta_of(&f, i, j);
    let wedge = [d(3, 2), d(1, 3), d(1, 2)];
    let mut out = [[0.0; 3]; 3];
    for k in 0..3 {
        let dx = fam.form(k + 1, 2).x_series(p, 1)?.coeff(1);
        let dt = total_derivative_t(&fam.form(k + 1, 1), p, shell)?;
        out[k] = [dx, dt, wedge[k]];
    }
    Ok(out)
}

/// Δ12 and whether ω1∧ω2 ≠ 0 and Δ13² + Δ23² ≠ 0 (beyond
/// [`NONDEGENERACY_TOL`]).
pub fn nondegeneracy(fam: &Family, p: &JetPoint) -> Result<(f64, bool), JetError> {
    let f = fam.forms_at(p)?;
    let d = |i, j| crate::family::delta_of(&f, i, j);
    let (d12, d13, d23) = (d(1, 2), d(1, 3), d(2, 3));
    let tol = NONDEGENERACY_TOL;
    Ok((d12, d12.abs() > tol && d13 * d13 + d23 * d23 > tol * tol))
}

/// Residuals of the classification conditions at one point: c36, c37, c38
/// (max over i), c39, c40, c41, and the value of the c42 expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionValues {
    pub c36: f64,
    pub c37: f64,
    pub c38: f64,
    pub c39: f64,
    pub c40: f64,
    pub c41: f64,
    pub c42: f64,
    /// Magnitude bound of the terms entering c39..c41.
    pub scale: f64,
}

/// Condition values at z = (z0, z1, z2); `None` for families outside the
/// third-order class.
pub fn conditions_at(fam: &Family, z: [f64; 3]) -> Result<Option<ConditionValues>, EvalError> {
    let Some(Constants { lambda: l, mu2, eta2, mu3, eta3 }) = fam.constants() else {
        return Ok(None);
    };
    let zd = [0, 1, 2].map(|i| Dual::variable(z[i], i, 3));
    let f = fam.forms(&zd)?;
    let phi = fam.phi_i2(&zd)?;
    let g = fam.rhs(&z)?;
    let (z0, z1, z2) = (z[0], z[1], z[2]);

    let c36 = (0..3).map(|i| (f[i][0].partial(0) + f[i][0].partial(2)).abs()).fold(0.0, f64::max);
    let c37 = (0..3).map(|i| f[i][0].partial(1).abs()).fold(0.0, f64::max);
    let c38 = (0..3).map(|i| phi[i].partial(2).abs()).fold(0.0, f64::max);

    let f11 = f[0][0].v;
    let f11z0 = f[0][0].partial(0);
    let [p1, p2, p3] = [phi[0].v, phi[1].v, phi[2].v];
    let dp = |i: usize, k: usize| phi[i].partial(k);
    let m23 = mu2 * p3 - mu3 * p2;
    let n23 = eta2 * p3 - eta3 * p2;

    let c39 = -g * f11z0 + (-2.0 * l * z0 * f11 - l * z0 * z0 * f11z0 + dp(0, 0)) * z1 + dp(0, 1) * z2
        + m23 * f11
        + n23;
    let c40 = ((mu3 * p1 - p3) - mu2 * m23) * f11
        + (dp(1, 0) - mu2 * dp(0, 0)) * z1
        + (dp(1, 1) - mu2 * dp(0, 1)) * z2
        - 2.0 * l * eta2 * z0 * z1
        - mu2 * n23
        + eta3 * p1;
    let c41 = ((mu2 * p1 - p2) - mu3 * m23) * f11
        + (dp(2, 0) - mu3 * dp(0, 0)) * z1
        + (dp(2, 1) - mu3 * dp(0, 1)) * z2
        - 2.0 * l * eta3 * z0 * z1
        - mu3 * n23
        + eta2 * p1;
    let c42 = (mu2 * p1 - p2) * f11 + eta2 * p1;

    let pmax = phi
        .iter()
        .flat_map(|p| [p.v.abs(), p.partial(0).abs() * z1.abs(), p.partial(1).abs() * z2.abs()])
        .fold(g.abs(), f64::max);
    let fmax = 1f64.max(f11.abs()).max(f11z0.abs()).max(l.abs() * z0 * z0);
    let mu = 1.0 + mu2.abs() + mu3.abs();
    let scale = 1f64.max(pmax.max(eta2.abs()).max(eta3.abs()) * fmax * mu * mu);
    Ok(Some(ConditionValues { c36, c37, c38, c39: c39.abs(), c40: c40.abs(), c41: c41.abs(), c42: c42.abs(), scale }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    /// Half-width of the box jet components are drawn from.
    pub radius: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { samples: 1000, seed: DEFAULT_SEED, tol: DEFAULT_TOL, radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct Residuals {
    pub R1_max: f64,
    pub R2_max: f64,
    pub R3_max: f64,
    pub c36: Option<f64>,
    pub c37: Option<f64>,
    pub c38: Option<f64>,
    pub c39: Option<f64>,
    pub c40: Option<f64>,
    pub c41: Option<f64>,
    /// Minimum |(μ2φ12 − φ22)f11 + η2φ12| over the sample.
    pub c42: Option<f64>,
}

impl Residuals {
    pub fn structure_max(&self) -> f64 {
        self.R1_max.max(self.R2_max).max(self.R3_max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailingSample {
    pub jet: JetPoint,
    /// R1, R2, R3 followed by c36..c41 (zeros outside the third-order class).
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub family: String,
    pub branch: String,
    pub seed: u64,
    pub samples: usize,
    pub tolerance: f64,
    pub residuals: Residuals,
    pub failures: Vec<FailingSample>,
    pub verdict: Verdict,
    pub convention: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VerifyError {
    #[error("samples must be at least 1")]
    NoSamples,
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("could not draw {wanted} admissible jets (accepted {got} after {tries} tries)")]
    Sampling { wanted: usize, got: usize, tries: usize },
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A jet drawn uniformly from the box, z0..z5, w1, w2, v1, v2.
pub fn random_jet(rng: &mut impl Rng, radius: f64) -> JetPoint {
    let mut u = || rng.gen_range(-radius..=radius);
    let (x, t) = (u(), u());
    let z = (0..6).map(|_| u()).collect();
    let w = vec![u(), u()];
    let v = vec![u(), u()];
    JetPoint::new(x, t, z, w, v)
}

/// Whether a jet is admissible: all coefficients evaluate, |f'| and |φ12|
/// stay away from zero.
pub fn admissible(fam: &Family, p: &JetPoint) -> bool {
    let zd = [0, 1, 2].map(|i| Dual::variable(p.z[i], i, 3));
    let Ok(phi) = fam.phi_i2(&zd) else { return false };
    if phi[0].v.abs() < MIN_PHI12 {
        return false;
    }
    if fam.evolution() != Evolution::SineGordon {
        let Ok(f) = fam.forms(&zd) else { return false };
        if f[0][0].partial(0).abs() < MIN_SLOPE {
            return false;
        }
        if fam.rhs(&[p.z[0], p.z[1], p.z[2]]).is_err() {
            return false;
        }
    }
    true
}

struct Sample {
    jet: JetPoint,
    r: [f64; 3],
    r_scale: f64,
    cond: Option<ConditionValues>,
}

fn draw(fam: &Family, opts: &VerifyOptions, index: usize) -> Option<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(index as u64);
    for _ in 0..100 {
        let p = random_jet(&mut rng, opts.radius);
        if !admissible(fam, &p) {
            continue;
        }
        let Ok(terms) = structure_terms(fam, &p) else { continue };
        let Ok(cond) = conditions_at(fam, [p.z[0], p.z[1], p.z[2]]) else { continue };
        let r = terms.map(|t| (t[0] - t[1] - t[2]).abs());
        let r_scale = terms.iter().flatten().fold(1f64, |m, v| m.max(v.abs()));
        return Some(Sample { jet: p, r, r_scale, cond });
    }
    None
}

/// Structure residuals and classification conditions over seeded random
/// jets. Each sample index owns its own random stream, so the report does
/// not depend on the thread count.
pub fn verify(fam: &Family, opts: &VerifyOptions) -> Result<VerificationReport, VerifyError> {
    if opts.samples == 0 {
        return Err(VerifyError::NoSamples);
    }
    if !(opts.tol > 0.0) {
        return Err(VerifyError::BadTolerance(opts.tol));
    }
    let drawn: Vec<Option<Sample>> = (0..opts.samples).into_par_iter().map(|i| draw(fam, opts, i)).collect();
    let got = drawn.iter().filter(|s| s.is_some()).count();
    if got < opts.samples {
        return Err(VerifyError::Sampling { wanted: opts.samples, got, tries: opts.samples * 100 });
    }
    let samples: Vec<Sample> = drawn.into_iter().flatten().collect();

    let tol = opts.tol;
    let mut rmax = [0.0f64; 3];
    let mut cmax = [0.0f64; 6];
    let mut c42_min = f64::INFINITY;
    let mut failures = Vec::new();
    let mut pass = true;
    let third_order = fam.constants().is_some();
    for s in &samples {
        for k in 0..3 {
            rmax[k] = rmax[k].max(s.r[k]);
        }
        let mut bad = s.r.iter().any(|r| *r > tol * s.r_scale);
        let mut row: Vec<f64> = s.r.to_vec();
        if let Some(c) = s.cond {
            let vals = [c.c36, c.c37, c.c38, c.c39, c.c40, c.c41];
            for k in 0..6 {
                cmax[k] = cmax[k].max(vals[k]);
            }
            c42_min = c42_min.min(c.c42);
            let scales = [1.0, 1.0, 1.0, c.scale, c.scale, c.scale];
            bad |= vals.iter().zip(scales).any(|(v, sc)| *v > tol * sc);
            bad |= c.c42 <= tol;
            row.extend(vals);
        } else {
            row.extend([0.0; 6]);
        }
        if bad {
            pass = false;
            if failures.len() < MAX_FAILURES {
                failures.push(FailingSample { jet: s.jet.clone(), residuals: row });
            }
        }
    }
    let c = |k: usize| third_order.then_some(cmax[k]);
    let residuals = Residuals {
        R1_max: rmax[0],
        R2_max: rmax[1],
        R3_max: rmax[2],
        c36: c(0),
        c37: c(1),
        c38: c(2),
        c39: c(3),
        c40: c(4),
        c41: c(5),
        c42: third_order.then_some(c42_min),
    };
    Ok(VerificationReport {
        family: fam.label().to_string(),
        branch: fam.branch_name().to_string(),
        seed: opts.seed,
        samples: opts.samples,
        tolerance: tol,
        residuals,
        failures,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        convention: CONVENTION.to_string(),
    })
}

/// [`verify`] with the default seed and box.
pub fn check_classification_conditions(fam: &Family, samples: usize, tol: f64) -> Result<VerificationReport, VerifyError> {
    verify(fam, &VerifyOptions { samples, tol, ..VerifyOptions::default() })
}

/// A family with one coefficient shifted by a constant.
#[derive(Debug)]
pub struct Perturbed {
    inner: Family,
    /// 1-based (i, j).
    slot: (usize, usize),
    eps: f64,
}

impl Perturbed {
    /// `fam` with f_ij + eps.
    pub fn family(fam: &Family, i: usize, j: usize, eps: f64) -> Family {
        let b = Perturbed { inner: fam.clone(), slot: (i, j), eps };
        Family::from_branch(&format!("{}+perturbed(f{i}{j})", fam.label()), fam.spec().clone(), Arc::new(b))
    }
}

impl<T: FamilyScalar> Coefficients<T> for Perturbed {
    fn forms(&self, z: &[T; 3]) -> Result<Forms<T>, EvalError> {
        let mut f = self.inner.forms(z)?;
        let (i, j) = self.slot;
        f[i - 1][j - 1] = f[i - 1][j - 1].clone() + self.eps;
        Ok(f)
    }
    fn rhs(&self, z: &[T; 3]) -> Result<T, EvalError> {
        self.inner.rhs(z)
    }
}

impl Branch for Perturbed {
    fn name(&self) -> &str {
        self.inner.branch_name()
    }
    fn constants(&self) -> Option<Constants> {
        self.inner.constants()
    }
    fn evolution(&self) -> Evolution {
        self.inner.evolution()
    }
    fn immersion(&self) -> ImmersionCase {
        self.inner.immersion_case()
    }
}
