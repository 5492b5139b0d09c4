//! Second fundamental form triples {a, b, c} with ω13 = aω1 + bω2 and
//! ω23 = bω1 + cω2: closed forms on their strips, the first-order b-ODE
//! branches, the solution-dependent sine-Gordon triple, and the
//! Gauss/Codazzi checks.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::family::{delta_of, Family, ImmersionCase, ReducedCoord, StripConstant};
use crate::jet::{Dual, JetError, JetPoint, Scalar};

pub const DISCRIMINANT_MIN: f64 = 1e-8;
pub const DENOMINATOR_MIN: f64 = 1e-8;
/// The march also halts once |b| exceeds this.
pub const B_MAX: f64 = 1e6;

/// Free data of the immersion: integration constants, strip constants and
/// the IVP for the b-ODE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImmersionParams {
    pub beta: f64,
    /// Strip constant of the λ = 0 branch.
    pub c_strip: f64,
    /// Strip constant of the C-shifted branch.
    pub sigma: f64,
    /// Global sign of a (±1).
    pub a_sign: f64,
    pub b0: f64,
    pub s0: f64,
    pub h: f64,
    /// How far the ODE march runs on each side of s0.
    pub span: f64,
}

impl Default for ImmersionParams {
    fn default() -> Self {
        ImmersionParams { beta: 1.0, c_strip: 3.0, sigma: 3.0, a_sign: 1.0, b0: 0.5, s0: 0.0, h: 1e-3, span: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImmersionError {
    #[error("no local isometric immersion ({citation})")]
    NoImmersion { citation: String },
    #[error("invalid strip: {constraint} violated ({detail})")]
    InvalidStrip { constraint: String, detail: String },
    #[error("s = {s} lies outside the strip ({lo}, {hi})")]
    OutsideStrip { s: f64, lo: f64, hi: f64 },
    #[error("discriminant collapsed at s = {s}")]
    DiscriminantCollapse { s: f64 },
    #[error("denominator of the b-ODE collapsed at s = {s}")]
    DenominatorCollapse { s: f64 },
    #[error("tan u has a pole at u = {u} (sin u = 0)")]
    Pole { u: f64 },
    #[error("invalid immersion parameter: {0}")]
    BadParams(String),
    #[error("the triple is solution dependent; evaluate it at a jet")]
    NeedsJet,
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// ac − b² + 1.
pub fn gauss_residual(a: f64, b: f64, c: f64) -> f64 {
    a * c - b * b + 1.0
}

/// a, b, c and their derivatives in the reduced coordinate (or in u for the
/// solution-dependent triple).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Abc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub da: f64,
    pub db: f64,
    pub dc: f64,
}

impl Abc {
    pub fn gauss(&self) -> f64 {
        gauss_residual(self.a, self.b, self.c)
    }
}

/// a = ε√L, b = b_sign·β·y, c = a − σa'/κ with y = e^{2σκs} and
/// L = Ky − β²y² − 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StripTriple {
    pub kappa: f64,
    pub sigma: f64,
    pub b_sign: f64,
    pub k: f64,
    pub beta: f64,
    pub eps: f64,
}

impl StripTriple {
    /// L = Ky − β²y² − 1 and its first two s-derivatives.
    pub fn l(&self, s: f64) -> [f64; 3] {
        let k2 = 2.0 * self.sigma * self.kappa;
        let y = (k2 * s).exp();
        let b2 = self.beta * self.beta;
        [
            self.k * y - b2 * y * y - 1.0,
            k2 * (self.k * y - 2.0 * b2 * y * y),
            k2 * k2 * (self.k * y - 4.0 * b2 * y * y),
        ]
    }

    /// Open interval in s where L > 0; one end is infinite when β = 0.
    pub fn bounds(&self) -> (f64, f64) {
        let k2 = 2.0 * self.sigma * self.kappa;
        let (y_lo, y_hi) = strip_roots(self.k, self.beta);
        let (a, b) = (y_lo.ln() / k2, y_hi.ln() / k2);
        (a.min(b), a.max(b))
    }

    pub fn eval(&self, s: f64) -> Result<Abc, ImmersionError> {
        let [l, l1, l2] = self.l(s);
        if !(l > 0.0) {
            let (lo, hi) = self.bounds();
            return Err(ImmersionError::OutsideStrip { s, lo, hi });
        }
        let a = self.eps * l.sqrt();
        let a1 = l1 / (2.0 * a);
        let a2 = (l2 * a - l1 * a1) / (2.0 * a * a);
        let k2 = 2.0 * self.sigma * self.kappa;
        let y = (k2 * s).exp();
        let b = self.b_sign * self.beta * y;
        let q = self.sigma / self.kappa;
        Ok(Abc { a, b, c: a - q * a1, da: a1, db: b * k2, dc: a1 - q * a2 })
    }
}

/// Roots of β²y² − Ky + 1 bounding L > 0 in y = e^{2σκs}: (y_lo, y_hi),
/// with y_hi = ∞ when β = 0.
pub fn strip_roots(k: f64, beta: f64) -> (f64, f64) {
    let b2 = beta * beta;
    if b2 == 0.0 {
        return (1.0 / k, f64::INFINITY);
    }
    let y_hi = (k + (k * k - 4.0 * b2).sqrt()) / (2.0 * b2);
    // product of the roots is 1/β²
    (1.0 / (b2 * y_hi), y_hi)
}

/// The b-ODE branch: with ξ = κs, E = e^{2σξ/r},
/// ϕ = ((μ2² − 1)/μ2)b − (β/μ2)E, Δ = ϕ² − 4(1 − b²), a = (−ϕ + ε√Δ)/2,
/// c = a + ϕ, and b_s = −κQ/P.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeModel {
    pub kappa: f64,
    pub sigma: f64,
    pub mu2: f64,
    pub beta: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopKind {
    Discriminant,
    Denominator,
    BlowUp,
}

impl OdeModel {
    fn r(&self) -> f64 {
        (1.0 + self.mu2 * self.mu2).sqrt()
    }

    fn e<T: Scalar>(&self, s: &T) -> T {
        (s.clone() * (2.0 * self.sigma * self.kappa / self.r())).exp()
    }

    /// (ϕ, Δ) at (s, b).
    pub fn phi_delta<T: Scalar>(&self, s: &T, b: &T) -> (T, T) {
        let mu2 = self.mu2;
        let phi = b.clone() * ((mu2 * mu2 - 1.0) / mu2) - self.e(s) * (self.beta / mu2);
        let delta = phi.sq() - (-b.sq() + 1.0) * 4.0;
        (phi, delta)
    }

    /// (a, c) at (s, b); requires Δ > 0.
    pub fn ac<T: Scalar>(&self, s: &T, b: &T) -> Result<(T, T), ImmersionError> {
        let (phi, delta) = self.phi_delta(s, b);
        let root = delta.sqrt().map_err(|_| ImmersionError::DiscriminantCollapse { s: s.re() })?;
        let a = (root * self.eps - phi.clone()) * 0.5;
        let c = a.clone() + phi;
        Ok((a, c))
    }

    /// (P, κQ) with b_s = −κQ/P.
    pub fn pq(&self, s: f64, b: f64) -> Result<(f64, f64), StopKind> {
        let (mu2, beta, eps, sigma) = (self.mu2, self.beta, self.eps, self.sigma);
        let r = self.r();
        let r2 = r * r;
        let e = self.e(&s);
        let (_, delta) = self.phi_delta(&s, &b);
        if delta <= DISCRIMINANT_MIN {
            return Err(StopKind::Discriminant);
        }
        let sq = delta.sqrt();
        let p = eps * r2 * r2 * b - eps * (mu2 * mu2 - 1.0) * beta * e + mu2 * r2 * sq;
        if p.abs() < DENOMINATOR_MIN {
            return Err(StopKind::Denominator);
        }
        let q = 2.0 / r * sigma * (-mu2 * r2 * sq * b - eps * (mu2 * mu2 - 1.0) * beta * e * b + eps * beta * beta * e * e);
        Ok((p, self.kappa * q))
    }

    /// b_s = g(s, b).
    pub fn slope(&self, s: f64, b: f64) -> Result<f64, StopKind> {
        let (p, kq) = self.pq(s, b)?;
        Ok(-kq / p)
    }

    /// One RK4 step. P changing sign inside the step means the march
    /// stepped across a pole of b_s, which counts as a collapse too.
    fn rk4(&self, s: f64, b: f64, h: f64) -> Result<f64, StopKind> {
        let (p0, _) = self.pq(s, b)?;
        let stage = |s: f64, b: f64| {
            let (p, kq) = self.pq(s, b)?;
            if p.signum() != p0.signum() {
                return Err(StopKind::Denominator);
            }
            Ok(-kq / p)
        };
        let k1 = stage(s, b)?;
        let k2 = stage(s + h / 2.0, b + h / 2.0 * k1)?;
        let k3 = stage(s + h / 2.0, b + h / 2.0 * k2)?;
        let k4 = stage(s + h, b + h * k3)?;
        let next = b + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if next.abs() > B_MAX {
            return Err(StopKind::BlowUp);
        }
        stage(s + h, next)?;
        Ok(next)
    }
}

/// Where and why a march direction halted early.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stop {
    pub s: f64,
    pub kind: StopKind,
}

/// Tabulated b on a uniform grid with slopes for Hermite interpolation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdeTable {
    pub model: OdeModel,
    pub h: f64,
    pub s: Vec<f64>,
    pub b: Vec<f64>,
    pub bp: Vec<f64>,
    pub stop_below: Option<Stop>,
    pub stop_above: Option<Stop>,
}

/// One point of the back-substitution check P·b' + κQ = 0 with b' taken by
/// a five-point difference of the table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BackSubstitution {
    pub s: f64,
    pub residual: f64,
    pub scale: f64,
}

impl OdeTable {
    pub fn interval(&self) -> (f64, f64) {
        (self.s[0], *self.s.last().expect("table is never empty"))
    }

    /// b and b_s by cubic Hermite interpolation.
    pub fn interpolate(&self, s: f64) -> Result<(f64, f64), ImmersionError> {
        let (lo, hi) = self.interval();
        if !(s >= lo && s <= hi) {
            return Err(ImmersionError::OutsideStrip { s, lo, hi });
        }
        let n = self.s.len();
        if n == 1 {
            return Ok((self.b[0], self.bp[0]));
        }
        let i = (((s - lo) / self.h).floor() as usize).min(n - 2);
        let h = self.s[i + 1] - self.s[i];
        let u = (s - self.s[i]) / h;
        let (y0, y1, m0, m1) = (self.b[i], self.b[i + 1], self.bp[i] * h, self.bp[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let v = (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * m0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * m1;
        let dv = (6.0 * u2 - 6.0 * u) * y0 + (3.0 * u2 - 4.0 * u + 1.0) * m0 + (-6.0 * u2 + 6.0 * u) * y1 + (3.0 * u2 - 2.0 * u) * m1;
        Ok((v, dv / h))
    }

    /// Interpolated b with b_s from the ODE itself (the Hermite slope where
    /// the right-hand side is not available).
    pub fn eval(&self, s: f64) -> Result<Abc, ImmersionError> {
        let (b, hermite) = self.interpolate(s)?;
        let db = self.model.slope(s, b).unwrap_or(hermite);
        let sd = Dual::variable(s, 0, 2);
        let bd = Dual::variable(b, 1, 2);
        let (a, c) = self.model.ac(&sd, &bd)?;
        let da = a.partial(0) + a.partial(1) * db;
        let dc = c.partial(0) + c.partial(1) * db;
        Ok(Abc { a: a.v, b, c: c.v, da, db, dc })
    }

    /// Back-substitution at every node with two neighbours on each side.
    pub fn back_substitution(&self) -> Vec<BackSubstitution> {
        let n = self.s.len();
        let h = self.h;
        (2..n.saturating_sub(2))
            .filter_map(|i| {
                let b = &self.b;
                let fd = (b[i - 2] - 8.0 * b[i - 1] + 8.0 * b[i + 1] - b[i + 2]) / (12.0 * h);
                let (p, kq) = self.model.pq(self.s[i], b[i]).ok()?;
                let residual = p * fd + kq;
                let scale = 1f64.max((p * fd).abs()).max(kq.abs());
                Some(BackSubstitution { s: self.s[i], residual, scale })
            })
            .collect()
    }

    /// max |residual| over the table.
    pub fn back_substitution_max(&self) -> f64 {
        self.back_substitution().iter().fold(0.0, |m, r| m.max(r.residual.abs()))
    }
}

/// RK4 march of b from (s0, b0) over [s0 − span, s0 + span] with step h,
/// halting a direction when Δ ≤ Δ_min or |P| < P_min.
pub fn integrate_b_ode(model: OdeModel, ip: &ImmersionParams) -> Result<OdeTable, ImmersionError> {
    check_ode_params(ip)?;
    let (s0, b0, h) = (ip.s0, ip.b0, ip.h);
    let bp0 = model.slope(s0, b0).map_err(|k| collapse(k, s0))?;
    let steps = (ip.span / h).round() as usize;
    let march = |dir: f64| {
        let mut pts = Vec::new();
        let (mut s, mut b) = (s0, b0);
        for k in 1..=steps {
            let next = model.rk4(s, b, dir * h).and_then(|nb| {
                let ns = s0 + dir * h * k as f64;
                model.slope(ns, nb).map(|bp| (ns, nb, bp))
            });
            match next {
                Ok((ns, nb, bp)) => {
                    pts.push((ns, nb, bp));
                    s = ns;
                    b = nb;
                }
                Err(kind) => return (pts, Some(Stop { s, kind })),
            }
        }
        (pts, None)
    };
    let (below, stop_below) = march(-1.0);
    let (above, stop_above) = march(1.0);
    let pts: Vec<_> = below.into_iter().rev().chain([(s0, b0, bp0)]).chain(above).collect();
    Ok(OdeTable {
        model,
        h,
        s: pts.iter().map(|p| p.0).collect(),
        b: pts.iter().map(|p| p.1).collect(),
        bp: pts.iter().map(|p| p.2).collect(),
        stop_below,
        stop_above,
    })
}

fn collapse(kind: StopKind, s: f64) -> ImmersionError {
    match kind {
        StopKind::Discriminant => ImmersionError::DiscriminantCollapse { s },
        StopKind::Denominator | StopKind::BlowUp => ImmersionError::DenominatorCollapse { s },
    }
}

fn check_common(ip: &ImmersionParams) -> Result<(), ImmersionError> {
    if ip.a_sign != 1.0 && ip.a_sign != -1.0 {
        return Err(ImmersionError::BadParams(format!("a_sign must be ±1, got {}", ip.a_sign)));
    }
    if !ip.beta.is_finite() {
        return Err(ImmersionError::BadParams(format!("beta must be finite, got {}", ip.beta)));
    }
    Ok(())
}

fn check_ode_params(ip: &ImmersionParams) -> Result<(), ImmersionError> {
    check_common(ip)?;
    if !(ip.h > 0.0) || !(ip.span > 0.0) {
        return Err(ImmersionError::BadParams(format!("h and span must be positive (h = {}, span = {})", ip.h, ip.span)));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Representation {
    ClosedForm,
    OdeTable,
    SolutionDependent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TripleKind {
    ClosedForm(StripTriple),
    OdeTable(OdeTable),
    /// a = 2ε/tan u, b = −ε, c = 0.
    SolutionDependent { eta: f64, eps: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImmersionTriple {
    pub label: String,
    /// s as a function of (x, t).
    pub coord: ReducedCoord,
    pub kind: TripleKind,
}

impl ImmersionTriple {
    pub fn representation(&self) -> Representation {
        match self.kind {
            TripleKind::ClosedForm(_) => Representation::ClosedForm,
            TripleKind::OdeTable(_) => Representation::OdeTable,
            TripleKind::SolutionDependent { .. } => Representation::SolutionDependent,
        }
    }

    /// Validity interval in s.
    pub fn interval(&self) -> (f64, f64) {
        match &self.kind {
            TripleKind::ClosedForm(st) => st.bounds(),
            TripleKind::OdeTable(t) => t.interval(),
            TripleKind::SolutionDependent { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// a, b, c and s-derivatives; universal triples only.
    pub fn eval(&self, s: f64) -> Result<Abc, ImmersionError> {
        match &self.kind {
            TripleKind::ClosedForm(st) => st.eval(s),
            TripleKind::OdeTable(t) => t.eval(s),
            TripleKind::SolutionDependent { .. } => Err(ImmersionError::NeedsJet),
        }
    }

    pub fn at(&self, x: f64, t: f64) -> Result<Abc, ImmersionError> {
        self.eval(self.coord.at(x, t))
    }

    /// The solution-dependent triple at u, with u-derivatives.
    pub fn eval_u(&self, u: f64) -> Result<Abc, ImmersionError> {
        let TripleKind::SolutionDependent { eps, .. } = self.kind else {
            return Err(ImmersionError::BadParams("eval_u applies to the solution-dependent triple only".into()));
        };
        let (sn, cs) = u.sin_cos();
        if sn.abs() < 1e-12 {
            return Err(ImmersionError::Pole { u });
        }
        Ok(Abc { a: 2.0 * eps * cs / sn, b: -eps, c: 0.0, da: -2.0 * eps / (sn * sn), db: 0.0, dc: 0.0 })
    }

    /// Evenly spaced s covering `frac` of the interval around its middle;
    /// an infinite side is cut at `window` from the finite end.
    pub fn sample_points(&self, n: usize, frac: f64, window: f64) -> Vec<f64> {
        let (mut lo, mut hi) = self.interval();
        if lo.is_infinite() && hi.is_infinite() {
            lo = -window;
            hi = window;
        } else if hi.is_infinite() {
            hi = lo + window;
        } else if lo.is_infinite() {
            lo = hi - window;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo) * frac;
        if n == 1 {
            return vec![mid];
        }
        (0..n).map(|i| mid - half + 2.0 * half * i as f64 / (n - 1) as f64).collect()
    }

    /// CSV "s,a,b,c,gauss_residual", plus "bprime" for ODE tables.
    pub fn to_csv(&self, points: &[f64]) -> Result<String, ImmersionError> {
        let ode = matches!(self.kind, TripleKind::OdeTable(_));
        let mut out = String::from(if ode { "s,a,b,c,gauss_residual,bprime\n" } else { "s,a,b,c,gauss_residual\n" });
        for &s in points {
            let v = self.eval(s)?;
            write!(out, "{s:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", v.a, v.b, v.c, v.gauss()).unwrap();
            if ode {
                write!(out, ",{:.17e}", v.db).unwrap();
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// The ODE table nodes, or `n` points over 99% of the strip.
    pub fn export_points(&self, n: usize, window: f64) -> Vec<f64> {
        match &self.kind {
            TripleKind::OdeTable(t) => t.s.clone(),
            _ => self.sample_points(n, 0.99, window),
        }
    }
}

/// Dispatch on the family's branch.
pub fn solve_triple(fam: &Family, ip: &ImmersionParams) -> Result<ImmersionTriple, ImmersionError> {
    check_common(ip)?;
    match fam.immersion_case() {
        ImmersionCase::None { citation } => Err(ImmersionError::NoImmersion { citation: citation.to_string() }),
        ImmersionCase::SolutionDependent { eta } => Ok(ImmersionTriple {
            label: "sine-Gordon (solution dependent)".into(),
            coord: ReducedCoord { dx: 1.0, dt: 0.0 },
            kind: TripleKind::SolutionDependent { eta, eps: ip.a_sign },
        }),
        ImmersionCase::Strip { label, coord, kappa, sigma, b_sign, constant } => {
            let (k, name) = match constant {
                StripConstant::CStrip => (ip.c_strip, "C_strip"),
                StripConstant::Sigma => (ip.sigma, "σ"),
            };
            if !(k > 0.0 && k * k > 4.0 * ip.beta * ip.beta) {
                return Err(ImmersionError::InvalidStrip {
                    constraint: format!("{name} > 0 and {name}² > 4β²"),
                    detail: format!("{name} = {k}, β = {}", ip.beta),
                });
            }
            let st = StripTriple { kappa, sigma, b_sign, k, beta: ip.beta, eps: ip.a_sign };
            Ok(ImmersionTriple { label: label.into(), coord, kind: TripleKind::ClosedForm(st) })
        }
        ImmersionCase::Ode { label, coord, kappa, sigma, mu2 } => {
            let model = OdeModel { kappa, sigma, mu2, beta: ip.beta, eps: ip.a_sign };
            let table = integrate_b_ode(model, ip)?;
            Ok(ImmersionTriple { label: label.into(), coord, kind: TripleKind::OdeTable(table) })
        }
    }
}

/// Closed-form (a, b, c) at s for a strip branch.
pub fn closed_form_triple(fam: &Family, ip: &ImmersionParams, s: f64) -> Result<(f64, f64, f64), ImmersionError> {
    let trip = solve_triple(fam, ip)?;
    match trip.kind {
        TripleKind::ClosedForm(st) => st.eval(s).map(|v| (v.a, v.b, v.c)),
        _ => Err(ImmersionError::BadParams(format!("{} has no closed-form triple", fam.label()))),
    }
}

/// Strip interval in s for a strip branch.
pub fn strip_bounds(fam: &Family, ip: &ImmersionParams) -> Result<(f64, f64), ImmersionError> {
    let trip = solve_triple(fam, ip)?;
    match trip.kind {
        TripleKind::ClosedForm(st) => Ok(st.bounds()),
        _ => Err(ImmersionError::BadParams(format!("{} has no closed-form strip", fam.label()))),
    }
}

/// (E1, E2): the Codazzi combinations with f_ij and Δij at `p` and the
/// triple at (x, t). The solution-dependent triple is evaluated at u = z0
/// and differentiated along the jet (D_x u = z1, D_t u = w1).
pub fn codazzi_residuals(
    fam: &Family,
    trip: &ImmersionTriple,
    p: &JetPoint,
    x: f64,
    t: f64,
) -> Result<[f64; 2], ImmersionError> {
    let (v, [ax, at], [bx, bt], [cx, ct]) = match trip.kind {
        TripleKind::SolutionDependent { .. } => {
            let v = trip.eval_u(p.z(0)?)?;
            let (ux, ut) = (p.z(1)?, p.w(1)?);
            (v, [v.da * ux, v.da * ut], [0.0, 0.0], [0.0, 0.0])
        }
        _ => {
            let v = trip.at(x, t)?;
            let (dx, dt) = (trip.coord.dx, trip.coord.dt);
            (v, [v.da * dx, v.da * dt], [v.db * dx, v.db * dt], [v.dc * dx, v.dc * dt])
        }
    };
    let f = fam.forms_at(p)?;
    let d13 = delta_of(&f, 1, 3);
    let d23 = delta_of(&f, 2, 3);
    let (a, b, c) = (v.a, v.b, v.c);
    let e1 = f[0][0] * at + f[1][0] * bt - f[0][1] * ax - f[1][1] * bx - 2.0 * b * d13 + (a - c) * d23;
    let e2 = f[0][0] * bt + f[1][0] * ct - f[0][1] * bx - f[1][1] * cx + (a - c) * d13 + 2.0 * b * d23;
    Ok([e1, e2])
}

/// Keep Codazzi samples this far from a halted end of an ODE table, where b
/// has a square-root profile.
pub const HALT_MARGIN: f64 = 0.03;

/// Sampled Gauss and Codazzi cross-check of a triple against its family.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct CodazziReport {
    pub label: String,
    pub representation: Representation,
    pub samples: usize,
    pub seed: u64,
    /// s-range the samples were drawn from (u-range for the
    /// solution-dependent triple).
    pub range: (f64, f64),
    pub E1_max: f64,
    pub E2_max: f64,
    pub gauss_max: f64,
}

impl CodazziReport {
    pub fn worst(&self) -> f64 {
        self.E1_max.max(self.E2_max).max(self.gauss_max)
    }
}

/// Draw `samples` (jet, point) pairs, jets uniform in [−1, 1]^k and points
/// covering the triple's interval, and record the largest Codazzi and Gauss
/// residuals.
pub fn codazzi_check(fam: &Family, trip: &ImmersionTriple, samples: usize, seed: u64) -> Result<CodazziReport, ImmersionError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = trip.interval();
    if let TripleKind::OdeTable(t) = &trip.kind {
        lo += if t.stop_below.is_some() { HALT_MARGIN } else { 0.0 };
        hi -= if t.stop_above.is_some() { HALT_MARGIN } else { 0.0 };
    }
    let (lo, hi) = (lo.max(-3.0), hi.min(3.0));
    let solution_dependent = matches!(trip.kind, TripleKind::SolutionDependent { .. });
    let mut out = CodazziReport {
        label: trip.label.clone(),
        representation: trip.representation(),
        samples: 0,
        seed,
        range: if solution_dependent { (-1.0, 1.0) } else { (lo, hi) },
        E1_max: 0.0,
        E2_max: 0.0,
        gauss_max: 0.0,
    };
    let mut tries = 0;
    while out.samples < samples {
        tries += 1;
        if tries > 100 * samples.max(1) {
            return Err(ImmersionError::BadParams("could not draw admissible samples".into()));
        }
        let p = crate::verify::random_jet(&mut rng, 1.0);
        let (x, t, v) = if solution_dependent {
            match trip.eval_u(p.z[0]) {
                Ok(v) if p.z[0].sin().abs() > 1e-3 => (p.x, p.t, v),
                _ => continue,
            }
        } else {
            let s = lo + (hi - lo) * rng.gen_range(0.005..0.995);
            let c = trip.coord;
            let t = rng.gen_range(-1.0..1.0);
            let (x, t) = if c.dx != 0.0 { ((s - c.dt * t) / c.dx, t) } else { (rng.gen_range(-1.0..1.0), s / c.dt) };
            (x, t, trip.eval(s)?)
        };
        let [e1, e2] = codazzi_residuals(fam, trip, &p, x, t)?;
        out.E1_max = out.E1_max.max(e1.abs());
        out.E2_max = out.E2_max.max(e2.abs());
        out.gauss_max = out.gauss_max.max(v.gauss().abs());
        out.samples += 1;
    }
    Ok(out)
}
