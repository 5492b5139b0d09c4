//! Subcommand bodies. Each returns a status and a JSON result, or a
//! configuration error (exit 1).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use pss_core::family::{presets, BranchRegistry, Family, FamilySpec, ImmersionCase};
use pss_core::frame::{integrate_frame, FrameOptions, Sampling};
use pss_core::immersion::{codazzi_check, solve_triple, ImmersionError, ImmersionParams, ImmersionTriple, TripleKind};
use pss_core::jet::Expression;
use pss_core::pde::{
    exact_sine_gordon_kink, field_to_csv, h1_energy, kink_field, read_pssf, sine_gordon_march, solve_mol, write_pssf,
    Grid1D, MolOptions, SineGordonOptions, SolutionField,
};
use pss_core::verify::{verify, VerifyOptions, DEFAULT_SEED, DEFAULT_TOL};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::report::Status;

/// A usage or configuration problem.
#[derive(Debug)]
pub struct Failure(pub String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

pub type Outcome = Result<(Status, Value), Failure>;

/// Default Codazzi tolerance; the ODE tables are only fourth-order accurate.
pub const CODAZZI_TOL: f64 = 1e-7;

/// Nodes trimmed from each end of a bounded field: the half-width of the
/// widest x-stencil a second-order jet needs at stencil order five.
const BOUNDED_MARGIN: usize = 4;

fn write(path: &Path, text: &[u8]) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

pub fn family(cfg: &RunConfig) -> Result<Family, Failure> {
    match (&cfg.preset, &cfg.family) {
        (Some(name), _) => match cfg.sign {
            None => Ok(Family::preset(name)?),
            Some(sign) => {
                let p = presets().into_iter().find(|p| p.name == name).ok_or_else(|| Failure(format!("unknown preset `{name}`")))?;
                if p.spec.sign == sign {
                    return Ok(Family::preset(name)?);
                }
                Ok(Family::build(&p.spec.with_sign(sign))?.with_label(name))
            }
        },
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            let mut spec = FamilySpec::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            if let Some(sign) = cfg.sign {
                spec.sign = sign;
            }
            let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| spec.branch.clone());
            Ok(Family::build(&spec)?.with_label(&label))
        }
        (None, None) => Err(Failure("choose a family with --preset or --family".into())),
    }
}

fn immersion_params(cfg: &RunConfig) -> ImmersionParams {
    let d = ImmersionParams::default();
    ImmersionParams {
        beta: cfg.beta.unwrap_or(d.beta),
        c_strip: cfg.c_strip.unwrap_or(d.c_strip),
        sigma: cfg.sigma.unwrap_or(d.sigma),
        a_sign: cfg.a_sign.map(f64::from).unwrap_or(d.a_sign),
        b0: cfg.b0.unwrap_or(d.b0),
        s0: cfg.s0.unwrap_or(d.s0),
        h: cfg.h.unwrap_or(d.h),
        span: cfg.span.unwrap_or(d.span),
    }
}

fn family_json(fam: &Family) -> Value {
    json!({ "label": fam.label(), "branch": fam.branch_name(), "spec": fam.spec() })
}

/// Resolve the triple, mapping proven non-existence to its own outcome.
fn triple(fam: &Family, ip: &ImmersionParams) -> Result<Result<ImmersionTriple, Value>, Failure> {
    match solve_triple(fam, ip) {
        Ok(t) => Ok(Ok(t)),
        Err(ImmersionError::NoImmersion { citation }) => {
            eprintln!("{}: no local isometric immersion ({citation})", fam.label());
            Ok(Err(json!({
                "family": family_json(fam),
                "immersion": Value::Null,
                "citation": citation,
            })))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn catalog(cfg: &RunConfig, validate: bool) -> Outcome {
    let registry = BranchRegistry::builtin();
    if !validate {
        let branches: Vec<Value> = registry
            .names()
            .into_iter()
            .map(|n| json!({ "name": n, "expressions": registry.rule(n).map(|r| r.expressions().to_vec()).unwrap_or_default() }))
            .collect();
        let shipped: Vec<Value> =
            presets().into_iter().map(|p| json!({ "name": p.name, "summary": p.summary, "spec": p.spec })).collect();
        for p in presets() {
            eprintln!("{:<16} {}", p.name, p.summary);
        }
        return Ok((Status::Ok, json!({ "branches": branches, "presets": shipped })));
    }
    let spec = match (&cfg.preset, &cfg.family) {
        (Some(name), _) => presets().into_iter().find(|p| p.name == name).map(|p| p.spec).ok_or_else(|| Failure(format!("unknown preset `{name}`")))?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            FamilySpec::from_json(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(Failure("catalog validate needs --preset or --family".into())),
    };
    let spec = match cfg.sign {
        Some(s) => spec.with_sign(s),
        None => spec,
    };
    let violations = registry.validate(&spec)?;
    let built = if violations.is_empty() { registry.build(&spec).err().map(|e| e.to_string()) } else { None };
    for v in &violations {
        eprintln!("violation: {v}");
    }
    if let Some(e) = &built {
        eprintln!("error: {e}");
    }
    let ok = violations.is_empty() && built.is_none();
    let status = if ok { Status::Ok } else { Status::Invalid };
    Ok((status, json!({ "spec": spec, "valid": ok, "violations": violations, "error": built })))
}

pub fn verify_cmd(cfg: &RunConfig) -> Outcome {
    let fam = family(cfg)?;
    let opts = VerifyOptions {
        samples: cfg.samples.unwrap_or(1000),
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        tol: cfg.tol.unwrap_or(DEFAULT_TOL),
        ..VerifyOptions::default()
    };
    let rep = verify(&fam, &opts)?;
    eprintln!(
        "{}: R_max = {:.3e} over {} jets (tol {:e}): {:?}",
        rep.family,
        rep.residuals.structure_max(),
        rep.samples,
        rep.tolerance,
        rep.verdict
    );
    let status = match rep.verdict {
        pss_core::verify::Verdict::Pass => Status::Pass,
        pss_core::verify::Verdict::Fail => Status::Fail,
    };
    Ok((status, serde_json::to_value(&rep)?))
}

fn triple_summary(trip: &ImmersionTriple, ip: &ImmersionParams) -> Value {
    let (lo, hi) = trip.interval();
    let mut v = json!({
        "label": trip.label,
        "representation": trip.representation(),
        "coordinate": trip.coord,
        "interval": [lo, hi],
        "params": ip,
    });
    match &trip.kind {
        TripleKind::ClosedForm(st) => v["strip"] = serde_json::to_value(st).unwrap_or_default(),
        TripleKind::OdeTable(t) => {
            v["ode"] = json!({
                "h": t.h,
                "nodes": t.s.len(),
                "stop_below": t.stop_below,
                "stop_above": t.stop_above,
                "back_substitution_max": t.back_substitution_max(),
            })
        }
        TripleKind::SolutionDependent { eta, eps } => {
            v["solution_dependent"] = json!({ "eta": eta, "a": format!("{}/tan(u)", 2.0 * eps), "b": -eps, "c": 0.0 })
        }
    }
    v
}

/// CSV of the solution-dependent triple over u, away from the poles at
/// multiples of π.
fn solution_dependent_csv(trip: &ImmersionTriple, n: usize) -> Result<String, Failure> {
    let mut out = String::from("u,a,b,c,gauss_residual\n");
    for k in 0..n {
        let u = 0.05 + (2.0 * PI - 0.1) * k as f64 / (n.max(2) - 1) as f64;
        if let Ok(v) = trip.eval_u(u) {
            if (u - PI).abs() > 0.05 {
                writeln!(out, "{u:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", v.a, v.b, v.c, v.gauss()).unwrap();
            }
        }
    }
    Ok(out)
}

pub fn sff(cfg: &RunConfig) -> Outcome {
    let fam = family(cfg)?;
    let ip = immersion_params(cfg);
    let trip = match triple(&fam, &ip)? {
        Ok(t) => t,
        Err(v) => return Ok((Status::NoImmersion, v)),
    };
    let mut v = triple_summary(&trip, &ip);
    v["family"] = family_json(&fam);
    if let Some(path) = &cfg.out {
        let n = cfg.samples.unwrap_or(1000);
        let csv = match trip.kind {
            TripleKind::SolutionDependent { .. } => solution_dependent_csv(&trip, n)?,
            _ => trip.to_csv(&trip.export_points(n, 3.0))?,
        };
        write(path, csv.as_bytes())?;
        v["csv"] = json!(path);
    }
    eprintln!("{}: {} ({:?})", fam.label(), trip.label, trip.representation());
    Ok((Status::Ok, v))
}

pub fn codazzi(cfg: &RunConfig) -> Outcome {
    let fam = family(cfg)?;
    let ip = immersion_params(cfg);
    let trip = match triple(&fam, &ip)? {
        Ok(t) => t,
        Err(v) => return Ok((Status::NoImmersion, v)),
    };
    let tol = cfg.tol.unwrap_or(CODAZZI_TOL);
    let rep = codazzi_check(&fam, &trip, cfg.samples.unwrap_or(1000), cfg.seed.unwrap_or(DEFAULT_SEED))?;
    let pass = rep.worst() <= tol;
    eprintln!(
        "{}: {} Codazzi max ({:.3e}, {:.3e}), Gauss max {:.3e} (tol {tol:e})",
        fam.label(),
        trip.label,
        rep.E1_max,
        rep.E2_max,
        rep.gauss_max
    );
    let v = json!({ "family": family_json(&fam), "triple": triple_summary(&trip, &ip), "check": rep, "tolerance": tol, "pass": pass });
    Ok((if pass { Status::Pass } else { Status::Fail }, v))
}

fn sine_gordon_eta(fam: &Family) -> Option<f64> {
    match fam.immersion_case() {
        ImmersionCase::SolutionDependent { eta } => Some(eta),
        _ => None,
    }
}

pub fn pde(cfg: &RunConfig) -> Outcome {
    let fam = family(cfg)?;
    let t_max = cfg.t_max.unwrap_or(1.0);
    let (field, extra) = if let Some(eta) = sine_gordon_eta(&fam) {
        let (nx, snaps) = cfg.grid.unwrap_or((600, 10));
        let [x0, x1, ..] = cfg.domain.unwrap_or([-30.0, 30.0, 0.0, 0.0]);
        let grid = Grid1D::bounded(x0, x1, nx)?;
        let u0: Vec<f64> = grid.nodes().iter().map(|&x| exact_sine_gordon_kink(eta, x, 0.0)).collect();
        let opts = SineGordonOptions { t0: 0.0, t_max, dt: cfg.dt.unwrap_or(0.05), snapshots: snaps, order: 4 };
        let f = sine_gordon_march(grid, &u0, &opts)?;
        let t = *f.times.last().unwrap();
        let err = f.u.last().unwrap().iter().enumerate().fold(0.0f64, |m, (i, u)| m.max((u - exact_sine_gordon_kink(eta, grid.x(i), t)).abs()));
        eprintln!("sine-Gordon kink march: L∞ error {err:.3e} at t = {t}");
        (f, json!({ "initial_data": format!("one-soliton, η = {eta}"), "linf_error_vs_exact": err }))
    } else {
        let (nx, snaps) = cfg.grid.unwrap_or((256, 10));
        let [x0, x1, ..] = cfg.domain.unwrap_or([0.0, 2.0 * PI, 0.0, 0.0]);
        let grid = Grid1D::periodic(x0, x1, nx)?;
        let src = cfg.u0.clone().unwrap_or_else(|| "0.1 + 0.05*cos(x)".into());
        let e = Expression::parse(&src, &["x"]).map_err(|e| Failure(format!("u0 `{src}`: {e}")))?;
        let u0 = grid.nodes().iter().map(|&x| e.eval(&[x])).collect::<Result<Vec<f64>, _>>()?;
        let opts = MolOptions { t_max, dt: cfg.dt.unwrap_or(0.01), snapshots: snaps, ..MolOptions::default() };
        let f = solve_mol(&fam, grid, &u0, &opts)?;
        let e0 = h1_energy(&grid, &f.u[0], 4);
        let drift = f.u.iter().fold(0.0f64, |m, r| m.max(((h1_energy(&grid, r, 4) - e0) / e0).abs()));
        eprintln!("{}: marched to t = {t_max}, relative H1 drift {drift:.3e}", fam.label());
        (f, json!({ "initial_data": src, "h1_relative_drift": drift }))
    };
    let mut v = json!({
        "family": family_json(&fam),
        "provenance": field.provenance,
        "grid": field.grid,
        "times": field.times,
        "boundary": if field.grid.periodic { "periodic" } else { "bounded, decay at x_min" },
    });
    for (k, val) in extra.as_object().unwrap() {
        v[k] = val.clone();
    }
    if let Some(path) = &cfg.out {
        let mut bytes = Vec::new();
        write_pssf(&field, &mut bytes)?;
        write(path, &bytes)?;
        v["field_file"] = json!(path);
    }
    if let Some(path) = &cfg.csv {
        write(path, field_to_csv(&field).as_bytes())?;
        v["csv"] = json!(path);
    }
    Ok((Status::Ok, v))
}

pub fn reconstruct(cfg: &RunConfig) -> Outcome {
    let fam = family(cfg)?;
    let ip = immersion_params(cfg);
    let trip = match triple(&fam, &ip)? {
        Ok(t) => t,
        Err(v) => return Ok((Status::NoImmersion, v)),
    };
    let sg = sine_gordon_eta(&fam);
    if cfg.soliton == Some(true) && sg.is_none() {
        return Err(Failure("--soliton applies to the sine-Gordon family only".into()));
    }
    let (field, mut opts, source) = if let Some(path) = &cfg.field {
        let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
        let f = read_pssf(bytes.as_slice())?;
        let dts: Vec<f64> = f.times.windows(2).map(|w| w[1] - w[0]).collect();
        if dts.iter().any(|d| (d - dts[0]).abs() > 1e-9 * dts[0].abs()) {
            return Err(Failure("field snapshots must be evenly spaced".into()));
        }
        // Bounded grids lose the nodes whose x-stencils would leave the domain.
        let margin = if f.grid.periodic { 0 } else { BOUNDED_MARGIN };
        let nx = f.grid.len() - 2 * margin;
        if nx < 2 {
            return Err(Failure("field grid too small to reconstruct".into()));
        }
        let (x0, x1) = (f.grid.x(margin), f.grid.x(margin + nx - 1));
        let mut o = FrameOptions::over((x0, x1), (f.times[0], *f.times.last().unwrap()), nx, f.times.len());
        o.sampling = Sampling::NodeLinear;
        (f, o, json!({ "field_file": path }))
    } else {
        let [x0, x1, t0, t1] = cfg.domain.unwrap_or([-6.0, 6.0, -6.0, 6.0]);
        let (nx, nt) = cfg.grid.unwrap_or((200, 200));
        let grid = Grid1D::bounded(x0, x1, 16)?;
        let (f, source) = match (&cfg.solution, sg) {
            (Some(src), _) => (SolutionField::exact(src, grid, vec![t0, t1])?, json!({ "solution": src })),
            (None, Some(eta)) => (kink_field(eta, grid, vec![t0, t1])?, json!({ "solution": "one-soliton", "eta": eta })),
            (None, None) => return Err(Failure("reconstruct needs --solution or --field for this family".into())),
        };
        (f, FrameOptions::over((x0, x1), (t0, t1), nx, nt), source)
    };
    opts.substeps = cfg.substeps.unwrap_or(opts.substeps);
    let mesh = integrate_frame(&fam, &trip, &field, &opts)?;
    let diag = mesh.diagnostics();
    eprintln!(
        "{}: {}×{} mesh, K_median {:?}, {:.1}% of interior vertices within K = −1 ± {}, drift {:.2e}, compatibility gap {:.2e}",
        fam.label(),
        mesh.nx,
        mesh.nt,
        diag.k_median,
        100.0 * diag.within_band,
        pss_core::frame::K_BAND,
        diag.drift_max,
        diag.compat_max
    );
    let mut v = json!({
        "family": family_json(&fam),
        "triple": triple_summary(&trip, &ip),
        "field": source,
        "mesh": { "nx": mesh.nx, "nt": mesh.nt, "origin": mesh.origin, "h": mesh.h, "substeps": opts.substeps, "sampling": opts.sampling },
        "diagnostics": diag,
    });
    if let Some(path) = &cfg.out {
        write(path, mesh.to_obj().as_bytes())?;
        let side = path.with_extension("json");
        write(&side, (serde_json::to_string_pretty(&diag)? + "\n").as_bytes())?;
        v["obj"] = json!(path);
        v["sidecar"] = json!(side);
    }
    Ok((Status::Ok, v))
}
