//! Acceptance suite: one check per criterion, one status line each.
//! Lines go straight to stderr so they show without `--nocapture`.

use std::f64::consts::PI;
use std::io::Write;
use std::process::Command;
use std::time::Instant;

use pss_core::family::{presets, random_phi, random_phi12, random_profile, random_spec, Family, FamilySpec};
use pss_core::frame::{integrate_frame, FrameOptions, Sampling};
use pss_core::immersion::{
    closed_form_triple, codazzi_residuals, gauss_residual, solve_triple, strip_bounds, ImmersionError,
    ImmersionParams, ImmersionTriple, TripleKind,
};
use pss_core::jet::{Dual, Expression, JetPoint};
use pss_core::pde::{
    exact_sine_gordon_kink, kink_field, sample_jet, sine_gordon_march, Grid1D, SineGordonOptions, SolutionField,
};
use pss_core::verify::{random_jet, verify, VerifyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ratio_ok(r: f64, want: f64) -> bool {
    (r / want - 1.0).abs() <= 0.25
}

fn pss(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_pss")).args(args).output().expect("pss runs");
    (out.status.code().unwrap_or(-1), out.stdout)
}

fn structure_certification() -> Check {
    let started = Instant::now();
    let t22 = FamilySpec::new("T22").set("mu2", 0.0).set("eta2", 1.0).with_f("s").with_phi12("z1");
    let fams = [
        Family::preset("sine-gordon").unwrap(),
        Family::build(&t22).unwrap().with_label("t22 (f=s, φ12=z1)"),
        Family::preset("novikov").unwrap(),
        Family::preset("t23-demo").unwrap(),
        Family::preset("t25i-demo").unwrap(),
        Family::preset("t25ii-demo").unwrap(),
    ];
    let mut worst = 0f64;
    for fam in &fams {
        let rep = verify(fam, &VerifyOptions { samples: 1000, ..VerifyOptions::default() }).map_err(|e| e.to_string())?;
        if rep.samples != 1000 {
            return Err(format!("{}: {} jets", fam.label(), rep.samples));
        }
        worst = worst.max(rep.residuals.structure_max());
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(worst <= 1e-8 && secs <= 10.0, format!("max residual {worst:.2e} over 6 × 1000 jets in {secs:.2} s"))
}

fn novikov_matching() -> Check {
    let fam = Family::preset("novikov").unwrap();
    // u_t − u_xxt = u²u_xxx + G with G written out term by term
    let g = |u: f64, ux: f64, uxx: f64| {
        -u * u * uxx - 3.0 * u * ux * ux - 2.0 * u * u * ux + 4.0 * u * ux * uxx + ux.powi(3)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0f64;
    for _ in 0..200 {
        let z: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let p = JetPoint::new(0.0, 0.0, z.clone(), vec![], vec![]);
        let got = fam.evaluate_g(&p).map_err(|e| e.to_string())?;
        worst = worst.max((got - g(z[0], z[1], z[2])).abs());
    }
    ensure(worst <= 1e-10, format!("max |G − reference| {worst:.2e} at 200 jets"))
}

/// Worst Codazzi residual with s drawn inside the triple's interval.
fn codazzi_max(fam: &Family, trip: &ImmersionTriple, n: usize, seed: u64, margin: f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = trip.interval();
    let (lo, hi) = ((lo + margin).max(-3.0), (hi - margin).min(3.0));
    let c = trip.coord;
    let mut worst = 0f64;
    for _ in 0..n {
        let p = random_jet(&mut rng, 1.0);
        let s = lo + (hi - lo) * rng.gen_range(0.005..0.995);
        let t = rng.gen_range(-0.5..0.5);
        let (x, t) = if c.dx != 0.0 { ((s - c.dt * t) / c.dx, t) } else { (t, s / c.dt) };
        let [e1, e2] = codazzi_residuals(fam, trip, &p, x, t).unwrap();
        worst = worst.max(e1.abs()).max(e2.abs());
    }
    worst
}

fn strip_reproduction() -> Check {
    let fam = Family::preset("t22-demo").unwrap();
    let ip = ImmersionParams { beta: 1.0, c_strip: 3.0, ..Default::default() };
    let (lo, hi) = strip_bounds(&fam, &ip).map_err(|e| e.to_string())?;
    let end_err = ((2.0 * lo).exp() - (3.0 - 5f64.sqrt()) / 2.0).abs().max(((2.0 * hi).exp() - (3.0 + 5f64.sqrt()) / 2.0).abs());
    let (a, b, c) = closed_form_triple(&fam, &ip, 0.0).map_err(|e| e.to_string())?;
    let origin_err = (a - 1.0).abs().max((b + 1.0).abs()).max(c.abs());
    let trip = solve_triple(&fam, &ip).map_err(|e| e.to_string())?;
    let mut gauss = 0f64;
    for k in 1..=1000 {
        let s = lo + (hi - lo) * k as f64 / 1001.0;
        gauss = gauss.max(trip.eval(s).map_err(|e| e.to_string())?.gauss().abs());
    }
    let codazzi = codazzi_max(&fam, &trip, 500, 11, 0.0);
    ensure(
        trip.label == "Prop 4.1(i)" && end_err <= 1e-12 && origin_err <= 1e-12 && gauss <= 1e-12 && codazzi <= 1e-9,
        format!(
            "{}: endpoints {end_err:.1e}, (a,b,c)(0) {origin_err:.1e}, Gauss {gauss:.1e} at 10³ points, Codazzi {codazzi:.1e} over 500",
            trip.label
        ),
    )
}

fn ode_table(fam: &Family, h: f64) -> Result<ImmersionTriple, String> {
    solve_triple(fam, &ImmersionParams { h, ..Default::default() }).map_err(|e| e.to_string())
}

fn back_substitution(trip: &ImmersionTriple) -> f64 {
    match &trip.kind {
        TripleKind::OdeTable(t) => t.back_substitution_max(),
        _ => f64::NAN,
    }
}

fn ode_branches() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["t22-ode-demo", "t24-ode-demo"] {
        let fam = Family::preset(name).unwrap();
        let coarse = ode_table(&fam, 1e-3)?;
        let fine = ode_table(&fam, 5e-4)?;
        let TripleKind::OdeTable(t) = &coarse.kind else { return Err(format!("{name}: no table")) };
        let gauss = t.s.iter().zip(&t.b).fold(0f64, |m, (s, b)| {
            let (a, c) = t.model.ac(s, b).unwrap();
            m.max(gauss_residual(a, *b, c).abs())
        });
        let (r_coarse, r_fine) = (back_substitution(&coarse), back_substitution(&fine));
        let ratio = r_coarse / r_fine;
        let codazzi = codazzi_max(&fam, &coarse, 500, 12, 0.03);
        ok &= r_coarse <= 1e-6 && ratio_ok(ratio, 16.0) && gauss <= 1e-10 && codazzi <= 1e-7;
        lines.push(format!(
            "{} back-sub {r_coarse:.1e} (×{ratio:.1}), Gauss {gauss:.1e}, Codazzi {codazzi:.1e}",
            coarse.label
        ));
    }
    ensure(ok, lines.join("; "))
}

fn non_existence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut count = 0;
    for (preset, branch, citation) in
        [("t23-demo", "T23", "Prop 4.2"), ("t25i-demo", "T25i", "Prop 4.4"), ("t25ii-demo", "T25ii", "Prop 4.5")]
    {
        let (code, out) = pss(&["sff", "--preset", preset, "--deterministic"]);
        let report: serde_json::Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
        if code != 3 || report["result"]["citation"] != citation || !report["result"]["immersion"].is_null() {
            return Err(format!("{preset}: exit {code}, citation {}", report["result"]["citation"]));
        }
        for _ in 0..50 {
            let spec = random_spec(branch, &mut rng).map_err(|e| e.to_string())?;
            let fam = Family::build(&spec).map_err(|e| e.to_string())?;
            match solve_triple(&fam, &ImmersionParams::default()) {
                Err(ImmersionError::NoImmersion { citation: c }) if c == citation => count += 1,
                other => return Err(format!("{branch}: {other:?}")),
            }
        }
    }
    ensure(count == 150, format!("3 presets exit 3 with their citation; {count} random parameterizations, none with a triple"))
}

fn sine_gordon_end_to_end() -> Check {
    let started = Instant::now();
    let fam = Family::preset("sine-gordon").unwrap();
    let trip = solve_triple(&fam, &ImmersionParams::default()).map_err(|e| e.to_string())?;
    let field = kink_field(1.0, Grid1D::bounded(-6.0, 6.0, 16).unwrap(), vec![-6.0, 6.0]).map_err(|e| e.to_string())?;
    let mesh = integrate_frame(&fam, &trip, &field, &FrameOptions::over((-6.0, 6.0), (-6.0, 6.0), 200, 200))
        .map_err(|e| e.to_string())?;
    let (mut first, mut second) = (0f64, 0f64);
    for j in 0..mesh.nt {
        for i in 0..mesh.nx {
            let (x, t) = mesh.coords(i, j);
            let u = exact_sine_gordon_kink(1.0, x, t);
            let [e, f, g] = mesh.first[mesh.index(i, j)];
            first = first.max((e - 1.0).abs()).max((f - u.cos()).abs()).max((g - 1.0).abs());
            let [a1, a2, a3] = mesh.second[mesh.index(i, j)];
            second = second.max(a1.abs()).max((a2 + u.sin()).abs()).max(a3.abs());
        }
    }
    let interior = (mesh.nx - 2) * (mesh.nt - 2);
    let good = mesh.curvature.iter().flatten().filter(|k| (**k + 1.0).abs() <= 0.05).count();
    let share = good as f64 / interior as f64;
    let secs = started.elapsed().as_secs_f64();
    ensure(
        first <= 1e-10 && second <= 1e-10 && share >= 0.95 && mesh.drift_max <= 1e-6 && secs <= 60.0,
        format!(
            "I {first:.1e}, II {second:.1e}, {:.1}% of interior K in [−1.05, −0.95], drift {:.1e}, {secs:.2} s",
            100.0 * share,
            mesh.drift_max
        ),
    )
}

fn stencil_error(nx: usize) -> f64 {
    let g = Grid1D::periodic(0.0, 2.0 * PI, nx).unwrap();
    let row: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
    let f = SolutionField::numeric(g, vec![0.0], vec![row], Some(vec![vec![0.0; nx]]), "probe", 4).unwrap();
    (0..nx).step_by(nx / 32).fold(0f64, |m, i| m.max((sample_jet(&f, g.x(i), 0.0, 2).unwrap().z[2] + g.x(i).sin()).abs()))
}

fn kink_error(nx: usize, dt: f64) -> f64 {
    let g = Grid1D::bounded(-30.0, 30.0, nx).unwrap();
    let u0: Vec<f64> = g.nodes().iter().map(|&x| exact_sine_gordon_kink(1.0, x, 0.0)).collect();
    let f = sine_gordon_march(g, &u0, &SineGordonOptions { t0: 0.0, t_max: 1.0, dt, snapshots: 1, order: 4 }).unwrap();
    f.u[1].iter().enumerate().fold(0f64, |m, (i, u)| m.max((u - exact_sine_gordon_kink(1.0, g.x(i), 1.0)).abs()))
}

fn frame_gap(n: usize) -> f64 {
    let fam = Family::preset("sine-gordon").unwrap();
    let trip = solve_triple(&fam, &ImmersionParams::default()).unwrap();
    let field = kink_field(1.0, Grid1D::bounded(-6.0, 6.0, 16).unwrap(), vec![-6.0, 6.0]).unwrap();
    let mut o = FrameOptions::over((-2.0, 2.0), (-2.0, 2.0), n, n);
    o.sampling = Sampling::NodeLinear;
    o.substeps = 1;
    o.drift_threshold = f64::INFINITY;
    integrate_frame(&fam, &trip, &field, &o).unwrap().compat_max
}

fn convergence_orders() -> Check {
    let fam = Family::preset("t22-ode-demo").unwrap();
    let rk4 = back_substitution(&ode_table(&fam, 1e-3)?) / back_substitution(&ode_table(&fam, 5e-4)?);
    let runs = [
        ("stencil", stencil_error(256) / stencil_error(512), 16.0),
        ("kink march", kink_error(600, 0.05) / kink_error(1200, 0.025), 16.0),
        ("frame gap", frame_gap(41) / frame_gap(81), 4.0),
        ("RK4 back-sub", rk4, 16.0),
    ];
    let ok = runs.iter().all(|(_, r, want)| ratio_ok(*r, *want));
    ensure(ok, runs.iter().map(|(n, r, w)| format!("{n} ×{r:.1} (want ×{w})")).collect::<Vec<_>>().join(", "))
}

/// Forward-mode gradient and value of `f` at `x`.
fn gradient(f: &dyn Fn(&[Dual<f64>]) -> Option<Dual<f64>>, x: &[f64]) -> Option<(f64, Vec<f64>)> {
    let n = x.len();
    let args: Vec<Dual<f64>> = x.iter().enumerate().map(|(i, v)| Dual::variable(*v, i, n)).collect();
    let r = f(&args)?;
    Some((r.v, (0..n).map(|i| r.partial(i)).collect()))
}

fn central_difference(f: &dyn Fn(&[Dual<f64>]) -> Option<Dual<f64>>, x: &[f64], i: usize) -> Option<f64> {
    let h = 1e-5 * x[i].abs().max(1.0);
    let at = |d: f64| {
        let args: Vec<Dual<f64>> =
            x.iter().enumerate().map(|(k, v)| Dual::constant(if k == i { v + d } else { *v })).collect();
        f(&args).map(|r| r.v)
    };
    Some((at(h)? - at(-h)?) / (2.0 * h))
}

fn derivative_engine() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let fams: Vec<Family> = presets().iter().map(|p| Family::preset(p.name).unwrap()).collect();
    let (mut pairs, mut worst) = (0usize, 0f64);
    while pairs < 10_000 {
        let pick = rng.gen_range(0..4);
        let (f, n): (Box<dyn Fn(&[Dual<f64>]) -> Option<Dual<f64>>>, usize) = match pick {
            0..=2 => {
                let (src, vars): (&str, &[&str]) = match pick {
                    0 => (random_profile(&mut rng), &["s"]),
                    1 => (random_phi12(&mut rng), &["z0", "z1"]),
                    _ => (random_phi(&mut rng), &["z0"]),
                };
                let e = Expression::parse(src, vars).map_err(|e| e.to_string())?;
                (Box::new(move |a: &[Dual<f64>]| e.eval(a).ok()), vars.len())
            }
            _ => {
                let fam = fams[rng.gen_range(0..fams.len())].clone();
                let (row, col) = (rng.gen_range(0..3), rng.gen_range(0..2));
                (Box::new(move |a: &[Dual<f64>]| fam.forms(&[a[0].clone(), a[1].clone(), a[2].clone()]).ok().map(|m| m[row][col].clone())), 3)
            }
        };
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let Some((_, grad)) = gradient(&*f, &x) else { continue };
        for (i, d) in grad.iter().enumerate() {
            let Some(fd) = central_difference(&*f, &x, i) else { continue };
            worst = worst.max((d - fd).abs() / d.abs().max(1.0));
        }
        pairs += 1;
    }
    ensure(worst <= 1e-6, format!("max relative gap {worst:.1e} over {pairs} (expression, point) pairs"))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [&[&str]; 3] = [
        &["verify", "--preset", "novikov", "--samples", "200", "--deterministic"],
        &["sff", "--preset", "t22-ode-demo", "--deterministic"],
        &["reconstruct", "--preset", "sine-gordon", "--soliton", "--grid", "100x100", "--deterministic"],
    ];
    for args in runs {
        let mut reports = Vec::new();
        // identical argv, report path included
        let path = dir.path().join("report.json");
        let p = path.to_str().unwrap().to_string();
        let mut a: Vec<&str> = args.to_vec();
        a.extend(["--report", &p]);
        for _ in 0..2 {
            let (code, _) = pss(&a);
            if code != 0 {
                return Err(format!("{}: exit {code}", args[0]));
            }
            reports.push(std::fs::read(&path).map_err(|e| e.to_string())?);
        }
        if reports[0] != reports[1] {
            return Err(format!("{} reports differ", args[0]));
        }
    }
    ensure(true, "verify, sff and reconstruct reports byte-identical across two runs".into())
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("structure certification", structure_certification),
        ("Novikov matching", novikov_matching),
        ("strip reproduction", strip_reproduction),
        ("ODE branches", ode_branches),
        ("non-existence coverage", non_existence),
        ("sine-Gordon end-to-end", sine_gordon_end_to_end),
        ("convergence orders", convergence_orders),
        ("derivative engine", derivative_engine),
        ("determinism", determinism),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(k + 1);
                ("FAIL", d)
            }
        };
        writeln!(err, "[{tag}] {}. {name}: {detail}", k + 1).unwrap();
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
