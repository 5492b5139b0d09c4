use pss_core::family::{random_spec, Family, FamilySpec, ImmersionCase, ReducedCoord};
use pss_core::immersion::{
    closed_form_triple, codazzi_residuals, gauss_residual, solve_triple, strip_bounds, ImmersionError,
    ImmersionParams, ImmersionTriple, OdeModel, Representation, TripleKind,
};
use pss_core::jet::JetPoint;
use pss_core::verify::random_jet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn strip_params(beta: f64, c_strip: f64) -> ImmersionParams {
    ImmersionParams { beta, c_strip, ..Default::default() }
}

fn t22(mu2: f64, eta2: f64, sign: i32) -> Family {
    let spec = FamilySpec::new("T22").set("mu2", mu2).set("eta2", eta2).with_f("s").with_phi12("z1").with_sign(sign);
    Family::build(&spec).unwrap()
}

#[test]
fn gauss_residual_examples() {
    assert_eq!(gauss_residual(0.0, 1.0, 0.0), 0.0);
    assert_eq!(gauss_residual(1.0, -1.0, 0.0), 0.0);
    assert_eq!(gauss_residual(2.0, 1.0, 1.0), 2.0);
}

#[test]
fn lambda_free_strip_point_values() {
    let fam = Family::preset("t22-demo").unwrap();
    let ip = strip_params(1.0, 3.0);
    let (lo, hi) = strip_bounds(&fam, &ip).unwrap();
    // endpoints are roots of β²y² − Cy + 1 in y = e^{2x}
    assert!(((2.0 * lo).exp() - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!(((2.0 * hi).exp() - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
    assert!((lo - 0.5 * 0.381_966_011_250_105_1f64.ln()).abs() < 1e-12);
    let (a, b, c) = closed_form_triple(&fam, &ip, 0.0).unwrap();
    assert!((a - 1.0).abs() < 1e-15 && (b + 1.0).abs() < 1e-15 && c.abs() < 1e-15);
    let trip = solve_triple(&fam, &ip).unwrap();
    assert_eq!(trip.representation(), Representation::ClosedForm);
    assert_eq!(trip.label, "Prop 4.1(i)");
    let v = trip.eval(0.0).unwrap();
    assert!((v.da - 1.0).abs() < 1e-15);
    // reduced Codazzi equations with μ2 = 0, η2 = 1
    assert!((-v.da + (v.a - v.c)).abs() < 1e-15);
    assert!((-v.db + 2.0 * v.b).abs() < 1e-15);
}

#[test]
fn strip_constraints_and_one_sided_strip() {
    let fam = Family::preset("t22-demo").unwrap();
    assert!(matches!(solve_triple(&fam, &strip_params(1.0, 1.0)), Err(ImmersionError::InvalidStrip { .. })));
    assert!(matches!(solve_triple(&fam, &strip_params(0.0, -1.0)), Err(ImmersionError::InvalidStrip { .. })));
    let (lo, hi) = strip_bounds(&fam, &strip_params(0.0, 2.0)).unwrap();
    assert!((lo + 0.5 * 2f64.ln()).abs() < 1e-15);
    assert_eq!(hi, f64::INFINITY);
    assert!(matches!(
        closed_form_triple(&fam, &strip_params(0.0, 2.0), -1.0),
        Err(ImmersionError::OutsideStrip { .. })
    ));
}

#[test]
fn t24_time_strip_with_zero_beta() {
    let fam = Family::preset("t24-strip-demo").unwrap();
    let ip = ImmersionParams { beta: 0.0, sigma: 2.0, ..Default::default() };
    let trip = solve_triple(&fam, &ip).unwrap();
    assert_eq!(trip.label, "Prop 4.3(i)");
    assert_eq!(trip.coord, ReducedCoord { dx: 0.0, dt: 1.0 });
    let cc = 1.0;
    for t in [0.0, 0.3, 1.2] {
        let v = trip.at(5.0, t).unwrap();
        let a = (2.0 * (2.0 * cc * t).exp() - 1.0).sqrt();
        let da = 2.0 * cc * (2.0 * cc * t).exp() / a;
        assert_eq!(v.b, 0.0);
        assert!((v.a - a).abs() < 1e-13);
        assert!((v.c - (a - da / cc)).abs() < 1e-13);
    }
}

#[test]
fn novikov_triple_is_a_function_of_x() {
    let fam = Family::preset("novikov").unwrap();
    let trip = solve_triple(&fam, &ImmersionParams::default()).unwrap();
    assert_eq!(trip.label, "Prop 4.3(ii)");
    assert_eq!(trip.coord, ReducedCoord { dx: 1.0, dt: 0.0 });
    assert_eq!(trip.at(0.1, 0.0).unwrap(), trip.at(0.1, 7.0).unwrap());
}

#[test]
fn gauss_holds_across_the_strip() {
    let fam = Family::preset("t22-demo").unwrap();
    let trip = solve_triple(&fam, &strip_params(1.0, 3.0)).unwrap();
    for s in trip.sample_points(1000, 0.99, 1.0) {
        let v = trip.eval(s).unwrap();
        assert!(v.gauss().abs() <= 1e-12, "{s}: {}", v.gauss());
        assert!(v.a * v.c != 0.0 || s == 0.0);
    }
}

#[test]
fn a_times_c_is_nonzero_inside_strip() {
    let fam = Family::preset("novikov").unwrap();
    let trip = solve_triple(&fam, &ImmersionParams { beta: 0.5, sigma: 2.5, ..Default::default() }).unwrap();
    for s in trip.sample_points(400, 0.98, 1.0) {
        let v = trip.eval(s).unwrap();
        assert!((v.a * v.c).abs() > 0.0, "{s}");
    }
}

fn strip_codazzi_max(fam: &Family, trip: &ImmersionTriple, n: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = trip.interval();
    if let TripleKind::OdeTable(t) = &trip.kind {
        // b has a square-root profile where Δ → 0; keep clear of a halted end
        lo += if t.stop_below.is_some() { 0.03 } else { 0.0 };
        hi -= if t.stop_above.is_some() { 0.03 } else { 0.0 };
    }
    let (lo, hi) = (lo.max(-3.0), hi.min(3.0));
    let mut worst = 0f64;
    for _ in 0..n {
        let p = random_jet(&mut rng, 1.0);
        let s = lo + (hi - lo) * rng.gen_range(0.005..0.995);
        // pick (x, t) with coord.at(x, t) = s
        let c = trip.coord;
        let t = rng.gen_range(-1.0..1.0);
        let x = if c.dx != 0.0 { (s - c.dt * t) / c.dx } else { rng.gen_range(-1.0..1.0) };
        let t = if c.dx != 0.0 { t } else { s / c.dt };
        let [e1, e2] = codazzi_residuals(fam, trip, &p, x, t).unwrap();
        worst = worst.max(e1.abs()).max(e2.abs());
    }
    worst
}

#[test]
fn lambda_free_strip_satisfies_codazzi() {
    let fam = Family::preset("t22-demo").unwrap();
    let trip = solve_triple(&fam, &strip_params(1.0, 3.0)).unwrap();
    assert!(strip_codazzi_max(&fam, &trip, 500, 1) <= 1e-9);
}

#[test]
fn constant_triple_without_gauss_has_zero_codazzi_terms() {
    // a = c, b = 0 constant: every term of E1 and E2 vanishes
    let fam = Family::preset("t22-demo").unwrap();
    let p = JetPoint::new(0.0, 0.0, vec![0.3, 0.2, 0.1], vec![0.5], vec![0.1]);
    let f = fam.forms_at(&p).unwrap();
    let d13 = pss_core::family::delta_of(&f, 1, 3);
    let d23 = pss_core::family::delta_of(&f, 2, 3);
    let (a, b, c) = (0.7, 0.0, 0.7);
    assert_eq!(-2.0 * b * d13 + (a - c) * d23, 0.0);
    assert_eq!((a - c) * d13 + 2.0 * b * d23, 0.0);
}

#[test]
fn random_strip_and_ode_families_satisfy_codazzi() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut seen = std::collections::BTreeSet::new();
    for k in 0..80 {
        let name = if k % 2 == 0 { "T22" } else { "T24" };
        let spec = random_spec(name, &mut rng).unwrap();
        let fam = Family::build(&spec).unwrap();
        let a_sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut ip = ImmersionParams { beta: rng.gen_range(-1.0..1.0), a_sign, span: 0.2, ..Default::default() };
        if let ImmersionCase::Ode { kappa, sigma, mu2, .. } = fam.immersion_case() {
            let model = OdeModel { kappa, sigma, mu2, beta: ip.beta, eps: a_sign };
            match admissible_b0(&model) {
                Some(b0) => ip.b0 = b0,
                None => continue,
            }
        }
        let trip = match solve_triple(&fam, &ip) {
            Ok(t) => t,
            Err(e) => panic!("{}: {e}", spec.to_json()),
        };
        seen.insert(trip.label.clone());
        let worst = strip_codazzi_max(&fam, &trip, 40, k);
        let tol = if trip.representation() == Representation::OdeTable { 1e-7 } else { 1e-9 };
        assert!(worst <= tol, "{} {}: {worst}", trip.label, spec.to_json());
        for s in trip.sample_points(50, 0.99, 1.0) {
            let v = trip.eval(s).unwrap();
            assert!(v.gauss().abs() < 1e-10 * v.b.abs().max(1.0).powi(2), "{} {s}: {v:?}", trip.label);
        }
    }
    assert_eq!(seen.len(), 5, "{seen:?}");
}

/// A b0 in (−1, 1) well inside Δ > 0 with a healthy denominator at s0 = 0.
fn admissible_b0(m: &OdeModel) -> Option<f64> {
    (-19..=19)
        .map(|k| k as f64 * 0.05)
        .filter(|b| m.pq(0.0, *b).map(|(p, _)| p.abs() > 0.1).unwrap_or(false))
        .max_by(|a, b| {
            let da = m.phi_delta(&0.0, a).1;
            let db = m.phi_delta(&0.0, b).1;
            da.partial_cmp(&db).unwrap()
        })
}

#[test]
fn ode_branches_back_substitute_at_fourth_order() {
    for (name, label) in [("t22-ode-demo", "Prop 4.1(ii)"), ("t24-ode-demo", "Prop 4.3(iii)")] {
        let fam = Family::preset(name).unwrap();
        let run = |h: f64| {
            let trip = solve_triple(&fam, &ImmersionParams { h, ..Default::default() }).unwrap();
            assert_eq!(trip.label, label);
            let TripleKind::OdeTable(t) = &trip.kind else { panic!("{name}: expected a table") };
            assert!(t.stop_below.is_none() && t.stop_above.is_none(), "{name}");
            let worst_scaled = t.back_substitution().iter().fold(0f64, |m, r| m.max(r.residual.abs() / r.scale));
            assert!(worst_scaled <= 1e-6, "{name}: {worst_scaled}");
            for (s, b) in t.s.iter().zip(&t.b) {
                let (a, c) = t.model.ac(s, b).unwrap();
                assert!(gauss_residual(a, *b, c).abs() <= 1e-10);
            }
            let worst = t.back_substitution_max();
            (trip, worst)
        };
        let (trip, coarse) = run(1e-3);
        let (_, fine) = run(5e-4);
        let ratio = coarse / fine;
        assert!((12.0..=20.0).contains(&ratio), "{name}: ratio {ratio}");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (lo, hi) = trip.interval();
        for _ in 0..300 {
            let p = random_jet(&mut rng, 1.0);
            let s = rng.gen_range(lo..hi);
            let t = rng.gen_range(-0.2..0.2);
            let x = (s - trip.coord.dt * t) / trip.coord.dx;
            let [e1, e2] = codazzi_residuals(&fam, &trip, &p, x, t).unwrap();
            assert!(e1.abs() <= 1e-7 && e2.abs() <= 1e-7, "{name}: {e1} {e2}");
        }
    }
}

#[test]
fn ode_start_must_be_admissible() {
    let fam = Family::preset("t22-ode-demo").unwrap();
    // Δ(0, 0) = (β/μ2)² − 4 = 0 for β = 1, μ2 = 0.5
    let ip = ImmersionParams { b0: 0.0, ..Default::default() };
    assert!(matches!(solve_triple(&fam, &ip), Err(ImmersionError::DiscriminantCollapse { s }) if s == 0.0));
    let ip = ImmersionParams { h: 0.0, ..Default::default() };
    assert!(matches!(solve_triple(&fam, &ip), Err(ImmersionError::BadParams(_))));
}

#[test]
fn ode_march_halts_and_reports_where() {
    let fam = t22(0.5, 8.0, 1);
    let ip = ImmersionParams { span: 0.1, ..Default::default() };
    let trip = solve_triple(&fam, &ip).unwrap();
    let TripleKind::OdeTable(t) = &trip.kind else { panic!() };
    let stop = t.stop_below.expect("march runs into Δ = 0 below s0");
    assert_eq!(stop.s, t.interval().0);
    assert!(matches!(trip.eval(stop.s - 0.01), Err(ImmersionError::OutsideStrip { .. })));
}

#[test]
fn non_existence_branches_never_emit_a_triple() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for (preset, branch, citation) in
        [("t23-demo", "T23", "Prop 4.2"), ("t25i-demo", "T25i", "Prop 4.4"), ("t25ii-demo", "T25ii", "Prop 4.5")]
    {
        let mut fams = vec![Family::preset(preset).unwrap()];
        for _ in 0..50 {
            fams.push(Family::build(&random_spec(branch, &mut rng).unwrap()).unwrap());
        }
        for fam in fams {
            match solve_triple(&fam, &ImmersionParams::default()) {
                Err(ImmersionError::NoImmersion { citation: c }) => assert_eq!(c, citation),
                other => panic!("{branch}: {other:?}"),
            }
        }
    }
}

#[test]
fn sine_gordon_triple_is_solution_dependent() {
    let fam = Family::preset("sine-gordon").unwrap();
    for a_sign in [1.0, -1.0] {
        let trip = solve_triple(&fam, &ImmersionParams { a_sign, ..Default::default() }).unwrap();
        assert_eq!(trip.representation(), Representation::SolutionDependent);
        assert!(matches!(trip.eval(0.0), Err(ImmersionError::NeedsJet)));
        assert!(matches!(trip.eval_u(0.0), Err(ImmersionError::Pole { .. })));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = random_jet(&mut rng, 1.0);
            if p.z[0].sin().abs() < 1e-2 {
                continue;
            }
            let v = trip.eval_u(p.z[0]).unwrap();
            assert!(v.gauss().abs() < 1e-12);
            let [e1, e2] = codazzi_residuals(&fam, &trip, &p, 0.0, 0.0).unwrap();
            assert!(e1.abs() < 1e-9 && e2.abs() < 1e-9, "{e1} {e2}");
        }
    }
}

#[test]
fn flipping_sign_mirrors_the_strip() {
    let ip = strip_params(0.7, 2.5);
    let up = solve_triple(&t22(0.0, 1.3, 1), &ip).unwrap();
    let down = solve_triple(&t22(0.0, 1.3, -1), &ip).unwrap();
    let (lo, hi) = up.interval();
    let (dlo, dhi) = down.interval();
    assert!((lo + dhi).abs() < 1e-12 && (hi + dlo).abs() < 1e-12);
    for s in up.sample_points(100, 0.95, 1.0) {
        let (a, b) = (up.eval(s).unwrap(), down.eval(-s).unwrap());
        assert!((a.a - b.a).abs() < 1e-12 && (a.b - b.b).abs() < 1e-12 && (a.c - b.c).abs() < 1e-12);
    }
}

#[test]
fn csv_export_headers() {
    let strip = solve_triple(&Family::preset("t22-demo").unwrap(), &strip_params(1.0, 3.0)).unwrap();
    let csv = strip.to_csv(&strip.export_points(5, 1.0)).unwrap();
    assert!(csv.starts_with("s,a,b,c,gauss_residual\n"));
    assert_eq!(csv.lines().count(), 6);
    let ode = solve_triple(&Family::preset("t22-ode-demo").unwrap(), &ImmersionParams::default()).unwrap();
    let csv = ode.to_csv(&ode.export_points(0, 1.0)).unwrap();
    assert!(csv.starts_with("s,a,b,c,gauss_residual,bprime\n"));
    assert_eq!(csv.lines().count(), 1002);
}
