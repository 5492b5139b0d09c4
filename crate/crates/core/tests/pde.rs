use std::f64::consts::PI;

use proptest::prelude::*;
use pss_core::family::Family;
use pss_core::pde::*;
use pss_core::verify::structure_residuals_recorded;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ring(nx: usize) -> Grid1D {
    Grid1D::periodic(0.0, 2.0 * PI, nx).unwrap()
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn grid_rules() {
    assert!(Grid1D::periodic(0.0, 1.0, 15).is_err());
    assert!(Grid1D::periodic(1.0, 1.0, 32).is_err());
    let g = Grid1D::periodic(0.0, 1.0, 16).unwrap();
    assert_eq!(g.len(), 16);
    assert_eq!(g.node_index(1.0), Some(0));
    assert_eq!(g.node_index(0.03), None);
    let b = Grid1D::bounded(0.0, 1.0, 16).unwrap();
    assert_eq!(b.len(), 17);
    assert_eq!(b.node_index(1.0), Some(16));
}

#[test]
fn helmholtz_fourier_mode_and_constant() {
    let g = ring(64);
    for k in [1.0, 3.0, 7.0] {
        let rhs: Vec<f64> = g.nodes().iter().map(|x| (k * x).sin()).collect();
        let u = helmholtz_invert(&g, &rhs, HelmholtzMethod::Spectral);
        let err = max_abs(g.nodes().iter().zip(&u).map(|(x, v)| v - (k * x).sin() / (1.0 + k * k)));
        assert!(err < 1e-14, "k = {k}: {err}");
    }
    for method in [HelmholtzMethod::Spectral, HelmholtzMethod::Stencil(2), HelmholtzMethod::Stencil(4)] {
        let u = helmholtz_invert(&g, &vec![2.5; 64], method);
        assert!(max_abs(u.iter().map(|v| v - 2.5)) < 1e-13);
    }
}

#[test]
fn helmholtz_roundtrip() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let g = ring(128);
    for method in [HelmholtzMethod::Spectral, HelmholtzMethod::Stencil(2), HelmholtzMethod::Stencil(4)] {
        let u: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let back = helmholtz_invert(&g, &helmholtz_apply(&g, &u, method), method);
        let err = max_abs(u.iter().zip(&back).map(|(a, b)| a - b));
        assert!(err < 1e-10, "{method:?}: {err}");
    }
}

proptest! {
    #[test]
    fn helmholtz_inverse_is_symmetric_positive(seed in any::<u64>(), stencil in prop::bool::ANY) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = ring(32);
        let method = if stencil { HelmholtzMethod::Stencil(4) } else { HelmholtzMethod::Spectral };
        let u: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..32).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let hu = helmholtz_invert(&g, &u, method);
        let hv = helmholtz_invert(&g, &v, method);
        prop_assert!((dot(&hu, &v) - dot(&u, &hv)).abs() < 1e-12);
        prop_assert!(dot(&hu, &u) > 0.0);
    }
}

#[test]
fn zero_data_stays_zero() {
    let fam = Family::preset("novikov").unwrap();
    let g = ring(64);
    let f = solve_mol(&fam, g, &[0.0; 64], &MolOptions::default()).unwrap();
    assert_eq!(f.times.len(), 11);
    assert!(f.u.iter().all(|row| row.iter().all(|&v| v == 0.0)));
}

#[test]
fn novikov_energy_is_conserved() {
    let fam = Family::preset("novikov").unwrap();
    let mut drifts = Vec::new();
    for nx in [128, 256] {
        let g = ring(nx);
        let u0: Vec<f64> = g.nodes().iter().map(|x| 0.1 + 0.05 * x.cos()).collect();
        let f = solve_mol(&fam, g, &u0, &MolOptions { dt: 0.01, ..Default::default() }).unwrap();
        let e0 = h1_energy(&g, &f.u[0], 4);
        drifts.push(max_abs(f.u.iter().map(|r| (h1_energy(&g, r, 4) - e0) / e0)));
    }
    assert!(drifts[1] < 1e-6, "{drifts:?}");
    assert!(drifts[1] < drifts[0], "{drifts:?}");
}

#[test]
fn cfl_and_blowup_are_reported() {
    let fam = Family::preset("novikov").unwrap();
    let g = ring(64);
    let u0 = vec![3.0; 64];
    assert!(matches!(
        solve_mol(&fam, g, &u0, &MolOptions { dt: 0.5, ..Default::default() }),
        Err(FieldError::Cfl { .. })
    ));
    let sg = Family::preset("sine-gordon").unwrap();
    assert!(solve_mol(&sg, g, &u0, &MolOptions::default()).is_err());
    // u_t − u_xxt = u_xx + u_x grows no faster than e^t, so a huge start trips the cap
    let t22 = Family::preset("t22-demo").unwrap();
    let big: Vec<f64> = g.nodes().iter().map(|x| 9e5 + 2e5 * x.sin()).collect();
    let r = solve_mol(&t22, g, &big, &MolOptions { t_max: 2.0, ..Default::default() });
    assert!(matches!(r, Err(FieldError::BlowUp { .. })), "{r:?}");
}

#[test]
fn on_shell_bridge_converges() {
    let fam = Family::preset("novikov").unwrap();
    let mut worst = Vec::new();
    for nx in [64, 128] {
        let g = ring(nx);
        let u0: Vec<f64> = g.nodes().iter().map(|x| 0.1 + 0.05 * x.cos()).collect();
        let f = solve_mol(&fam, g, &u0, &MolOptions { t_max: 0.5, dt: 0.01, snapshots: 5, ..Default::default() }).unwrap();
        let mut m = 0.0f64;
        for &t in &f.times {
            for i in (0..nx).step_by(nx / 16) {
                let p = sample_jet(&f, g.x(i), t, 3).unwrap();
                m = m.max(max_abs(structure_residuals_recorded(&fam, &p).unwrap()));
            }
        }
        worst.push(m);
    }
    let ratio = worst[0] / worst[1];
    assert!(worst[1] < 1e-8 && ratio > 12.0, "{worst:?}");
}

#[test]
fn kink_values_and_limits() {
    assert!((exact_sine_gordon_kink(1.0, 0.0, 0.0) - PI).abs() < 1e-15);
    assert!(exact_sine_gordon_kink(1.0, -20.0, 0.0) < 1e-8);
    assert!((exact_sine_gordon_kink(1.0, 20.0, 0.0) - 2.0 * PI).abs() < 1e-8);
    assert!(exact_sine_gordon_kink(2.0, 0.0, -40.0) < 1e-8);
}

#[test]
fn kink_solves_sine_gordon() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let eta: f64 = rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (x, t) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let g = Grid1D::bounded(-6.0, 6.0, 16).unwrap();
        let f = kink_field(eta, g, vec![-6.0, 6.0]).unwrap();
        let p = sample_jet(&f, x, t, 2).unwrap();
        assert!((p.z[0] - exact_sine_gordon_kink(eta, x, t)).abs() < 1e-13);
        assert!((p.v[0] - p.z[0].sin()).abs() < 1e-12, "residual at ({x}, {t})");
    }
}

#[test]
fn exact_jets() {
    let g = Grid1D::bounded(-2.0, 2.0, 16).unwrap();
    let f = SolutionField::exact("x^3", g, vec![0.0, 1.0]).unwrap();
    let p = sample_jet(&f, 0.7, 0.5, 6).unwrap();
    assert_eq!(p.z[3], 6.0);
    assert_eq!(p.z[4], 0.0);
    assert_eq!(p.z[6], 0.0);
    let c = SolutionField::exact("4.5", g, vec![0.0, 1.0]).unwrap();
    let p = sample_jet(&c, 0.1, 0.2, 3).unwrap();
    assert!(p.z[1..].iter().all(|&v| v == 0.0));
    assert_eq!(p.w[0], 0.0);
    assert!(matches!(sample_jet(&c, 3.0, 0.2, 3), Err(FieldError::OutOfDomain { .. })));
}

#[test]
fn numeric_constant_field() {
    let g = ring(32);
    let f = SolutionField::numeric(g, vec![0.0, 0.1, 0.2], vec![vec![1.5; 32]; 3], None, "test", 4).unwrap();
    let p = sample_jet(&f, g.x(3), 0.1, 5).unwrap();
    // roundoff grows like eps/dx^k
    assert!(p.z[1..].iter().all(|v| v.abs() < 1e-9));
    assert!(p.w[0].abs() < 1e-12);
    assert!(matches!(sample_jet(&f, g.x(3), 0.1, 6), Err(FieldError::OrderTooHigh { .. })));
    assert!(matches!(sample_jet(&f, 0.05, 0.1, 2), Err(FieldError::OffGrid { .. })));
    assert!(matches!(sample_jet(&f, g.x(3), 0.15, 2), Err(FieldError::OffGrid { .. })));
}

/// Worst |z_2 + sin x| of a sampled sin x field.
fn stencil_error(nx: usize, order: usize) -> f64 {
    let g = ring(nx);
    let row: Vec<f64> = g.nodes().iter().map(|x| x.sin()).collect();
    let f = SolutionField::numeric(g, vec![0.0], vec![row], Some(vec![vec![0.0; nx]]), "test", order).unwrap();
    max_abs((0..nx).step_by(nx / 32).map(|i| sample_jet(&f, g.x(i), 0.0, 2).unwrap().z[2] + g.x(i).sin()))
}

#[test]
fn stencil_orders() {
    let r4 = stencil_error(256, 4) / stencil_error(512, 4);
    let r2 = stencil_error(256, 2) / stencil_error(512, 2);
    assert!((r4 / 16.0 - 1.0).abs() < 0.25, "{r4}");
    assert!((r2 / 4.0 - 1.0).abs() < 0.25, "{r2}");
}

#[test]
fn time_stencil_without_stored_rates() {
    let g = ring(64);
    let times: Vec<f64> = (0..6).map(|k| 0.1 * k as f64).collect();
    let rows = times.iter().map(|&t| g.nodes().iter().map(|x| (x - t).sin()).collect()).collect();
    let f = SolutionField::numeric(g, times, rows, None, "test", 4).unwrap();
    let p = sample_jet(&f, g.x(5), 0.0, 1).unwrap();
    assert!((p.w[0] + g.x(5).cos()).abs() < 1e-4);
    assert!((p.v[0] - g.x(5).sin()).abs() < 1e-3);
}

fn kink_march_error(nx: usize, dt: f64, order: usize) -> f64 {
    let g = Grid1D::bounded(-30.0, 30.0, nx).unwrap();
    let u0: Vec<f64> = g.nodes().iter().map(|&x| exact_sine_gordon_kink(1.0, x, 0.0)).collect();
    let f = sine_gordon_march(g, &u0, &SineGordonOptions { t0: 0.0, t_max: 1.0, dt, snapshots: 1, order }).unwrap();
    max_abs(f.u[1].iter().enumerate().map(|(i, u)| u - exact_sine_gordon_kink(1.0, g.x(i), 1.0)))
}

#[test]
fn sine_gordon_march_orders() {
    let r4 = kink_march_error(600, 0.05, 4) / kink_march_error(1200, 0.025, 4);
    let r2 = kink_march_error(600, 0.05, 2) / kink_march_error(1200, 0.025, 2);
    assert!((r4 / 16.0 - 1.0).abs() < 0.25, "{r4}");
    assert!((r2 / 4.0 - 1.0).abs() < 0.25, "{r2}");
}

#[test]
fn pssf_roundtrip_and_csv() {
    let g = Grid1D::bounded(-30.0, 30.0, 60).unwrap();
    let u0: Vec<f64> = g.nodes().iter().map(|&x| exact_sine_gordon_kink(1.0, x, 0.0)).collect();
    let f = sine_gordon_march(g, &u0, &SineGordonOptions { snapshots: 3, ..Default::default() }).unwrap();
    let mut bytes = Vec::new();
    write_pssf(&f, &mut bytes).unwrap();
    assert_eq!(&bytes[..4], b"PSSF");
    let back = read_pssf(bytes.as_slice()).unwrap();
    assert_eq!(back.grid, f.grid);
    assert_eq!(back.times, f.times);
    assert_eq!(back.u, f.u);
    assert_eq!(back.ut, f.ut);
    assert!(read_pssf(&bytes[..bytes.len() - 3]).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(read_pssf(bad.as_slice()).is_err());
    let csv = field_to_csv(&f);
    assert!(csv.starts_with("t,x,u\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 61);
}
