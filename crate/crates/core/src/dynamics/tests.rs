use std::f64::consts::PI;

use num_complex::Complex64;

use super::*;
use crate::gauge::gauge_forward;
use crate::spectral::Grid;

fn bump_derivative(grid: Grid, amp: f64) -> SpectralField {
    // amp * d_x e^{-x^2/4}
    SpectralField::sample(grid, |x| -amp * 0.5 * x * (-x * x / 4.0).exp())
}

fn plane_wave(grid: Grid, k: f64) -> SpectralField {
    let samples: Vec<Complex64> = grid.xs().iter().map(|&x| Complex64::new(0.0, k * x).exp()).collect();
    SpectralField::from_physical(grid, &samples).unwrap()
}

fn slope(dts: &[f64], errs: &[f64]) -> f64 {
    let n = dts.len() as f64;
    let xs: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

#[test]
fn propagator_examples() {
    let g = Grid::new(64, PI).unwrap();
    let e = plane_wave(g, 1.0);
    assert_eq!(linear_propagator(&e, 0.0).coeffs(), e.coeffs());
    let t = 0.7;
    let expected = &e * Complex64::from_polar(1.0, -t);
    let got = linear_propagator(&e, t);
    assert!((&got - &expected).l2_norm() < 1e-12 * e.l2_norm());
}

#[test]
fn propagator_group_isometry_reversibility() {
    let g = Grid::new(128, 4.0 * PI).unwrap();
    let f = bump_derivative(g, 1.3);
    let (t1, t2) = (0.37, -1.21);
    let composed = linear_propagator(&linear_propagator(&f, t1), t2);
    let direct = linear_propagator(&f, t1 + t2);
    assert!((&composed - &direct).l2_norm() < 1e-12 * f.l2_norm());
    for s in [-1.0, 0.0, 0.5, 2.0] {
        let a = linear_propagator(&f, 3.3).sobolev_norm(s);
        assert!((a - f.sobolev_norm(s)).abs() < 1e-12 * a);
    }
    let back = linear_propagator(&linear_propagator(&f, 2.5), -2.5);
    assert!((&back - &f).l2_norm() < 1e-12 * f.l2_norm());
}

#[test]
fn zero_data_stays_zero() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    let zero = SpectralField::zeros(g);
    let traj = evolve_bo(&zero, 0.1, 0.01).unwrap();
    assert!(traj.snapshots().iter().all(|u| u.sup_coeff() == 0.0));
    let traj = evolve_gauged(&gauge_forward(&zero), 0.1, 0.01).unwrap();
    assert!(traj.snapshots().iter().all(|v| v.sup_coeff() == 0.0));
    assert_eq!(traj.tag(), FieldTag::V);
}

#[test]
fn rejects_nonzero_mean_and_bad_steps() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    let c = SpectralField::sample(g, |x| 1.0 + x.sin());
    assert!(matches!(evolve_bo(&c, 1.0, 0.1), Err(Error::InvalidArgument(_))));
    let u = bump_derivative(g, 1.0);
    assert!(evolve_bo(&u, 1.0, -0.1).is_err());
    assert!(evolve_bo(&u, 1.0, f64::NAN).is_err());
}

#[test]
fn probe_rejects_unstable_step() {
    let g = Grid::new(256, 8.0 * PI).unwrap();
    let u = bump_derivative(g, 4.0);
    match evolve_bo(&u, 1.0, 0.5) {
        Err(Error::StepTooLarge { dt, bound }) => assert!(dt > bound),
        other => panic!("expected StepTooLarge, got {other:?}"),
    }
}

#[test]
fn times_and_final_time() {
    let g = Grid::new(64, 4.0 * PI).unwrap();
    let u = bump_derivative(g, 0.5);
    let opts = EvolveOptions {
        save_every: 3,
        ..Default::default()
    };
    let traj = evolve_bo_with(&u, 0.3, 0.03, &opts).unwrap();
    let times = traj.times();
    assert_eq!(times[0], 0.0);
    assert!(times.windows(2).all(|w| w[1] > w[0]));
    assert!((traj.last().0 - 0.3).abs() < 1e-14);
    assert_eq!(traj.len(), 5);
}

#[test]
fn zero_mode_and_reality_preserved() {
    let g = Grid::new(256, 8.0 * PI).unwrap();
    let u = bump_derivative(g, 1.0);
    let traj = evolve_bo(&u, 1.0, 0.01).unwrap();
    for snap in traj.snapshots() {
        assert_eq!(snap.coeff(0), Complex64::new(0.0, 0.0));
        assert!(snap.reality_residual() <= 1e-11, "{:e}", snap.reality_residual());
    }
}

#[test]
fn bo_temporal_convergence_is_fourth_order() {
    let g = Grid::new(256, 8.0 * PI).unwrap();
    let u = bump_derivative(g, 1.5);
    let t = 1.0;
    let dt = 0.04;
    let run = |h: f64| evolve_bo(&u, t, h).unwrap().last().1.clone();
    let reference = run(dt / 8.0);
    let dts = [dt, dt / 2.0, dt / 4.0];
    let errs: Vec<f64> = dts.iter().map(|&h| (&run(h) - &reference).l2_norm()).collect();
    let p = slope(&dts, &errs);
    assert!((p - 4.0).abs() <= 0.3, "slope {p}, errors {errs:?}");
}

#[test]
fn gauged_temporal_convergence_is_fourth_order() {
    let g = Grid::new(256, 8.0 * PI).unwrap();
    let st = gauge_forward(&bump_derivative(g, 1.0));
    let t = 0.5;
    let dt = 0.02;
    let run = |h: f64| evolve_gauged(&st, t, h).unwrap().last().1.clone();
    let reference = run(dt / 8.0);
    let dts = [dt, dt / 2.0, dt / 4.0];
    let errs: Vec<f64> = dts.iter().map(|&h| (&run(h) - &reference).l2_norm()).collect();
    let p = slope(&dts, &errs);
    assert!((p - 4.0).abs() <= 0.3, "slope {p}, errors {errs:?}");
}

#[test]
fn gauged_matches_gauge_of_bo_solution() {
    let g = Grid::new(256, 8.0 * PI).unwrap();
    let u0 = bump_derivative(g, 1.0);
    let (t, dt) = (0.5, 0.005);
    let u = evolve_bo(&u0, t, dt).unwrap();
    let v = evolve_gauged(&gauge_forward(&u0), t, dt).unwrap();
    let diff = v.last().1 - &gauge_forward(u.last().1).v;
    let rel = diff.sobolev_norm(1.5) / v.last().1.sobolev_norm(1.5);
    assert!(diff.sobolev_norm(1.5) <= 1e-6, "abs {:e} rel {rel:e}", diff.sobolev_norm(1.5));
}

#[test]
fn weighted_norm_examples() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    assert_eq!(weighted_norm_diagnostic(&SpectralField::zeros(g), 0.3), 0.0);

    // single mode: one nonzero profile entry c at lattice index i
    let k = 5;
    let e = plane_wave(g, 0.5 * k as f64);
    let c = e.coeff(k);
    let i = g.index_of(k).unwrap();
    let h = g.dxi();
    let mut stencil = vec![Complex64::new(0.0, 0.0); g.n_points()];
    stencil[i - 1] = c / (2.0 * h);
    stencil[i + 1] = -c / (2.0 * h);
    let oracle = (stencil.iter().map(|z| z.norm_sqr()).sum::<f64>() * g.spectral_weight()).sqrt();
    let got = weighted_norm_diagnostic(&e, 0.0);
    assert!((got - oracle).abs() < 1e-12 * oracle);
}

#[test]
fn weighted_norm_bounded_along_flow() {
    let g = Grid::new(512, 16.0 * PI).unwrap();
    let traj = evolve_bo(&bump_derivative(g, 1.0), 0.5, 0.01).unwrap();
    let w0 = weighted_norm_diagnostic(&traj.snapshots()[0], 0.0);
    for (t, u) in traj.times().iter().zip(traj.snapshots()) {
        let w = weighted_norm_diagnostic(u, *t);
        assert!(w <= 2.0 * w0, "t = {t}: {w} vs {w0}");
    }
}

#[test]
fn export_and_load_round_trip() {
    let g = Grid::new(32, 2.0 * PI).unwrap();
    let traj = evolve_bo(&bump_derivative(g, 0.3).zero_mean(), 0.05, 0.01).unwrap();
    let dir = tempfile::tempdir().unwrap();
    traj.export(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    for key in ["times", "dt", "scheme", "grid", "tag"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    let back = Trajectory::load(dir.path()).unwrap();
    assert_eq!(back.times(), traj.times());
    for (a, b) in back.snapshots().iter().zip(traj.snapshots()) {
        assert_eq!(a.coeffs(), b.coeffs());
    }
}
