use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lattice::enumerate;
use super::operators::{dyadic_shell, lattice_total};
use super::params::{bound_exponent, pure_arity};
use super::term::{cubic_term, quad_plain_term};
use super::*;
use crate::gauge::{rhs_cubic, rhs_quadratic, GaugeState, Sign};
use crate::spectral::{omega, Grid, Region, SpectralField};

fn random_modes(grid: Grid, seed: u64, active: usize, amp: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = grid.n_points() as i64 / 2;
    let mut c = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    let mut placed = 0;
    while placed < active {
        let k = rng.gen_range(-half + 1..half);
        let i = grid.index_of(k).unwrap();
        if c[i] == Complex64::new(0.0, 0.0) {
            c[i] = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5) * amp;
            placed += 1;
        }
    }
    SpectralField::from_coeffs(grid, c).unwrap()
}

fn rel(a: &SpectralField, b: &SpectralField) -> f64 {
    (a - b).l2_norm() / b.l2_norm().max(1e-300)
}

#[test]
fn omega_examples() {
    assert_eq!(omega(2.0), 4.0);
    assert_eq!(omega(-3.0), -9.0);
    assert_eq!(omega(0.0), 0.0);
}

#[test]
fn phase_examples() {
    let q = quad_plain_term(Region::PlusHi);
    let psi = phase(&q, 2.0, &[5.0, -3.0]).unwrap();
    assert_eq!(psi, -12.0);
    assert_eq!(psi, 2.0 * 2.0 * -3.0);
    assert_eq!(quadratic_phase_formula(2.0, 5.0, -3.0), -12.0);

    assert_eq!(cubic_phase_formula(2.0, 4.0, -3.0, 1.0), -22.0);
    // native frequencies: the conjugated slot at 3 contributes -3
    let c = cubic_term(Region::PlusHi);
    let phi = phase(&c, 2.0, &[4.0, 3.0, 1.0]).unwrap();
    assert_eq!(phi, cubic_phase_formula(2.0, 4.0, 3.0, 1.0));
    assert_eq!(phi, -4.0);
    assert!(phase(&c, 2.0, &[4.0, -3.0, 1.0]).is_err());
    assert!(phase(&c, 2.0, &[4.0, 3.0]).is_err());
    assert_eq!(phase(&c, 0.0, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
}

#[test]
fn quadratic_phase_is_two_xi_xi2_on_lattice() {
    let g = Grid::new(128, 4.0 * PI).unwrap();
    let q = quad_plain_term(Region::PlusHi);
    let all: Vec<usize> = (1..g.n_points()).collect();
    let mut visited = 0;
    enumerate(&super::lattice::Composition::single(q), &g, &[all.clone(), all], |t| {
        let xi = g.xi(t.out);
        let xi2 = g.xi(t.leaves[1]);
        let xi1 = g.xi(t.leaves[0]);
        assert!(xi1 > xi && xi > 1.0 && xi2 < 0.0);
        assert!((t.phases[0] - 2.0 * xi * xi2).abs() <= 1e-9 * (1.0 + t.phases[0].abs()));
        visited += 1;
    });
    assert!(visited > 1000);
}

#[test]
fn params_examples() {
    let p = infr_params(0.5, 0.0).unwrap();
    assert_eq!(p.gamma_quad, 0.0);
    assert_eq!(p.gamma_cubic, 0.0);
    assert_eq!(p.beta, 0.5);
    assert!((p.sigma - 0.75).abs() < 1e-15);
    assert!((p.theta - 0.25).abs() < 1e-15);
    assert!((p.delta - 0.25).abs() < 1e-15);
    assert!((p.c(1) - 256.0).abs() < 1e-9);
    assert!(p.all_terms_satisfied());

    let p = infr_params(0.5, 0.4).unwrap();
    assert!((p.gamma_quad - 0.4).abs() < 1e-15);
    assert!((p.gamma_cubic - 0.2).abs() < 1e-15);
    assert!((p.gamma - 0.4).abs() < 1e-15);
    assert!(!p.terms[0].satisfied());
    let cubic = &p.terms[1];
    assert!((cubic.sigma.unwrap() - 0.75).abs() < 1e-12);
    assert!((cubic.theta.unwrap() - 0.05).abs() < 1e-12);
    assert!((p.theta - 0.05).abs() < 1e-12);

    assert!(infr_params(0.5, 0.5).is_err());
    assert!(infr_params(1.0, 0.75).is_err());
    assert!(infr_params(1.0, 0.7).is_ok());
    assert!(infr_params(0.5, -0.1).is_err());
    assert!(infr_params(0.0, 0.0).is_err());
    // cubic alone fails too: gamma_cubic = max(1/4 + (eps-s)/2, eps - 1/2) with s small
    assert!(infr_params(0.05, 0.04).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn params_invariants(s in 0.05f64..3.0, frac in 0.0f64..0.999) {
        let eps = frac * s.min(0.75);
        if let Ok(p) = infr_params(s, eps) {
            prop_assert!(p.theta > 0.0);
            prop_assert!(p.sigma > p.gamma_quad.min(p.gamma_cubic) + p.beta);
            prop_assert!(p.delta > 0.0 && p.delta < p.theta / p.beta);
            for t in p.terms.iter().filter(|t| t.satisfied()) {
                let th = t.theta.unwrap();
                prop_assert!((th - (1.0 - (t.gamma + p.beta).max(t.sigma.unwrap() + t.gamma))).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sigma_zero_matches_gauge_rhs() {
    let g = Grid::new(128, 4.0 * PI).unwrap();
    for seed in 0..3 {
        let v = random_modes(g, seed, 64, 0.05);
        let st = GaugeState::from_gauge(v.clone()).unwrap();
        let checks = [
            ("Q+", rhs_quadratic(&st, Sign::Plus)),
            ("Q-", rhs_quadratic(&st, Sign::Minus)),
            ("C+", rhs_cubic(&st, Sign::Plus)),
            ("C-", rhs_cubic(&st, Sign::Minus)),
        ];
        for (name, oracle) in checks {
            let fam = term::family(name).unwrap();
            let ours = apply_family(&fam, &v, |_| 1.0).unwrap();
            let r = rel(&ours, &oracle);
            assert!(r <= 1e-12, "{name} seed {seed}: {r:e}");
        }
    }
}

#[test]
fn single_mode_hand_sum() {
    // Q+:b with V at xi1 = 3 and xi2 = -1 (lattice spacing 1): output at 2 is
    // w * 2i * (-1)^2 * V(3) V(-1)
    let g = Grid::new(32, PI).unwrap();
    let mut c = vec![Complex64::new(0.0, 0.0); 32];
    let a = Complex64::new(0.3, -0.2);
    let b = Complex64::new(-0.7, 0.4);
    c[g.index_of(3).unwrap()] = a;
    c[g.index_of(-1).unwrap()] = b;
    let v = SpectralField::from_coeffs(g, c).unwrap();
    let q = quad_plain_term(Region::PlusHi);
    let out = apply_t_sigma(&q, &[&v, &v], 0.0).unwrap();
    let expected = g.spectral_weight() * Complex64::new(0.0, 2.0) * a * b;
    assert!((out.coeff(2) - expected).norm() < 1e-15);
    assert!(out.coeffs().iter().filter(|z| z.norm() > 0.0).count() == 1);
    // weighted: Phi = 2 * 2 * (-1) = -4
    let w = apply_t_sigma(&q, &[&v, &v], 0.5).unwrap();
    assert!((w.coeff(2) - expected / 17f64.sqrt().sqrt()).norm() < 1e-15);
}

#[test]
fn restricted_operator_limits() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    let v = random_modes(g, 7, 30, 1.0);
    let term = cubic_term(Region::MinusHi);
    let inputs = [&v, &v, &v];
    let plain = apply_t_sigma(&term, &inputs, 0.0).unwrap();
    let bound = super::lattice::Composition::single(term.clone()).phase_bound(&g);
    let wide = apply_t_alpha_m(&term, &inputs, 0.0, 10.0 * bound).unwrap();
    assert!(rel(&wide, &plain) < 1e-14);
    let empty = apply_t_alpha_m(&term, &inputs, 10.0 * bound, 1.0).unwrap();
    assert_eq!(empty.sup_coeff(), 0.0);
    let z = SpectralField::zeros(g);
    assert_eq!(apply_t_alpha_m(&term, &[&z, &z, &z], 0.0, 5.0).unwrap().sup_coeff(), 0.0);
    assert_eq!(apply_t_sigma(&term, &[&z, &z, &z], 0.3).unwrap().sup_coeff(), 0.0);
    assert!(apply_t_alpha_m(&term, &inputs, 0.0, 0.0).is_err());
}

#[test]
fn dyadic_reconstruction_is_exact() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    for (seed, term) in [(1, quad_plain_term(Region::PlusHi)), (2, cubic_term(Region::PlusHi))] {
        let v = random_modes(g, seed, 40, 1.0);
        let inputs = vec![&v; term.arity()];
        let direct = apply_t_sigma(&term, &inputs, 0.75).unwrap();
        let (sum, shells) = dyadic_sigma_from_restricted(&term, &inputs, 0.75).unwrap();
        assert!(rel(&sum, &direct) < 1e-12, "{:e}", rel(&sum, &direct));
        assert!(shells.len() > 3);
    }
    // all phases in one dyad: a single nonzero shell
    let g = Grid::new(32, PI).unwrap();
    let mut c = vec![Complex64::new(0.0, 0.0); 32];
    c[g.index_of(3).unwrap()] = Complex64::new(1.0, 0.0);
    c[g.index_of(-1).unwrap()] = Complex64::new(1.0, 0.0);
    let v = SpectralField::from_coeffs(g, c).unwrap();
    let q = quad_plain_term(Region::PlusHi);
    let (_, shells) = dyadic_sigma_from_restricted(&q, &[&v, &v], 0.5).unwrap();
    let nonzero: Vec<usize> = (0..shells.len()).filter(|&j| shells[j].sup_coeff() > 0.0).collect();
    assert_eq!(nonzero, vec![dyadic_shell(-4.0) as usize]);
    let z = SpectralField::zeros(g);
    assert_eq!(dyadic_sigma_from_restricted(&q, &[&z, &z], 0.5).unwrap().0.sup_coeff(), 0.0);
}

#[test]
fn split_resonant_extremes() {
    let g = Grid::new(64, 2.0 * PI).unwrap();
    let v = random_modes(g, 3, 40, 1.0);
    let term = quad_plain_term(Region::MinusHi);
    let tab = tabulate(&term, &[&v, &v]).unwrap();
    let whole = lattice_total(&tab);
    let (near, far) = split_resonant(&tab, 1e12).unwrap();
    assert_eq!(near.coeffs(), whole.coeffs());
    assert_eq!(far.sup_coeff(), 0.0);
    let (near, far) = split_resonant(&tab, 1e-300).unwrap();
    let zero_phase: f64 = tab.entries.iter().filter(|e| e.1 == 0.0).map(|e| e.2.norm()).sum();
    assert!(near.l2_norm() <= zero_phase * g.spectral_weight().sqrt() + 1e-300);
    assert!(rel(&far, &whole) < 1e-14 || zero_phase > 0.0);
    assert!(split_resonant(&tab, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn split_is_a_partition(seed in 0u64..1000, thr in 1.0f64..2000.0) {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let v = random_modes(g, seed, 20, 1.0);
        let tab = tabulate(&cubic_term(Region::PlusHi), &[&v, &v, &v]).unwrap();
        let (near, far) = split_resonant(&tab, thr).unwrap();
        let whole = lattice_total(&tab);
        let sum = &near + &far;
        prop_assert!((&sum - &whole).l2_norm() <= 1e-14 * whole.l2_norm().max(1e-300));
    }
}

fn unrestricted_quadratic() -> NonlinearTerm {
    NonlinearTerm {
        name: "generic".into(),
        output: Region::All,
        slots: vec![Slot::plain(Region::All), Slot::plain(Region::All)],
        inner: None,
        multiplier: Multiplier::Constant(Complex64::new(1.0, 0.0)),
    }
}

fn four_families() -> Vec<RhsFamily> {
    [("Q+", Region::PlusHi), ("Q-", Region::MinusHi)]
        .into_iter()
        .map(|(n, r)| RhsFamily {
            name: n.into(),
            monomials: vec![quad_plain_term(r)],
        })
        .chain([("C+", Region::PlusHi), ("C-", Region::MinusHi)].into_iter().map(|(n, r)| RhsFamily {
            name: n.into(),
            monomials: vec![cubic_term(r)],
        }))
        .collect()
}

#[test]
fn expansion_counts() {
    let root = TermTree {
        level: 1,
        kind: TreeKind::Integrand,
        comp: super::lattice::Composition::single(unrestricted_quadratic()),
        dt_leaf: None,
    };
    let next = expand_infr(&[root], &four_families());
    let count = |k: TreeKind| next.iter().filter(|t| t.kind == k).count();
    assert_eq!(count(TreeKind::Integrand), 2 * 4);
    assert_eq!(count(TreeKind::Boundary), 1);
    assert_eq!(count(TreeKind::Remainder), 2);
    assert_eq!(count(TreeKind::LowRemainder), 2);
    assert!(next.iter().all(|t| t.level == 2));
    assert!(expand_infr(&[], &four_families()).is_empty());

    // low-frequency remainders are never expanded further
    let lows: Vec<TermTree> = next
        .iter()
        .filter(|t| t.kind == TreeKind::LowRemainder)
        .cloned()
        .collect();
    assert!(expand_infr(&lows, &four_families()).is_empty());
    for t in &lows {
        let leaf = t.comp.leaves().into_iter().find(|l| Some((l.node, l.slot)) == t.dt_leaf).unwrap();
        assert!(leaf.regions.contains(&Region::Lo));
    }

    // band-aware count for Q+: slot 1 unrestricted, slot 2 on xi < 0
    let roots = TermTree::roots(&gauged_system(None));
    let qplus: Vec<TermTree> = roots.into_iter().filter(|t| t.comp.nodes[0].term.name == "Q+:b").collect();
    let next = expand_infr(&qplus, &gauged_system(None));
    let subs = next.iter().filter(|t| t.kind == TreeKind::Integrand).count();
    // slot 1: Q+:b, Q-:a, Q-:b, C+, C-; slot 2: Q-:a, Q-:b, C-
    assert_eq!(subs, 5 + 3);
}

#[test]
fn pure_degree_matches_formula() {
    let quad_sys = vec![RhsFamily {
        name: "q".into(),
        monomials: vec![unrestricted_quadratic()],
    }];
    let mut level = vec![TermTree {
        level: 1,
        kind: TreeKind::Integrand,
        comp: super::lattice::Composition::single(unrestricted_quadratic()),
        dt_leaf: None,
    }];
    for j in 1..=3 {
        for t in level.iter().filter(|t| t.kind == TreeKind::Integrand) {
            assert_eq!(t.degree(), pure_arity(j, 2));
        }
        level = expand_infr(&level, &quad_sys);
    }
    assert_eq!(pure_arity(2, 3), 5);
}

#[test]
fn tree_dump_has_schema() {
    let roots = TermTree::roots(&gauged_system(None));
    let p = infr_params(0.5, 0.0).unwrap();
    let next = expand_infr(&roots[..1], &gauged_system(None));
    let json = dump_json(&next, Some(&p)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let first = &v[0];
    for key in ["level", "kind", "thresholds", "nodes", "leaves", "degree"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    assert_eq!(first["kind"], "boundary");
    assert_eq!(first["thresholds"][0]["value"], 1000.0);
    assert!(json.contains("\"time_derivative\": true"));
}

#[test]
fn bound_exponents() {
    let p = infr_params(0.5, 0.0).unwrap().with_threshold(16.0).unwrap();
    let e2 = bound_exponent(2, &p, BoundKind::Resonant);
    assert!((e2 + 0.125).abs() < 1e-15);
    let v = predicted_term_bound(2, &p, 2, BoundKind::Resonant, NormData::Single(1.0)).unwrap();
    assert!((v - 16f64.powf(-0.125)).abs() < 1e-15);
    for j in 2..6 {
        assert!(bound_exponent(j + 1, &p, BoundKind::Resonant) < bound_exponent(j, &p, BoundKind::Resonant));
        assert!(bound_exponent(j, &p, BoundKind::Boundary) < bound_exponent(j, &p, BoundKind::Resonant));
    }
    // difference form: (|u|^{J(k-1)} + |v|^{J(k-1)}) |u - v|
    let d = predicted_term_bound(
        2,
        &p,
        3,
        BoundKind::Boundary,
        NormData::Difference { u: 2.0, v: 1.0, diff: 0.1 },
    )
    .unwrap();
    let scale = 16f64.powf(bound_exponent(2, &p, BoundKind::Boundary));
    assert!((d - scale * (16.0 + 1.0) * 0.1).abs() < 1e-12);
    assert!(predicted_term_bound(1, &p, 2, BoundKind::Resonant, NormData::Single(1.0)).is_err());
}

#[test]
fn nfe_zero_trajectory() {
    use crate::dynamics::evolve_gauged;
    use crate::gauge::gauge_forward;
    let g = Grid::new(32, PI).unwrap();
    let traj = evolve_gauged(&gauge_forward(&SpectralField::zeros(g)), 0.04, 0.01).unwrap();
    let p = infr_params(0.5, 0.0).unwrap();
    let r = nfe_residual(&traj, &p, &NfeOptions::default()).unwrap();
    assert!(r.residuals().iter().all(|&x| x == 0.0));
    let deep = NfeOptions {
        j_max: 4,
        ..Default::default()
    };
    assert!(nfe_residual(&traj, &p, &deep).is_err());
}

// Modes on a sublattice that stays closed under aliasing keep the active set tiny.
fn sublattice_trajectory() -> crate::dynamics::Trajectory {
    use crate::dynamics::evolve_gauged;
    use crate::gauge::gauge_forward;
    let g = Grid::new(128, PI).unwrap();
    let f = SpectralField::sample(g, |x| 0.08 * ((32.0 * x).cos() + (48.0 * x + 0.3).cos()));
    evolve_gauged(&gauge_forward(&f.derivative()), 0.01, 1e-4).unwrap()
}

#[test]
fn nfe_levels_decrease() {
    let traj = sublattice_trajectory();
    let p = infr_params(0.5, 0.0).unwrap();
    let r = nfe_residual(&traj, &p, &NfeOptions::default()).unwrap();
    let res = r.residuals();
    assert!(res[1] < res[0], "{res:?}");
    assert!(!r.levels[0].nonresonant_empty);

    let p = p.with_c_scale(1e-3).unwrap();
    let r = nfe_residual(&traj, &p, &NfeOptions::default()).unwrap();
    let res = r.residuals();
    assert!(!r.levels[1].nonresonant_empty);
    assert!(res[1] < 0.1 * res[0], "{res:?}");
    for l in &r.levels {
        assert!(l.closure_error <= l.quadrature_error_estimate, "{l:?}");
    }
}
