//! Phase-weighted and frequency-restricted multilinear operators.

use num_complex::Complex64;

use super::lattice::{active_modes, enumerate, Composition};
use super::term::{NonlinearTerm, RhsFamily};
use crate::spectral::{japanese, Grid, SpectralField};
use crate::{Error, Result};

/// Inputs below this fraction of their largest coefficient are dropped.
pub const ACTIVE_REL: f64 = 1e-14;

/// `sum m(Xi) w(Phi) prod_j f_j` over the lattice, with conjugated slots
/// reading `conj f_j(xi_j)`.
pub fn apply_weighted(
    term: &NonlinearTerm,
    inputs: &[&SpectralField],
    weight: impl Fn(f64) -> f64,
) -> Result<SpectralField> {
    if inputs.len() != term.arity() {
        return Err(Error::LengthMismatch {
            expected: term.arity(),
            got: inputs.len(),
        });
    }
    let grid = *inputs[0].grid();
    for f in inputs {
        f.check_same_grid(inputs[0])?;
    }
    let comp = Composition::single(term.clone());
    let leaves = comp.leaves();
    let cand: Vec<Vec<usize>> = inputs
        .iter()
        .map(|f| active_modes(f.coeffs(), ACTIVE_REL))
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); grid.n_points()];
    enumerate(&comp, &grid, &cand, |t| {
        let w = weight(t.phases[0]);
        if w == 0.0 {
            return;
        }
        let mut p = t.factor * w;
        for (l, &i) in leaves.iter().zip(t.leaves) {
            let c = inputs[l.slot].coeffs()[i];
            p *= if l.conj { c.conj() } else { c };
        }
        out[t.out] += p;
    });
    SpectralField::from_coeffs(grid, out)
}

/// `T_sigma`: kernel `<Phi>^{-sigma} m`.
pub fn apply_t_sigma(term: &NonlinearTerm, inputs: &[&SpectralField], sigma: f64) -> Result<SpectralField> {
    apply_weighted(term, inputs, |phi| japanese(phi).powf(-sigma))
}

/// `T^{alpha,M}`: kernel `m 1_{|Phi - alpha| < M}`.
pub fn apply_t_alpha_m(
    term: &NonlinearTerm,
    inputs: &[&SpectralField],
    alpha: f64,
    m: f64,
) -> Result<SpectralField> {
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("M must be positive, got {m}")));
    }
    apply_weighted(term, inputs, |phi| if (phi - alpha).abs() < m { 1.0 } else { 0.0 })
}

/// Sum of a family's monomials under a common weight, all slots fed by `v`.
pub fn apply_family(family: &RhsFamily, v: &SpectralField, weight: impl Fn(f64) -> f64 + Copy) -> Result<SpectralField> {
    let mut acc = SpectralField::zeros(*v.grid());
    for m in &family.monomials {
        let inputs = vec![v; m.arity()];
        acc = &acc + &apply_weighted(m, &inputs, weight)?;
    }
    Ok(acc)
}

/// Dyadic shell `2^{j-1} <= |Phi| < 2^j` (shell 0 is `|Phi| < 1`).
pub fn dyadic_shell(phi: f64) -> u32 {
    let a = phi.abs();
    if a < 1.0 {
        0
    } else {
        a.log2().floor() as u32 + 1
    }
}

/// `T_sigma` rebuilt as a sum over dyadic phase shells, each shell the
/// difference of two weighted restricted operators `T^{0,2^j} - T^{0,2^{j-1}}`.
/// Returns the sum and the per-shell fields.
pub fn dyadic_sigma_from_restricted(
    term: &NonlinearTerm,
    inputs: &[&SpectralField],
    sigma: f64,
) -> Result<(SpectralField, Vec<SpectralField>)> {
    let grid = *inputs[0].grid();
    let top = dyadic_shell(max_phase_bound(term, &grid)) + 1;
    let restricted = |m: f64| {
        apply_weighted(term, inputs, |phi| {
            if phi.abs() < m {
                japanese(phi).powf(-sigma)
            } else {
                0.0
            }
        })
    };
    let mut shells = Vec::new();
    let mut below = SpectralField::zeros(grid);
    let mut total = SpectralField::zeros(grid);
    for j in 0..=top {
        let upto = restricted(2f64.powi(j as i32))?;
        let shell = &upto - &below;
        total = &total + &shell;
        shells.push(shell);
        below = upto;
    }
    Ok((total, shells))
}

fn max_phase_bound(term: &NonlinearTerm, grid: &Grid) -> f64 {
    Composition::single(term.clone()).phase_bound(grid)
}

/// Every lattice contribution of a term: `(output index, phase, value)`.
#[derive(Clone, Debug)]
pub struct LatticeTerm {
    pub grid: Grid,
    pub entries: Vec<(usize, f64, Complex64)>,
}

pub fn tabulate(term: &NonlinearTerm, inputs: &[&SpectralField]) -> Result<LatticeTerm> {
    let grid = *inputs[0].grid();
    let mut entries = Vec::new();
    let comp = Composition::single(term.clone());
    let leaves = comp.leaves();
    let cand: Vec<Vec<usize>> = inputs
        .iter()
        .map(|f| active_modes(f.coeffs(), ACTIVE_REL))
        .collect();
    enumerate(&comp, &grid, &cand, |t| {
        let mut p = t.factor;
        for (l, &i) in leaves.iter().zip(t.leaves) {
            let c = inputs[l.slot].coeffs()[i];
            p *= if l.conj { c.conj() } else { c };
        }
        entries.push((t.out, t.phases[0], p));
    });
    Ok(LatticeTerm { grid, entries })
}

/// Splits into the near-resonant part `|Phi| < threshold` and the
/// nonresonant rest; the two parts always sum to the whole.
pub fn split_resonant(term: &LatticeTerm, threshold: f64) -> Result<(SpectralField, SpectralField)> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    let n = term.grid.n_points();
    let mut near = vec![Complex64::new(0.0, 0.0); n];
    let mut far = vec![Complex64::new(0.0, 0.0); n];
    for &(i, phi, v) in &term.entries {
        if phi.abs() < threshold {
            near[i] += v;
        } else {
            far[i] += v;
        }
    }
    Ok((
        SpectralField::from_coeffs(term.grid, near)?,
        SpectralField::from_coeffs(term.grid, far)?,
    ))
}

/// Sum of all entries.
pub fn lattice_total(term: &LatticeTerm) -> SpectralField {
    let mut out = vec![Complex64::new(0.0, 0.0); term.grid.n_points()];
    for &(i, _, v) in &term.entries {
        out[i] += v;
    }
    SpectralField::from_coeffs(term.grid, out).expect("lattice length")
}
