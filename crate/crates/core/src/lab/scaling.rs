//! Scaling sweeps of the quadrature oracles `I` and `J`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::integrals::{cubic_integral_i_checked, cubic_integral_i_with, quad_integral_j_checked, quad_integral_j_with, IntegralValue, Mesh, MESH_TOL};
use super::report::{Check, EstimateReport, Sample};
use crate::infr::{gamma_cubic, gamma_quad};
use crate::Result;

/// Fit tolerance added to the predicted exponents.
pub const SLOPE_TOL: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegralKind {
    /// Cubic integral `I`.
    Cubic,
    /// Quadratic integral `J`.
    Quad,
}

impl IntegralKind {
    pub fn name(self) -> &'static str {
        match self {
            IntegralKind::Cubic => "I",
            IntegralKind::Quad => "J",
        }
    }

    pub fn gamma(self, s: f64, eps: f64) -> f64 {
        match self {
            IntegralKind::Cubic => gamma_cubic(s, eps),
            IntegralKind::Quad => gamma_quad(s, eps),
        }
    }

    pub fn checked(self, alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> Result<IntegralValue> {
        match self {
            IntegralKind::Cubic => cubic_integral_i_checked(alpha, m, s, eps, cutoff, mesh),
            IntegralKind::Quad => quad_integral_j_checked(alpha, m, s, eps, cutoff, mesh),
        }
    }

    pub fn value(self, alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> Result<f64> {
        match self {
            IntegralKind::Cubic => cubic_integral_i_with(alpha, m, s, eps, cutoff, mesh),
            IntegralKind::Quad => quad_integral_j_with(alpha, m, s, eps, cutoff, mesh),
        }
    }
}

/// Sweeps `M` at `alpha = 0` and `alpha` at the smallest `M`. The integral is
/// the square of the dual quantity, so the bound `(|alpha| + M)^{2 gamma} M`
/// gives the limits `1 + 2 gamma` in `M` and `2 gamma` in `alpha`, each plus
/// [`SLOPE_TOL`]. Every point is checked under mesh halving, and the largest
/// `M` point under cutoff doubling.
#[allow(clippy::too_many_arguments)]
pub fn integral_experiment(
    kind: IntegralKind,
    s: f64,
    eps: f64,
    alpha_list: &[f64],
    m_list: &[f64],
    cutoff: f64,
    mesh: Mesh,
) -> Result<EstimateReport> {
    let gamma = kind.gamma(s, eps);
    let m_fixed = m_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let m_max = m_list.iter().cloned().fold(0.0, f64::max);
    let mut cells: Vec<(&str, f64, f64)> = m_list.iter().map(|&m| ("m", 0.0, m)).collect();
    if m_fixed.is_finite() {
        cells.extend(alpha_list.iter().map(|&a| ("alpha", a, m_fixed)));
    }
    let values: Vec<Result<IntegralValue>> = cells
        .par_iter()
        .map(|&(_, a, m)| kind.checked(a, m, s, eps, cutoff, mesh))
        .collect();

    let mut rep = EstimateReport::new(&format!("integral-{}", kind.name()));
    rep.params.alpha = alpha_list.to_vec();
    rep.params.m = m_list.to_vec();
    rep.params.s = vec![s];
    rep.params.eps = vec![eps];
    rep.oracles.push(format!(
        "brute-force quadrature, mesh {}/{} and halved, cutoff {cutoff}; predicted (|alpha| + M)^(2 gamma) M with gamma = {gamma}",
        mesh.outer, mesh.inner
    ));
    let mut worst_change: f64 = 0.0;
    for (&(axis, a, m), v) in cells.iter().zip(values) {
        let v = v?;
        if !v.converged {
            rep.notes.push(format!("mesh not converged at alpha = {a}, M = {m}: change {:.3}", v.relative_change));
        }
        worst_change = worst_change.max(v.relative_change);
        rep.samples.push(Sample {
            alpha: Some(a),
            m: Some(m),
            s: Some(s),
            eps: Some(eps),
            ..Sample::new(&format!("{}-vs-{axis}", kind.name()), v.value)
        });
    }
    let series = format!("{}-vs-m", kind.name());
    let criterion = format!("M-exponent <= 1 + 2 gamma + {SLOPE_TOL}");
    let check = rep.growth_check(criterion, &series, "m", |s| s.m, 1.0 + 2.0 * gamma + SLOPE_TOL);
    rep.push_check(check);
    if alpha_list.len() >= 2 {
        let series = format!("{}-vs-alpha", kind.name());
        let criterion = format!("alpha-exponent <= 2 gamma + {SLOPE_TOL}");
        let check = rep.growth_check(criterion, &series, "alpha", |s| s.alpha, 2.0 * gamma + SLOPE_TOL);
        rep.push_check(check);
    }
    rep.push_check(Check::at_most("mesh-halving relative change", worst_change, MESH_TOL));
    if m_max > 0.0 {
        let base = kind.value(0.0, m_max, s, eps, cutoff, mesh)?;
        let doubled = kind.value(0.0, m_max, s, eps, 2.0 * cutoff, mesh)?;
        let scale = base.abs().max(doubled.abs());
        let change = if scale == 0.0 { 0.0 } else { (base - doubled).abs() / scale };
        rep.push_check(Check::at_most("cutoff-doubling relative change", change, MESH_TOL));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_sweep_passes_at_half() {
        let rep = integral_experiment(IntegralKind::Quad, 0.5, 0.0, &[4.0, 8.0, 16.0, 32.0], &[2.0, 4.0, 8.0, 16.0, 32.0], 1000.0, Mesh::default()).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
        assert_eq!(rep.samples.len(), 9);
        assert_eq!(rep.recomputed_verdict(), rep.verdict);
    }

    #[test]
    fn empty_sweep_is_inconclusive_not_pass() {
        let rep = integral_experiment(IntegralKind::Cubic, 0.5, 0.0, &[], &[], 1000.0, Mesh::default()).unwrap();
        assert!(!rep.passed());
    }
}
