//! Parameter bookkeeping for the normal form reduction.
//!
//! The growth constant `mu` of the profile time derivative is `0` for this
//! system: `(~V_±)_t` is bounded uniformly in frequency.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const BETA: f64 = 0.5;
/// Upper limit on `eps` besides `eps < s`.
pub const EPS_CAP: f64 = 0.75;

/// `gamma` of the quadratic term: `max{1/2 + eps - s, 0}`.
pub fn gamma_quad(s: f64, eps: f64) -> f64 {
    (0.5 + eps - s).max(0.0)
}

/// `gamma` of the cubic term: `max{1/4 + (eps - s)/2, eps - 1/2, 0}`.
pub fn gamma_cubic(s: f64, eps: f64) -> f64 {
    (0.25 + 0.5 * (eps - s)).max(eps - 0.5).max(0.0)
}

/// Per-term parameters; `sigma`, `theta`, `delta` are `None` when
/// `2 gamma + beta >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermParams {
    pub term: String,
    pub gamma: f64,
    pub sigma: Option<f64>,
    pub theta: Option<f64>,
    pub delta: Option<f64>,
}

impl TermParams {
    fn new(term: &str, gamma: f64) -> Self {
        let (sigma, theta, delta) = match sigma_theta(gamma, BETA) {
            Some((sigma, theta)) => (Some(sigma), Some(theta), Some(0.5 * theta / BETA)),
            None => (None, None, None),
        };
        Self {
            term: term.to_string(),
            gamma,
            sigma,
            theta,
            delta,
        }
    }

    pub fn satisfied(&self) -> bool {
        self.theta.is_some()
    }
}

/// `sigma` at the midpoint of `(gamma + beta, 1 - gamma)` and the resulting
/// `theta = 1 - max{gamma + beta, sigma + gamma}`.
pub fn sigma_theta(gamma: f64, beta: f64) -> Option<(f64, f64)> {
    let lo = gamma + beta;
    let hi = 1.0 - gamma;
    if lo >= hi {
        return None;
    }
    let sigma = 0.5 * (lo + hi);
    let theta = 1.0 - lo.max(sigma + gamma);
    (theta > 0.0).then_some((sigma, theta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfrParams {
    pub s: f64,
    pub eps: f64,
    pub gamma_quad: f64,
    pub gamma_cubic: f64,
    /// `max(gamma_quad, gamma_cubic)`.
    pub gamma: f64,
    pub beta: f64,
    /// Parameters of the most restrictive term that satisfies the
    /// assumption (smallest `theta`).
    pub sigma: f64,
    pub theta: f64,
    pub delta: f64,
    pub n_threshold: f64,
    /// Multiplies every `c_j`; `1` reproduces `c_j = (j+1)^{2/theta}`.
    pub c_scale: f64,
    pub terms: Vec<TermParams>,
}

impl InfrParams {
    /// `c_j = c_scale (j+1)^{2/theta}`.
    pub fn c(&self, j: usize) -> f64 {
        self.c_scale * ((j + 1) as f64).powf(2.0 / self.theta)
    }

    pub fn all_terms_satisfied(&self) -> bool {
        self.terms.iter().all(TermParams::satisfied)
    }

    pub fn with_threshold(mut self, n_threshold: f64) -> Result<Self> {
        if !(n_threshold > 1.0) {
            return Err(Error::InvalidParameters(format!(
                "N_threshold must exceed 1, got {n_threshold}"
            )));
        }
        self.n_threshold = n_threshold;
        Ok(self)
    }

    pub fn with_c_scale(mut self, c_scale: f64) -> Result<Self> {
        if !(c_scale > 0.0) {
            return Err(Error::InvalidParameters(format!("c_scale must be positive, got {c_scale}")));
        }
        self.c_scale = c_scale;
        Ok(self)
    }

    /// Threshold separating near-resonant from nonresonant at step `j`:
    /// `N` for `j = 1`, else `c_j |Phi_1|^delta`.
    pub fn threshold(&self, j: usize, phi1: f64) -> f64 {
        if j <= 1 {
            self.n_threshold
        } else {
            self.c(j) * phi1.abs().powf(self.delta)
        }
    }
}

/// Parameters at `(s, eps)`. Requires `0 <= eps < min{s, 3/4}`; fails only
/// if no term admits a valid `sigma`.
pub fn infr_params(s: f64, eps: f64) -> Result<InfrParams> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::InvalidParameters(format!("need s > 0, got {s}")));
    }
    if !(eps >= 0.0 && eps < s.min(EPS_CAP)) {
        return Err(Error::InvalidParameters(format!(
            "need 0 <= eps < min(s, 3/4) = {}, got {eps}",
            s.min(EPS_CAP)
        )));
    }
    let gq = gamma_quad(s, eps);
    let gc = gamma_cubic(s, eps);
    let terms = vec![TermParams::new("quadratic", gq), TermParams::new("cubic", gc)];
    let binding = terms
        .iter()
        .filter(|t| t.satisfied())
        .min_by(|a, b| a.theta.unwrap().total_cmp(&b.theta.unwrap()))
        .ok_or_else(|| {
            Error::InvalidParameters(format!(
                "parameters violate the phase-weighted bound assumption at (s, eps) = ({s}, {eps})"
            ))
        })?;
    Ok(InfrParams {
        s,
        eps,
        gamma_quad: gq,
        gamma_cubic: gc,
        gamma: gq.max(gc),
        beta: BETA,
        sigma: binding.sigma.unwrap(),
        theta: binding.theta.unwrap(),
        delta: binding.delta.unwrap(),
        n_threshold: 1e3,
        c_scale: 1.0,
        terms: terms.clone(),
    })
}

/// Which bound of the normal form series to evaluate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundKind {
    /// Resonant integrand `N_1^{(J)}`: exponent `-theta - delta theta (J-2) + delta beta`.
    Resonant,
    /// Boundary term `N_0^{(J+1)}`: exponent `-theta - delta theta (J-2) + delta (beta - 1)`.
    Boundary,
    /// Remainder `R^{(J+2)}` in the weak norm; the last factor is `||~u_t||_inf`.
    Remainder { ut_sup: f64 },
}

/// Norms entering a bound: one solution, or the difference of two.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormData {
    Single(f64),
    Difference { u: f64, v: f64, diff: f64 },
}

/// Exponent of `N` in the bound for step `j >= 2`.
pub fn bound_exponent(j: usize, p: &InfrParams, kind: BoundKind) -> f64 {
    let base = -p.theta - p.delta * p.theta * (j as f64 - 2.0);
    match kind {
        BoundKind::Resonant => base + p.delta * p.beta,
        BoundKind::Boundary | BoundKind::Remainder { .. } => base + p.delta * (p.beta - 1.0),
    }
}

/// Predicted size of a step-`j` term of arity-`k` origin, with the
/// `N_threshold` of `p`.
pub fn predicted_term_bound(j: usize, p: &InfrParams, k: usize, kind: BoundKind, norms: NormData) -> Result<f64> {
    if j < 2 {
        return Err(Error::InvalidArgument(format!("bounds start at J = 2, got {j}")));
    }
    let e = (j * (k - 1)) as i32;
    let scale = p.n_threshold.powf(bound_exponent(j, p, kind));
    let norm = match (kind, norms) {
        (BoundKind::Remainder { ut_sup }, NormData::Single(m)) => m.powi(e) * ut_sup,
        (BoundKind::Remainder { ut_sup }, NormData::Difference { u, v, .. }) => {
            (u.powi(e) + v.powi(e)) * ut_sup
        }
        (_, NormData::Single(m)) => m.powi(e + 1),
        (_, NormData::Difference { u, v, diff }) => (u.powi(e) + v.powi(e)) * diff,
    };
    Ok(scale * norm)
}

/// Degree of a step-`j` integrand built from arity-`k` terms only: `(k-1)j + 1`.
pub fn pure_arity(j: usize, k: usize) -> usize {
    (k - 1) * j + 1
}
