//! Normal form reduction machinery for the gauged system: phases, parameter
//! bookkeeping, phase-weighted and frequency-restricted operators, term
//! trees and truncated normal form residuals.

pub mod lattice;
pub mod nfe;
pub mod operators;
pub mod params;
pub mod term;
pub mod tree;

pub use lattice::{Composition, Leaf, Node};
pub use nfe::{nfe_residual, NfeLevel, NfeOptions, NfeReport};
pub use operators::{
    apply_family, apply_t_alpha_m, apply_t_sigma, apply_weighted, dyadic_sigma_from_restricted,
    split_resonant, tabulate, LatticeTerm,
};
pub use params::{
    gamma_cubic, gamma_quad, infr_params, predicted_term_bound, BoundKind, InfrParams, NormData,
    TermParams,
};
pub use term::{
    cubic_phase_formula, cubic_term, family, gauged_system, periodization_monomial, phase, quad_conj_term,
    quad_plain_term, quadratic_phase_formula, Multiplier, NonlinearTerm,
    RhsFamily, Slot, InnerConstraint,
};
pub use tree::{dump_json, expand_infr, TermTree, TreeKind};

#[cfg(test)]
mod tests;
