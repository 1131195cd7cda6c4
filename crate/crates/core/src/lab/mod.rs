//! Quantitative experiments: quadrature oracles, exponent fits, smoothing
//! and Lipschitz measurements.

pub mod data;
pub mod fit;
pub mod integrals;
pub mod lemma21;
pub mod lipschitz;
pub mod operator;
pub mod report;
pub mod scaling;
pub mod smoothing;

pub use fit::{fit_power, PowerFit, FIT_RESIDUAL_MAX};
pub use integrals::{
    cubic_integral_i, cubic_integral_i_checked, cubic_integral_i_with, quad_integral_j, quad_integral_j_checked,
    quad_integral_j_with, IntegralValue, Mesh, MESH_TOL,
};
pub use report::{Bound, Check, EstimateReport, FitRecord, ParamGrid, Sample, Verdict};
pub use operator::{random_unit_field, term_gamma, verify_operator_estimate, OperatorOptions};
pub use scaling::{integral_experiment, IntegralKind, SLOPE_TOL};
pub use data::{dyadic_band_rms, evolve_gauged_stable, gaussian_derivative, rough_data};
pub use smoothing::{smoothing_experiment, SmoothingOptions};
pub use lipschitz::{difference_ratio, lipschitz_experiment, scale_perturbation, LipschitzOptions};
pub use lemma21::{lemma21_experiment, Lemma21Options};
