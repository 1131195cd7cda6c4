//! The gauge `V = e^{-iF/2} - 1` built from the zero-mean antiderivative `F`
//! of `u`, its inverse, and the right-hand sides of the gauged equations.
//!
//! Conventions. With `w = V_x = -(i/2) u e^{-iF/2}` the inverse reads
//! `u = 2i (1 + conj V) V_x`. Writing the gauged equation as
//! `V_t + H V_xx = N(V)` with
//!
//! ```text
//! N(V) = -2i P_-( (conj(V) V_x)_x ) - 2i V P_-( ((1 + conj V) V_x)_x )
//! ```
//!
//! the quadratic part `Q` and cubic part `C` of `N` are split by homogeneity.
//! This is the gauged form of `u_t + H u_xx = u u_x`, the normalisation in
//! which `F = \partial_x^{-1} u` obeys `F_t + H F_xx = (F_x)^2 / 2`.
//!
//! On the periodic lattice `F` is kept zero-mean, so `F_t` loses the mean of
//! `u^2/2`; this adds the term `i mu (1 + V)` with `mu = ||u||_{L^2}^2 / (8L)`
//! to the gauged equation (see [`periodization_term`]). It is constant in
//! time along the flow and vanishes as `L -> infinity`.
//! On the band `xi > 1` only the second summand survives and
//! `P_{+hi} N = -P_{+hi}(V_+ P_- u_x)`. All products are evaluated in physical
//! space on a lattice padded by a factor two, which makes every retained
//! coefficient an exact lattice convolution.

use log::{debug, warn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, Region, SpectralField};

/// Minimum of `|1 + V|` below which the inverse gauge is refused.
pub const INVERSE_GUARD: f64 = 0.1;
/// Relative size of `\hat u(0)` tolerated before it is projected away silently.
pub const ZERO_MODE_TOL: f64 = 1e-13;
/// Tolerance on `||u - 2i(1+conj V)V_x||_{L^2} / ||u||_{L^2}` for a consistent state.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

const MINUS_TWO_I: Complex64 = Complex64::new(0.0, -2.0);

/// Band selector for the high-frequency gauged equations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn high_band(self) -> Region {
        match self {
            Sign::Plus => Region::PlusHi,
            Sign::Minus => Region::MinusHi,
        }
    }
}

/// `u`, its antiderivative, the gauge variable and its band decomposition.
#[derive(Clone, Debug)]
pub struct GaugeState {
    pub u: SpectralField,
    pub f: SpectralField,
    pub v: SpectralField,
    pub v_plus: SpectralField,
    pub v_minus: SpectralField,
    pub v_lo: SpectralField,
    pub w: SpectralField,
}

impl GaugeState {
    fn assemble(u: SpectralField, v: SpectralField) -> Self {
        let f = u.antiderivative();
        let w = v.derivative();
        Self {
            v_plus: v.project(Region::PlusHi),
            v_minus: v.project(Region::MinusHi),
            v_lo: v.project(Region::Lo),
            u,
            f,
            v,
            w,
        }
    }

    /// State determined by a gauge variable alone (u is reconstructed).
    pub fn from_gauge(v: SpectralField) -> Result<Self> {
        let (u, residue) = inverse_with_residue(&v)?;
        debug!("from_gauge: imaginary residue {residue:.3e} dropped");
        Ok(Self::assemble(u, v))
    }

    pub fn grid(&self) -> &Grid {
        self.v.grid()
    }

    /// `||u - 2i(1+conj V)V_x||_{L^2} / ||u||_{L^2}` (absolute when `u = 0`).
    pub fn reconstruction_residual(&self) -> f64 {
        let rebuilt = reconstruct_u(&self.v);
        let err = (&self.u - &rebuilt).l2_norm();
        let scale = self.u.l2_norm();
        if scale > 0.0 {
            err / scale
        } else {
            err
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.reconstruction_residual() <= RECONSTRUCTION_TOL
    }
}

/// Zero-mean antiderivative, `\hat F = \hat u / (i xi)`.
pub fn antiderivative(u: &SpectralField) -> SpectralField {
    let scale = u.l2_norm();
    let zero = u.coeff(0).norm();
    if zero > ZERO_MODE_TOL * scale.max(f64::MIN_POSITIVE) && zero > 0.0 {
        warn!("projecting away a zero mode of size {zero:.3e} (||u|| = {scale:.3e})");
    }
    u.zero_mean().antiderivative()
}

/// `G(u) = e^{-iF/2} - 1`, evaluated pointwise in physical space.
pub fn gauge_map(u: &SpectralField) -> SpectralField {
    let f = antiderivative(u);
    let samples: Vec<Complex64> = f
        .to_physical()
        .into_iter()
        .map(|fx| (Complex64::new(0.0, -0.5) * fx).exp() - 1.0)
        .collect();
    SpectralField::from_physical(*u.grid(), &samples).expect("same grid")
}

pub fn gauge_forward(u: &SpectralField) -> GaugeState {
    let u = u.zero_mean();
    let v = gauge_map(&u);
    GaugeState::assemble(u, v)
}

fn reconstruct_u(v: &SpectralField) -> SpectralField {
    let vx = v.derivative();
    let prod = v.conj_function().dealiased_product(&vx);
    (&vx + &prod).scale(Complex64::new(0.0, 2.0))
}

/// `min_x |1 + V(x)|` over the grid.
pub fn min_modulus(v: &SpectralField) -> f64 {
    v.to_physical()
        .into_iter()
        .map(|z| (z + 1.0).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Recovers `u = 2i (1 + conj V) V_x`.
pub fn gauge_inverse(v: &SpectralField) -> Result<SpectralField> {
    let (u, residue) = inverse_with_residue(v)?;
    if residue > 1e-10 * u.sup_coeff().max(1e-300) {
        warn!("gauge inverse produced an imaginary residue {residue:.3e}; realifying");
    }
    Ok(u)
}

/// Realified inverse and the imaginary residue dropped on the way. Solver
/// stages are not exact gauges, so the residue is expected there.
fn inverse_with_residue(v: &SpectralField) -> Result<(SpectralField, f64)> {
    let m = min_modulus(v);
    if m <= INVERSE_GUARD {
        return Err(Error::GaugeNotInvertible {
            min_modulus: m,
            threshold: INVERSE_GUARD,
        });
    }
    let u = reconstruct_u(v);
    let residue = u.reality_residual();
    Ok((u.realify().zero_mean(), residue))
}

/// Quadratic and cubic parts of the gauged nonlinearity on the whole lattice.
pub fn nonlinearity_parts(v: &SpectralField) -> (SpectralField, SpectralField) {
    let grid = *v.grid();
    let fine = grid.refined(2).expect("refined grid is valid");
    let vp = v.pad_to(fine);
    let vx = vp.derivative();
    // P_-((conj V) V_x)_x, exact on the padded lattice
    let b = vp
        .conj_function()
        .pointwise(&vx)
        .derivative()
        .project(Region::Minus);
    let vxx_minus = vx.derivative().project(Region::Minus);
    let quad = (&b + &vp.pointwise(&vxx_minus)).scale(MINUS_TWO_I);
    let cubic = vp.pointwise(&b).scale(MINUS_TWO_I);
    (quad.restrict_to(grid), cubic.restrict_to(grid))
}

/// Full right-hand side `N(V)` of `V_t + H V_xx = N(V)`.
pub fn nonlinearity(v: &SpectralField) -> SpectralField {
    let (q, c) = nonlinearity_parts(v);
    &q + &c
}

/// `mu = ||u||^2 / (8L)`, constant along the flow.
pub fn periodization_rate(u: &SpectralField) -> f64 {
    u.l2_norm().powi(2) / (8.0 * u.grid().half_length())
}

/// `i mu (1 + V)` with `mu = ||u||^2 / (8L)`: the zero-mean correction of the
/// periodic surrogate.
pub fn periodization_term(v: &SpectralField, u: &SpectralField) -> SpectralField {
    shift_one_plus(v, Complex64::new(0.0, periodization_rate(u)))
}

/// `e^{-i mu t}(1 + V) - 1`. `N` commutes with constant rotations of
/// `1 + V`, so this solves the gauged equation without the periodisation
/// term when `V` solves it with the term.
pub fn remove_periodization_phase(v: &SpectralField, mu: f64, t: f64) -> SpectralField {
    let rot = Complex64::from_polar(1.0, -mu * t);
    let mut out = shift_one_plus(v, rot).into_coeffs();
    let grid = *v.grid();
    out[grid.index_of(0).expect("zero mode on lattice")] -= 2.0 * grid.half_length();
    SpectralField::from_coeffs(grid, out).expect("same length")
}

/// `c (1 + V)`; the constant `1` has coefficient `2L`.
fn shift_one_plus(v: &SpectralField, c: Complex64) -> SpectralField {
    let grid = *v.grid();
    let mut one_plus_v = v.clone().into_coeffs();
    let zero = grid.index_of(0).expect("zero mode on lattice");
    one_plus_v[zero] += 2.0 * grid.half_length();
    SpectralField::from_coeffs(grid, one_plus_v).expect("same length").scale(c)
}

/// Complete right-hand side used by the gauged solver: `N(V)` plus the
/// periodisation term.
pub fn gauged_rhs(v: &SpectralField) -> Result<SpectralField> {
    let (u, _) = inverse_with_residue(v)?;
    Ok(&nonlinearity(v) + &periodization_term(v, &u))
}

/// `Q_±(V)`: quadratic part of the gauged equation on the band `±xi > 1`.
pub fn rhs_quadratic(state: &GaugeState, sign: Sign) -> SpectralField {
    nonlinearity_parts(&state.v).0.project(sign.high_band())
}

/// `C_±(V)`: cubic part of the gauged equation on the band `±xi > 1`.
pub fn rhs_cubic(state: &GaugeState, sign: Sign) -> SpectralField {
    nonlinearity_parts(&state.v).1.project(sign.high_band())
}

/// Forcing of the low-frequency equation for `V_lo`, supported in `|xi| <= 1`.
pub fn rhs_low(state: &GaugeState) -> SpectralField {
    nonlinearity(&state.v).project(Region::Lo)
}

/// `sup_xi |\hat Q_± + \hat C_±|` over both bands; the profile phase has
/// modulus one so this is also the sup of the profile time derivative.
pub fn profile_time_derivative_sup(state: &GaugeState) -> f64 {
    nonlinearity(&state.v).project(Region::Hi).sup_coeff()
}

/// `sum_{n>=1} a^n / (2^n n!) = e^{a/2} - 1`, the series majorant of
/// `||V||` in terms of `a = ||F||` (up to the algebra constant of the norm).
pub fn gauge_series_majorant(f_norm: f64) -> f64 {
    (0.5 * f_norm).exp_m1()
}
