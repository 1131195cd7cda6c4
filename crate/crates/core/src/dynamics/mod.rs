//! Time evolution on the periodic lattice.
//!
//! Both solvers use classical RK4 on the profile `~f(t, xi) = e^{it omega(xi)} ^f(t, xi)`,
//! so the dispersive part `H d_x^2` is integrated exactly and only the
//! nonlinearity is stepped.

mod trajectory;

pub use trajectory::{FieldTag, Manifest, Trajectory};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gauge::{self, GaugeState};
use crate::spectral::{SpectralField, Symbol};
use crate::{Error, Result};

/// Imaginary-axis extent of the RK4 stability region.
const RK4_IMAG_LIMIT: f64 = 2.0 * std::f64::consts::SQRT_2;
/// Per-step amplification accepted by the startup probe.
const PROBE_GROWTH: f64 = 1.05;
const PROBE_ITERATIONS: usize = 8;

/// `e^{-it omega(xi)}`: the solution operator of `u_t + H u_xx = 0`.
pub fn linear_propagator(field: &SpectralField, t: f64) -> SpectralField {
    field.apply(&Symbol::Propagator(t))
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    /// Coefficient of the nonlinearity in `u_t + H u_xx = kappa d_x(u^2)`.
    /// The gauge transform is exact for `kappa = 1/2`.
    pub kappa: f64,
    /// Record every `save_every`-th step (the final step is always recorded).
    pub save_every: usize,
    /// Run the startup stability probe.
    pub probe: bool,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            save_every: 1,
            probe: true,
        }
    }
}

/// Evolves `u_t + H u_xx = d_x(u^2)/2` with default options.
pub fn evolve_bo(u0: &SpectralField, t_final: f64, dt: f64) -> Result<Trajectory> {
    evolve_bo_with(u0, t_final, dt, &EvolveOptions::default())
}

pub fn evolve_bo_with(
    u0: &SpectralField,
    t_final: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let grid = *u0.grid();
    let norm = u0.l2_norm();
    if u0.coeff(0).norm() > gauge::ZERO_MODE_TOL * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(format!(
            "initial data must be zero-mean, |u(0)| = {:e}",
            u0.coeff(0).norm()
        )));
    }
    let u0 = u0.zero_mean();
    let kappa = opts.kappa;
    let nonlinear = move |u: &SpectralField| -> Result<SpectralField> {
        Ok(u.dealiased_product(u).derivative() * kappa)
    };
    let u_sup = u0.to_physical().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rate = 2.0 * kappa.abs() * grid.xi_max() * u_sup;
    let mut traj = Trajectory::new(grid, FieldTag::U, dt, "if-rk4");
    integrate(&u0, t_final, dt, opts, rate, nonlinear, &mut traj)?;
    Ok(traj)
}

/// Evolves the gauge variable by `V_t + H V_xx = N(V)`, the three bands
/// `V_+`, `V_-`, `V_lo` stepped together.
pub fn evolve_gauged(state: &GaugeState, t_final: f64, dt: f64) -> Result<Trajectory> {
    evolve_gauged_with(state, t_final, dt, &EvolveOptions::default())
}

pub fn evolve_gauged_with(
    state: &GaugeState,
    t_final: f64,
    dt: f64,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    let grid = *state.grid();
    let v_sup = state.v.to_physical().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let w_sup = state.w.to_physical().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let rate = 4.0 * grid.xi_max() * (w_sup + v_sup * v_sup * grid.xi_max());
    let mut traj = Trajectory::new(grid, FieldTag::V, dt, "if-rk4");
    integrate(&state.v, t_final, dt, opts, rate, gauge::gauged_rhs, &mut traj)?;
    Ok(traj)
}

/// `||d_xi ~u(t)||` with `~u = e^{it omega} ^u`, centered differences on the
/// lattice and one-sided differences at the ends.
pub fn weighted_norm_diagnostic(u: &SpectralField, t: f64) -> f64 {
    let grid = *u.grid();
    let profile = to_profile(u, t);
    let d = lattice_xi_derivative(&profile, grid.dxi());
    (d.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spectral_weight()).sqrt()
}

/// Centered first differences with one-sided ends; the stencil used by
/// [`weighted_norm_diagnostic`].
pub fn lattice_xi_derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .map(|i| match i {
            0 => (values[1] - values[0]) / h,
            _ if i == n - 1 => (values[n - 1] - values[n - 2]) / h,
            _ => (values[i + 1] - values[i - 1]) / (2.0 * h),
        })
        .collect()
}

/// Profile coefficients `e^{it omega(xi)} ^f(xi)`.
pub fn to_profile(field: &SpectralField, t: f64) -> Vec<Complex64> {
    linear_propagator(field, -t).into_coeffs()
}

pub fn from_profile(profile: &SpectralField, t: f64) -> SpectralField {
    linear_propagator(profile, t)
}

/// Largest per-step amplification of the linearised RK4 map at `y0`,
/// estimated by power iteration on finite differences.
fn probe_amplification<F>(y0: &SpectralField, dt: f64, rhs: &F) -> Result<f64>
where
    F: Fn(&SpectralField) -> Result<SpectralField>,
{
    let grid = *y0.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let noise = (0..grid.n_points())
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let mut delta = SpectralField::from_coeffs(grid, noise)?;
    let base = rk4_step(y0, 0.0, dt, rhs)?;
    let eps = 1e-7 * y0.l2_norm().max(1e-3);
    let mut growth = 1.0;
    for _ in 0..PROBE_ITERATIONS {
        let scale = eps / delta.l2_norm();
        let perturbed = y0 + &(&delta * scale);
        let stepped = rk4_step(&perturbed, 0.0, dt, rhs)?;
        let diff = &stepped - &base;
        growth = diff.l2_norm() / eps;
        if !growth.is_finite() {
            return Ok(f64::INFINITY);
        }
        delta = diff;
    }
    Ok(growth)
}

fn profile_rhs<F>(t: f64, y: &SpectralField, rhs: &F) -> Result<SpectralField>
where
    F: Fn(&SpectralField) -> Result<SpectralField>,
{
    let state = from_profile(y, t);
    Ok(SpectralField::from_coeffs(*y.grid(), to_profile(&rhs(&state)?, t))?)
}

fn rk4_step<F>(y: &SpectralField, t: f64, dt: f64, rhs: &F) -> Result<SpectralField>
where
    F: Fn(&SpectralField) -> Result<SpectralField>,
{
    let k1 = profile_rhs(t, y, rhs)?;
    let k2 = profile_rhs(t + 0.5 * dt, &(y + &(&k1 * (0.5 * dt))), rhs)?;
    let k3 = profile_rhs(t + 0.5 * dt, &(y + &(&k2 * (0.5 * dt))), rhs)?;
    let k4 = profile_rhs(t + dt, &(y + &(&k3 * dt)), rhs)?;
    let incr = (k1 + k4) + (&k2 + &k3) * 2.0;
    Ok(y + &(incr * (dt / 6.0)))
}

fn integrate<F>(
    y0: &SpectralField,
    t_final: f64,
    dt: f64,
    opts: &EvolveOptions,
    rate: f64,
    rhs: F,
    traj: &mut Trajectory,
) -> Result<()>
where
    F: Fn(&SpectralField) -> Result<SpectralField>,
{
    if !(dt > 0.0 && dt.is_finite()) || !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need dt > 0 and T >= 0, got dt = {dt}, T = {t_final}"
        )));
    }
    if opts.save_every == 0 {
        return Err(Error::InvalidArgument("save_every must be positive".into()));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let step_dt = if steps == 0 { dt } else { t_final / steps as f64 };
    let bound = if rate > 0.0 { RK4_IMAG_LIMIT / rate } else { f64::INFINITY };
    if opts.probe && steps > 0 {
        let growth = probe_amplification(y0, step_dt, &rhs)?;
        log::debug!("stability probe: dt = {step_dt:e}, amplification {growth:.6}");
        if growth > PROBE_GROWTH {
            return Err(Error::StepTooLarge { dt: step_dt, bound });
        }
    }
    traj.dt = step_dt;
    traj.push(0.0, y0.clone());
    let mut y = y0.clone();
    for step in 1..=steps {
        let t0 = (step - 1) as f64 * step_dt;
        y = rk4_step(&y, t0, step_dt, &rhs).map_err(|e| match e {
            Error::GaugeNotInvertible { .. } => e,
            other => Error::NumericalFailure {
                step,
                time: t0,
                reason: other.to_string(),
            },
        })?;
        if !y.is_finite() {
            return Err(Error::NumericalFailure {
                step,
                time: step as f64 * step_dt,
                reason: "non-finite coefficients".into(),
            });
        }
        if step % opts.save_every == 0 || step == steps {
            let t = step as f64 * step_dt;
            traj.push(t, from_profile(&y, t));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
