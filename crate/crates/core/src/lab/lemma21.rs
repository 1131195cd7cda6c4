//! Size of the profile time derivative on the high bands against the data
//! amplitude.
//!
//! Data `u_0 = h U` with a fixed rough shape `U` whose antiderivative has
//! unit `H^1` norm. Along each trajectory the sup over time of
//! `sup_xi |(~V_±)_t|` is compared with `a^2 + a^3`, `a = sup_t ||V||_{H^1}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{evolve_gauged_stable, rough_data};
use super::report::{Bound, Check, EstimateReport, Sample};
use crate::gauge::{gauge_forward, profile_time_derivative_sup, GaugeState};
use crate::spectral::Grid;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Lemma21Options {
    pub n_points: usize,
    pub half_length: f64,
    pub seed: u64,
    pub dt: f64,
    /// Cap on `dt xi_max^2`.
    pub phase_step: f64,
    pub sample_every: f64,
    /// Amplitudes up to this enter the power fit.
    pub fit_below: f64,
    pub expected_power: f64,
    pub power_tol: f64,
    /// Amplitudes up to this must share one constant.
    pub constant_below: f64,
    /// Allowed relative spread of the constant about its geometric mean.
    pub constant_tol: f64,
}

impl Default for Lemma21Options {
    fn default() -> Self {
        Lemma21Options {
            n_points: 256,
            half_length: 2.0 * std::f64::consts::PI,
            seed: 21,
            dt: 2e-3,
            phase_step: 6.0,
            sample_every: 0.01,
            fit_below: 0.2,
            expected_power: 2.0,
            power_tol: 0.3,
            constant_below: 0.5,
            constant_tol: 0.5,
        }
    }
}

struct Cell {
    h: f64,
    /// `sup_t sup_xi |(~V_±)_t|`.
    derivative: f64,
    /// `sup_t ||V||_{H^1}`.
    size: f64,
}

fn measure(h: f64, s: f64, t_final: f64, opts: &Lemma21Options) -> Result<Cell> {
    let grid = Grid::new(opts.n_points, opts.half_length)?;
    let shape = rough_data(grid, s, 1.0, opts.seed);
    let norm = shape.antiderivative().sobolev_norm(1.0);
    let u0 = &shape * (h / norm);
    let dt = opts.dt.min(opts.phase_step / grid.xi_max().powi(2));
    let traj = evolve_gauged_stable(&gauge_forward(&u0), t_final, dt, opts.sample_every)?;
    let mut derivative: f64 = 0.0;
    let mut size: f64 = 0.0;
    for v in traj.snapshots() {
        size = size.max(v.sobolev_norm(1.0));
        derivative = derivative.max(profile_time_derivative_sup(&GaugeState::from_gauge(v.clone())?));
    }
    Ok(Cell { h, derivative, size })
}

/// Sweeps `amplitudes`, fits the power of the derivative sup in `h` over
/// `0 < h <= fit_below`, and checks that `D / (a^2 + a^3)` stays within
/// `constant_tol` of its geometric mean over `0 < h <= constant_below`.
/// The data shape is rough random data of regularity `s`.
pub fn lemma21_experiment(amplitudes: &[f64], s: f64, t_final: f64, opts: &Lemma21Options) -> Result<EstimateReport> {
    if amplitudes.iter().any(|h| !(*h >= 0.0)) {
        return Err(Error::InvalidArgument("amplitudes must be nonnegative".into()));
    }
    let cells: Vec<Cell> = amplitudes
        .par_iter()
        .map(|&h| measure(h, s, t_final, opts))
        .collect::<Result<_>>()?;

    let mut rep = EstimateReport::new("lemma21");
    rep.seed = Some(opts.seed);
    rep.params.s = vec![s];
    rep.params.n = vec![opts.n_points];
    rep.params.amplitudes = amplitudes.to_vec();
    rep.notes.push(format!(
        "T = {t_final}, L = {}, data shape normalised to ||F||_(H^1) = 1",
        opts.half_length
    ));
    let mut constants = Vec::new();
    for c in &cells {
        let push = |rep: &mut EstimateReport, series: &str, value: f64| {
            rep.samples.push(Sample {
                s: Some(s),
                n: Some(opts.n_points),
                amplitude: Some(c.h),
                t: Some(t_final),
                ..Sample::new(series, value)
            })
        };
        push(&mut rep, "derivative-sup", c.derivative);
        push(&mut rep, "v-h1", c.size);
        if c.h > 0.0 && c.h <= opts.constant_below {
            let k = c.derivative / (c.size.powi(2) + c.size.powi(3));
            push(&mut rep, "constant", k);
            constants.push(k);
        }
        if c.h > 0.0 && c.h <= opts.fit_below {
            push(&mut rep, "derivative-small", c.derivative);
        }
    }
    if cells.iter().any(|c| c.h == 0.0 && c.derivative != 0.0) {
        rep.notes.push("nonzero derivative at zero amplitude".into());
    }
    let fit = rep.fit_series("derivative-small", "amplitude", |s| s.amplitude);
    rep.push_check(Check::exponent(
        "small-amplitude power",
        "derivative-small",
        fit.as_ref(),
        Bound::Within {
            lo: opts.expected_power - opts.power_tol,
            hi: opts.expected_power + opts.power_tol,
        },
    ));
    let spread = if constants.is_empty() {
        f64::NAN
    } else {
        let centre = (constants.iter().map(|k| k.ln()).sum::<f64>() / constants.len() as f64).exp();
        rep.oracles.push(format!("fitted constant C = {centre:.6e} (geometric mean)"));
        constants.iter().map(|k| (k / centre - 1.0).abs()).fold(0.0, f64::max)
    };
    rep.push_check(Check::at_most("relative spread of C", spread, opts.constant_tol).for_series("constant"));
    if let Some(zero) = cells.iter().find(|c| c.h == 0.0) {
        rep.push_check(Check::at_most("derivative at zero amplitude", zero.derivative, 0.0));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_gives_zero() {
        let opts = Lemma21Options {
            n_points: 64,
            ..Default::default()
        };
        let rep = lemma21_experiment(&[0.0], 0.5, 0.05, &opts).unwrap();
        let d = rep.samples.iter().find(|s| s.series == "derivative-sup").unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn quadratic_at_small_amplitude() {
        let opts = Lemma21Options {
            n_points: 128,
            ..Default::default()
        };
        let rep = lemma21_experiment(&[0.05, 0.1, 0.2, 0.5], 0.5, 0.1, &opts).unwrap();
        assert!(rep.passed(), "{}", rep.summary());
    }
}
