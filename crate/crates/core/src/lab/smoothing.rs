//! Nonlinear smoothing of the gauged flow.
//!
//! For rough data `V_0` exactly in `H^{s+1}` the profile remainder
//! `R(t) = ~V(t) - ~V(0)`, `~V(t) = e^{it omega} V^(t)`, is measured in
//! `H^{s+1+eps}`. If the remainder is smoother than the data its norm settles
//! as the resolution grows, while the same norm of `V_0` keeps growing at the
//! rate fixed by the prescribed tail. The constant phase `e^{i mu t}` that
//! the periodic surrogate puts on `1 + V` is divided out first; it rotates
//! the whole profile and vanishes as `L -> infinity`.
//!
//! The checks use `R` on `xi > -1`. The band `xi < -1` of `V = e^{-iF/2} - 1`
//! carries a `u^2` source and does not smooth; its counterpart is the
//! conjugate of the `+` band (`P_{-hi} conj V = conj P_{+hi} V` for real
//! `u`). Its remainder is reported as a descriptive series.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{dyadic_band_rms, evolve_gauged_stable, rough_data};
use super::report::{Bound, Check, EstimateReport, Sample};
use crate::dynamics::to_profile;
use crate::gauge::{gauge_forward, periodization_rate, remove_periodization_phase};
use crate::spectral::{Grid, Region, SpectralField};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmoothingOptions {
    pub half_length: f64,
    /// Scale of the antiderivative spectrum of the data.
    pub amplitude: f64,
    /// Largest time step; halved until the stability probe accepts.
    pub dt: f64,
    /// Cap on `dt xi_max^2`. Phases up to `xi_max^2` must be resolved for
    /// the remainder tail to converge in `dt`; stability alone allows far
    /// larger steps.
    pub phase_step: f64,
    /// Spacing of the snapshots the sup in time runs over.
    pub sample_every: f64,
    /// Lowest frequency of the dyadic tail fit.
    pub tail_from: f64,
    /// Allowed relative change of the remainder norm per doubling.
    pub stability_tol: f64,
    /// Allowed deviation of the data growth exponent from `eps - 0.01`.
    pub growth_tol: f64,
    /// Required steepening of the remainder tail over the data tail.
    pub tail_gap: f64,
}

impl Default for SmoothingOptions {
    fn default() -> Self {
        SmoothingOptions {
            half_length: 2.0 * std::f64::consts::PI,
            amplitude: 0.5,
            dt: 2e-3,
            phase_step: 6.0,
            sample_every: 0.01,
            tail_from: 4.0,
            stability_tol: 0.1,
            growth_tol: 0.1,
            tail_gap: 0.3,
        }
    }
}

struct Run {
    n: usize,
    v0: SpectralField,
    /// `(t, R(t))` on `xi > -1` at the recorded snapshots.
    remainders: Vec<(f64, SpectralField)>,
    /// `(t, P_{-hi} R(t))`.
    minus: Vec<(f64, SpectralField)>,
}

fn run(n: usize, seed: u64, s: f64, t_final: f64, opts: &SmoothingOptions) -> Result<Run> {
    let grid = Grid::new(n, opts.half_length)?;
    let u0 = rough_data(grid, s, opts.amplitude, seed);
    let state = gauge_forward(&u0);
    let dt = opts.dt.min(opts.phase_step / grid.xi_max().powi(2));
    let traj = evolve_gauged_stable(&state, t_final, dt, opts.sample_every)?;
    let mu = periodization_rate(&state.u);
    let v0 = traj.snapshots()[0].clone();
    let mut remainders = Vec::new();
    let mut minus = Vec::new();
    for (&t, v) in traj.times().iter().zip(traj.snapshots()) {
        let w = remove_periodization_phase(v, mu, t);
        let prof = SpectralField::from_coeffs(grid, to_profile(&w, t)).expect("same grid");
        let r = &prof - &v0;
        let r_minus = r.project(Region::MinusHi);
        remainders.push((t, &r - &r_minus));
        minus.push((t, r_minus));
    }
    Ok(Run { n, v0, remainders, minus })
}

/// Largest relative change between consecutive values.
fn max_relative_step(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| {
            let scale = w[0].abs().max(w[1].abs());
            if scale == 0.0 {
                0.0
            } else {
                (w[0] - w[1]).abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Runs the gauged flow from the same rough data at every resolution
/// (ascending powers of two) and checks, for each `eps`: the remainder norm
/// changes by at most `stability_tol` per doubling, the data norm grows like
/// `N^{eps - 0.01}` within `growth_tol`, and at the finest resolution the
/// dyadic tail of `R(T)` decays faster than that of `V_0` by `tail_gap`.
pub fn smoothing_experiment(
    seed: u64,
    s: f64,
    eps_list: &[f64],
    t_final: f64,
    resolutions: &[usize],
    opts: &SmoothingOptions,
) -> Result<EstimateReport> {
    if resolutions.is_empty() || resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("resolutions must be nonempty and increasing".into()));
    }
    let runs: Vec<Run> = resolutions
        .par_iter()
        .map(|&n| run(n, seed, s, t_final, opts))
        .collect::<Result<_>>()?;

    let mut rep = EstimateReport::new("smoothing");
    rep.seed = Some(seed);
    rep.params.s = vec![s];
    rep.params.eps = eps_list.to_vec();
    rep.params.n = resolutions.to_vec();
    rep.params.amplitudes = vec![opts.amplitude];
    rep.oracles.push(format!(
        "data tail |F^| = {} <xi>^-(s+1.51) fixes ||V_0||_(s+1+eps) ~ N^(eps-0.01)",
        opts.amplitude
    ));
    rep.notes.push(format!("T = {t_final}, L = {}, snapshots every {}", opts.half_length, opts.sample_every));
    let finest = runs.last().expect("nonempty");

    for &eps in eps_list {
        let r = s + 1.0 + eps;
        let mut rem_norms = Vec::new();
        for run in &runs {
            let sup = run.remainders.iter().map(|(_, f)| f.sobolev_norm(r)).fold(0.0, f64::max);
            let sup_minus = run.minus.iter().map(|(_, f)| f.sobolev_norm(r)).fold(0.0, f64::max);
            rem_norms.push(sup);
            for (series, value) in [
                ("remainder", sup),
                ("data", run.v0.sobolev_norm(r)),
                ("remainder-minus-band", sup_minus),
            ] {
                rep.samples.push(Sample {
                    s: Some(s),
                    eps: Some(eps),
                    n: Some(run.n),
                    t: Some(t_final),
                    ..Sample::new(&format!("{series}-eps{eps}"), value)
                });
            }
        }
        let change = max_relative_step(&rem_norms);
        rep.push_check(
            Check::at_most(format!("remainder H^(s+1+{eps}) change per doubling"), change, opts.stability_tol)
                .for_series(&format!("remainder-eps{eps}")),
        );
        let series = format!("data-eps{eps}");
        let fit = rep.fit_series(&series, "n", |s| s.n.map(|n| n as f64));
        let rate = eps - 0.01;
        rep.push_check(Check::exponent(
            format!("data H^(s+1+{eps}) growth exponent in N"),
            &series,
            fit.as_ref(),
            Bound::Within {
                lo: rate - opts.growth_tol,
                hi: rate + opts.growth_tol,
            },
        ));
        if runs.len() < 2 {
            rep.notes.push("single resolution: stability and growth checks are not informative".into());
        }
    }

    // tail slopes at the finest resolution and the final time
    let (t_end, r_end) = finest.remainders.last().expect("nonempty trajectory");
    let mut slopes = Vec::new();
    for (series, field) in [("tail-data", &finest.v0), ("tail-remainder", r_end)] {
        for (xi, rms) in dyadic_band_rms(field, opts.tail_from) {
            rep.samples.push(Sample {
                s: Some(s),
                n: Some(finest.n),
                t: Some(if series == "tail-data" { 0.0 } else { *t_end }),
                xi: Some(xi),
                ..Sample::new(series, rms)
            });
        }
        slopes.push(rep.fit_series(series, "xi", |s| s.xi));
    }
    let gap = match (slopes[0], slopes[1]) {
        (Some(d), Some(r)) => d.exponent - r.exponent,
        _ => f64::NAN,
    };
    let residual = slopes.iter().flatten().map(|f| f.residual).fold(0.0, f64::max);
    let mut check = Check::at_least("tail steepening (data slope - remainder slope)", gap, opts.tail_gap)
        .for_series("tail-remainder");
    check.fit_residual = Some(residual);
    check.verdict = check.evaluate();
    rep.push_check(check);
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_has_zero_remainder() {
        let opts = SmoothingOptions {
            amplitude: 0.0,
            ..Default::default()
        };
        let rep = smoothing_experiment(1, 0.5, &[0.4], 0.05, &[64, 128], &opts).unwrap();
        assert!(rep
            .samples
            .iter()
            .filter(|s| s.series.starts_with("remainder"))
            .all(|s| s.value == 0.0));
    }

    #[test]
    fn rejects_unordered_resolutions() {
        let opts = SmoothingOptions::default();
        assert!(smoothing_experiment(1, 0.5, &[0.4], 0.1, &[128, 64], &opts).is_err());
        assert!(smoothing_experiment(1, 0.5, &[0.4], 0.1, &[], &opts).is_err());
    }

    #[test]
    fn relative_steps() {
        assert_eq!(max_relative_step(&[1.0, 1.0]), 0.0);
        assert!((max_relative_step(&[1.0, 1.1, 1.0]) - 0.1 / 1.1).abs() < 1e-15);
        assert_eq!(max_relative_step(&[0.0, 0.0]), 0.0);
    }
}
