//! Lipschitz dependence of the gauged flow on the data.
//!
//! Two rough data `u_0`, `v_0 = u_0 + lambda P` are evolved and the ratio
//! `||G(u(t)) - G(v(t))||_{H^{s+1}} / ||G(u_0) - G(v_0)||_{H^{s+1}}` is
//! tracked; `lambda` is tuned by secant steps so that the denominator hits
//! the requested perturbation size.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{evolve_gauged_stable, rough_data};
use super::report::{Check, EstimateReport, Sample};
use crate::dynamics::Trajectory;
use crate::gauge::{gauge_forward, gauge_map, periodization_rate, remove_periodization_phase};
use crate::spectral::{Grid, SpectralField};
use crate::{Error, Result};

const SECANT_ITERATIONS: usize = 30;
const SECANT_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LipschitzOptions {
    pub half_length: f64,
    /// Scale of the antiderivative spectrum of `u_0`.
    pub amplitude: f64,
    pub dt: f64,
    /// Cap on `dt xi_max^2`, as in the smoothing experiment.
    pub phase_step: f64,
    pub sample_every: f64,
    /// Upper limit on `sup_t ratio`.
    pub c_max: f64,
    /// Allowed factor between sup ratios across resolutions and sizes.
    pub stability_factor: f64,
}

impl Default for LipschitzOptions {
    fn default() -> Self {
        LipschitzOptions {
            half_length: 2.0 * std::f64::consts::PI,
            amplitude: 2.0,
            dt: 2e-3,
            phase_step: 6.0,
            sample_every: 0.01,
            c_max: 10.0,
            stability_factor: 2.0,
        }
    }
}

/// `lambda` with `||G(u + lambda p) - G(u)||_{H^r} = target`, by secant steps
/// from the linear guess `G ~ -iF/2`.
pub fn scale_perturbation(u: &SpectralField, p: &SpectralField, r: f64, target: f64) -> Result<f64> {
    if target == 0.0 {
        return Ok(0.0);
    }
    let g0 = gauge_map(u);
    let gap = |lambda: f64| (&gauge_map(&(u + &(p * lambda))) - &g0).sobolev_norm(r) - target;
    let slope = 0.5 * p.antiderivative().sobolev_norm(r);
    if slope == 0.0 {
        return Err(Error::InvalidArgument("perturbation direction vanishes".into()));
    }
    let (mut x0, mut f0) = (0.0, -target);
    let mut x1 = target / slope;
    let mut f1 = gap(x1);
    for _ in 0..SECANT_ITERATIONS {
        if f1.abs() <= SECANT_TOL * target {
            return Ok(x1);
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        (x0, f0) = (x1, f1);
        x1 = x2;
        f1 = gap(x1);
    }
    if f1.abs() <= 1e-4 * target {
        Ok(x1)
    } else {
        Err(Error::InvalidArgument(format!(
            "could not reach perturbation size {target}: residual {f1:e}"
        )))
    }
}

/// `W = e^{-i mu t}(1 + V) - 1` along a trajectory.
fn derotated(traj: &Trajectory, mu: f64) -> Vec<SpectralField> {
    traj.times()
        .iter()
        .zip(traj.snapshots())
        .map(|(&t, v)| remove_periodization_phase(v, mu, t))
        .collect()
}

struct Cell {
    n: usize,
    size: f64,
    times: Vec<f64>,
    ratios: Vec<f64>,
}

/// `ratio(t)`, with `0/0` read as 1.
pub fn difference_ratio(a: &[SpectralField], b: &[SpectralField], r: f64) -> Vec<f64> {
    let d0 = (&a[0] - &b[0]).sobolev_norm(r);
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = (x - y).sobolev_norm(r);
            if d0 == 0.0 {
                if d == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                d / d0
            }
        })
        .collect()
}

fn run_resolution(n: usize, seed: u64, s: f64, t_final: f64, sizes: &[f64], opts: &LipschitzOptions) -> Result<Vec<Cell>> {
    let grid = Grid::new(n, opts.half_length)?;
    let dt = opts.dt.min(opts.phase_step / grid.xi_max().powi(2));
    let u0 = rough_data(grid, s, opts.amplitude, seed);
    let p = rough_data(grid, s, 1.0, seed.wrapping_add(0x9e37_79b9));
    let evolve = |data: &SpectralField| -> Result<(Vec<f64>, Vec<SpectralField>)> {
        let state = gauge_forward(data);
        let traj = evolve_gauged_stable(&state, t_final, dt, opts.sample_every)?;
        Ok((traj.times().to_vec(), derotated(&traj, periodization_rate(&state.u))))
    };
    let (times, base) = evolve(&u0)?;
    let mut out = Vec::new();
    for &size in sizes {
        let lambda = scale_perturbation(&u0, &p, s + 1.0, size)?;
        // same dt and save pattern, so the snapshot times coincide
        let other = if lambda == 0.0 { base.clone() } else { evolve(&(&u0 + &(&p * lambda)))?.1 };
        out.push(Cell {
            n,
            size,
            times: times.clone(),
            ratios: difference_ratio(&base, &other, s + 1.0),
        });
    }
    Ok(out)
}

/// Runs every `(resolution, size)` pair from the same data and direction
/// and checks `sup_t ratio <= c_max`, and that the sup ratios agree within
/// `stability_factor` across sizes at each resolution and across
/// resolutions at each size.
pub fn lipschitz_experiment(
    seed: u64,
    s: f64,
    t_final: f64,
    perturbation_sizes: &[f64],
    resolutions: &[usize],
    opts: &LipschitzOptions,
) -> Result<EstimateReport> {
    if resolutions.is_empty() || perturbation_sizes.is_empty() {
        return Err(Error::InvalidArgument("need at least one resolution and one perturbation size".into()));
    }
    if perturbation_sizes.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidArgument("perturbation sizes must be nonnegative".into()));
    }
    let cells: Vec<Vec<Cell>> = resolutions
        .par_iter()
        .map(|&n| run_resolution(n, seed, s, t_final, perturbation_sizes, opts))
        .collect::<Result<_>>()?;
    let cells: Vec<Cell> = cells.into_iter().flatten().collect();

    let mut rep = EstimateReport::new("lipschitz");
    rep.seed = Some(seed);
    rep.params.s = vec![s];
    rep.params.n = resolutions.to_vec();
    rep.params.amplitudes = perturbation_sizes.to_vec();
    rep.oracles.push("ratio(0) = 1 by normalisation; 0/0 is read as 1".into());
    rep.notes.push(format!(
        "T = {t_final}, L = {}, data amplitude {}, snapshots every {}",
        opts.half_length, opts.amplitude, opts.sample_every
    ));
    let mut sups = Vec::new();
    for c in &cells {
        for (&t, &ratio) in c.times.iter().zip(&c.ratios) {
            rep.samples.push(Sample {
                s: Some(s),
                n: Some(c.n),
                amplitude: Some(c.size),
                t: Some(t),
                ..Sample::new("ratio", ratio)
            });
        }
        let sup = c.ratios.iter().cloned().fold(0.0, f64::max);
        rep.samples.push(Sample {
            s: Some(s),
            n: Some(c.n),
            amplitude: Some(c.size),
            ..Sample::new("sup-ratio", sup)
        });
        sups.push((c.n, c.size, sup));
    }
    let worst = sups.iter().map(|c| c.2).fold(0.0, f64::max);
    rep.push_check(Check::at_most("sup_t ratio", worst, opts.c_max).for_series("sup-ratio"));

    let spread = |pick: &dyn Fn(&(usize, f64, f64)) -> bool| {
        let vals: Vec<f64> = sups.iter().filter(|c| pick(c)).map(|c| c.2).collect();
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        if vals.len() < 2 {
            1.0
        } else {
            hi / lo
        }
    };
    let by_size = resolutions
        .iter()
        .map(|&n| spread(&|c| c.0 == n))
        .fold(1.0, f64::max);
    let by_resolution = perturbation_sizes
        .iter()
        .map(|&d| spread(&|c| c.1 == d))
        .fold(1.0, f64::max);
    rep.push_check(
        Check::at_most("sup ratio factor across perturbation sizes", by_size, opts.stability_factor).for_series("sup-ratio"),
    );
    rep.push_check(
        Check::at_most("sup ratio factor across resolutions", by_resolution, opts.stability_factor)
            .for_series("sup-ratio"),
    );
    Ok(rep)
}
