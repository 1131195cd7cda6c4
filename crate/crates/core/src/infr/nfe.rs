//! Truncated normal form equation along a gauged trajectory.
//!
//! With `~V` the profile, the identity
//! `~V(t) - ~V(0) = int N_1^(1) + sum_{j=2}^{J} ([N_0^(j)]_0^t + int N_1^(j)) + int N_2^(J)`
//! holds for every `J`. The level-`J` truncation drops the last integral; the
//! residual is what remains on the high bands. Time integrals use a Filon
//! rule: the factor `e^{is Phi}` is integrated exactly against the linear
//! interpolant of the remaining product of profiles.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use super::lattice::{active_union, enumerate, Composition};
use super::operators::ACTIVE_REL;
use super::params::InfrParams;
use super::term::{gauged_system, RhsFamily};
use super::tree::regions_meet;
use crate::dynamics::{to_profile, FieldTag, Trajectory};
use crate::gauge::{gauge_inverse, gauged_rhs};
use crate::spectral::{Grid, Region, SpectralField};
use crate::{Error, Result};

pub const DEFAULT_J_MAX: usize = 3;

#[derive(Clone, Debug)]
pub struct NfeOptions {
    pub j_max: usize,
    /// Permit `j_max > 3`.
    pub allow_deep: bool,
    /// Sobolev index of the residual norm; `None` means `s + 1`.
    pub norm_index: Option<f64>,
}

impl Default for NfeOptions {
    fn default() -> Self {
        Self {
            j_max: 2,
            allow_deep: false,
            norm_index: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NfeLevel {
    pub level: usize,
    /// `|| P_hi(~V(t) - ~V(0) - truncation_J) ||`.
    pub residual: f64,
    /// `|| P_hi int N_2^(J) ||`, the omitted term evaluated directly.
    pub explicit_remainder: f64,
    /// Residual after re-adding the omitted term.
    pub closure_error: f64,
    /// Same closure computed from every second snapshot, minus the above;
    /// bounds the time-quadrature error of the closure.
    pub quadrature_error_estimate: f64,
    /// The step-`J` nonresonant region is empty on this lattice.
    pub nonresonant_empty: bool,
    pub compositions: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct NfeReport {
    pub t_final: f64,
    pub snapshots: usize,
    pub mu: f64,
    pub norm_index: f64,
    pub increment_norm: f64,
    pub levels: Vec<NfeLevel>,
}

impl NfeReport {
    pub fn residuals(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.residual).collect()
    }
}

/// Profiles and profile derivatives at the snapshot times.
struct Samples {
    grid: Grid,
    times: Vec<f64>,
    /// `[snapshot][lattice]`
    v: Vec<Vec<Complex64>>,
    dv: Vec<Vec<Complex64>>,
    v_active: Vec<usize>,
    dv_active: Vec<usize>,
}

impl Samples {
    fn new(traj: &Trajectory, stride: usize) -> Result<Self> {
        let grid = *traj.grid();
        let idx: Vec<usize> = (0..traj.len()).step_by(stride).collect();
        if *idx.last().unwrap() != traj.len() - 1 {
            return Err(Error::InvalidArgument(
                "snapshot count incompatible with subsampling".into(),
            ));
        }
        let mut times = Vec::new();
        let mut v = Vec::new();
        let mut dv = Vec::new();
        for &i in &idx {
            let t = traj.times()[i];
            let field = &traj.snapshots()[i];
            times.push(t);
            v.push(to_profile(field, t));
            dv.push(to_profile(&gauged_rhs(field)?, t));
        }
        let v_active = active_union(v.iter().map(|c| c.as_slice()), ACTIVE_REL);
        let dv_active = active_union(dv.iter().map(|c| c.as_slice()), ACTIVE_REL);
        Ok(Self {
            grid,
            times,
            v,
            dv,
            v_active,
            dv_active,
        })
    }

    fn len(&self) -> usize {
        self.times.len()
    }
}

/// `(int_0^1 (1-tau) e^{i x tau}, int_0^1 tau e^{i x tau})`.
fn filon_weights(x: f64) -> (Complex64, Complex64) {
    let i = Complex64::new(0.0, 1.0);
    if x.abs() < 1e-3 {
        let x2 = x * x;
        let e = Complex64::new(1.0 - x2 / 6.0, x / 2.0 - x * x2 / 24.0);
        let g1 = Complex64::new(0.5 - x2 / 8.0, x / 3.0 - x * x2 / 30.0);
        return (e - g1, g1);
    }
    let ex = Complex64::from_polar(1.0, x);
    let e = (ex - 1.0) / (i * x);
    let g1 = ex / (i * x) + (ex - 1.0) / (x * x);
    (e - g1, g1)
}

/// How a composition is evaluated in time.
#[derive(Clone, Copy)]
enum Eval {
    /// `int_0^T e^{is Phi} (...) ds`
    Integral,
    /// `e^{is Phi} (...)` at one snapshot.
    At(usize),
}

/// Sum over lattice tuples of `comp`: `pref(phases) * factor * e^{is Phi_last}
/// * prod leaves`, integrated or sampled per `mode`. `dt_leaf` selects the leaf
/// fed by the profile derivative. `pref` returns `None` to skip a tuple.
fn accumulate(
    samples: &Samples,
    comp: &Composition,
    dt_leaf: Option<(usize, usize)>,
    mode: Eval,
    pref: &dyn Fn(&[f64]) -> Option<Complex64>,
    out: &mut [Complex64],
) {
    let leaves = comp.leaves();
    let sources: Vec<&Vec<Vec<Complex64>>> = leaves
        .iter()
        .map(|l| {
            if dt_leaf == Some((l.node, l.slot)) {
                &samples.dv
            } else {
                &samples.v
            }
        })
        .collect();
    let cand: Vec<Vec<usize>> = leaves
        .iter()
        .map(|l| {
            if dt_leaf == Some((l.node, l.slot)) {
                samples.dv_active.clone()
            } else {
                samples.v_active.clone()
            }
        })
        .collect();
    let m = samples.len();
    let mut cache: HashMap<u64, Vec<Complex64>> = HashMap::new();
    let mut prod = vec![Complex64::new(0.0, 0.0); m];
    let times = &samples.times;
    enumerate(comp, &samples.grid, &cand, |t| {
        let Some(p) = pref(t.phases) else { return };
        let phi = *t.phases.last().unwrap();
        let coef = p * t.factor;
        let leaf_value = |snap: usize| {
            let mut v = coef;
            for ((l, src), &i) in leaves.iter().zip(&sources).zip(t.leaves) {
                let c = src[snap][i];
                v *= if l.conj { c.conj() } else { c };
            }
            v
        };
        let value = match mode {
            Eval::At(snap) => leaf_value(snap) * Complex64::from_polar(1.0, times[snap] * phi),
            Eval::Integral => {
                let w = cache.entry(phi.to_bits()).or_insert_with(|| {
                    let mut w = vec![Complex64::new(0.0, 0.0); m];
                    for a in 0..m - 1 {
                        let h = times[a + 1] - times[a];
                        let (g0, g1) = filon_weights(h * phi);
                        let e = Complex64::from_polar(h, times[a] * phi);
                        w[a] += e * g0;
                        w[a + 1] += e * g1;
                    }
                    w
                });
                for (k, slot) in prod.iter_mut().enumerate() {
                    *slot = leaf_value(k);
                }
                prod.iter().zip(w.iter()).map(|(a, b)| a * b).sum()
            }
        };
        out[t.out] += value;
    });
}

/// Phase-condition bookkeeping for one composition depth.
struct Levels<'a> {
    params: &'a InfrParams,
}

impl Levels<'_> {
    /// Steps `1..=upto` are nonresonant.
    fn nonresonant_through(&self, phases: &[f64], upto: usize) -> bool {
        (1..=upto).all(|j| phases[j - 1].abs() >= self.params.threshold(j, phases[0]))
    }

    fn denominators(&self, phases: &[f64], upto: usize) -> Complex64 {
        let i = Complex64::new(0.0, 1.0);
        phases[..upto].iter().fold(Complex64::new(1.0, 0.0), |acc, &p| acc / (i * p))
    }

    /// The step-`j` nonresonant set is empty for every composition whose
    /// phases are bounded by `bound`.
    fn empty(&self, j: usize, bound: f64) -> bool {
        let floor = if j == 1 {
            self.params.n_threshold
        } else {
            self.params.threshold(j, self.params.n_threshold)
        };
        floor > bound
    }
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Depth-`d` substitution compositions.
fn compositions(system: &[RhsFamily], depth: usize) -> Vec<Composition> {
    let mut comps: Vec<Composition> = system
        .iter()
        .flat_map(|f| f.monomials.iter())
        .map(|m| Composition::single(m.clone()))
        .collect();
    for _ in 1..depth {
        let mut next = Vec::new();
        for c in &comps {
            for leaf in c.leaves() {
                for m in system.iter().flat_map(|f| f.monomials.iter()) {
                    if regions_meet(&leaf.regions, &[m.output]) {
                        next.push(c.substitute(leaf.node, leaf.slot, m.clone()));
                    }
                }
            }
        }
        comps = next;
    }
    comps
}

struct Pieces {
    /// `int N_1^(1)`
    res1: Vec<Complex64>,
    /// `int N_2^(1)`
    non1: Vec<Complex64>,
    /// per `j >= 2`: `[N_0^(j)]_0^t + int R^(j)` and `int N_2^(j)`
    step: Vec<(Vec<Complex64>, Vec<Complex64>)>,
    empty: Vec<bool>,
    counts: Vec<usize>,
}

fn pieces(samples: &Samples, system: &[RhsFamily], params: &InfrParams, j_max: usize) -> Pieces {
    let n = samples.grid.n_points();
    let zero = || vec![Complex64::new(0.0, 0.0); n];
    let lv = Levels { params };
    let last = samples.len() - 1;
    let n_thr = params.n_threshold;

    let roots = compositions(system, 1);
    let mut res1 = zero();
    let mut non1 = zero();
    for c in &roots {
        accumulate(samples, c, None, Eval::Integral, &|p| (p[0].abs() < n_thr).then_some(Complex64::new(1.0, 0.0)), &mut res1);
        accumulate(samples, c, None, Eval::Integral, &|p| (p[0].abs() >= n_thr).then_some(Complex64::new(1.0, 0.0)), &mut non1);
    }
    let mut step = Vec::new();
    let mut empty = vec![roots.iter().all(|c| lv.empty(1, c.phase_bound(&samples.grid)))];
    let mut counts = vec![roots.len()];
    let mut prev = roots;
    for j in 2..=j_max {
        let d = j - 1;
        let mut bnd_int = zero();
        let current = compositions(system, j);
        let mut non = zero();
        if !empty[d - 1] {
            for c in &prev {
                // boundary N_0^(j) at t and 0
                let mut at_t = zero();
                let mut at_0 = zero();
                let pref = |p: &[f64]| {
                    lv.nonresonant_through(p, d)
                        .then(|| lv.denominators(p, d) * sign(d - 1))
                };
                accumulate(samples, c, None, Eval::At(last), &pref, &mut at_t);
                accumulate(samples, c, None, Eval::At(0), &pref, &mut at_0);
                for k in 0..n {
                    bnd_int[k] += at_t[k] - at_0[k];
                }
                // remainder R^(j): one leaf differentiated
                let pref_r = |p: &[f64]| {
                    lv.nonresonant_through(p, d)
                        .then(|| lv.denominators(p, d) * sign(d))
                };
                for leaf in c.leaves() {
                    accumulate(samples, c, Some((leaf.node, leaf.slot)), Eval::Integral, &pref_r, &mut bnd_int);
                }
            }
        }
        let is_empty = empty[d - 1] || current.iter().all(|c| lv.empty(j, c.phase_bound(&samples.grid)));
        if !is_empty {
            let pref_n = |p: &[f64]| {
                lv.nonresonant_through(p, j)
                    .then(|| lv.denominators(p, d) * sign(d))
            };
            for c in &current {
                accumulate(samples, c, None, Eval::Integral, &pref_n, &mut non);
            }
        }
        step.push((bnd_int, non));
        empty.push(is_empty);
        counts.push(current.len());
        prev = current;
    }
    Pieces {
        res1,
        non1,
        step,
        empty,
        counts,
    }
}

fn hi_norm(grid: Grid, c: &[Complex64], index: f64) -> f64 {
    SpectralField::from_coeffs(grid, c.to_vec())
        .expect("lattice length")
        .project(Region::Hi)
        .sobolev_norm(index)
}

/// Per-level truncation residuals and closure errors.
fn closures(samples: &Samples, p: &Pieces, j_max: usize) -> Vec<(Vec<Complex64>, Vec<Complex64>)> {
    let n = samples.grid.n_points();
    let last = samples.len() - 1;
    let incr: Vec<Complex64> = (0..n).map(|k| samples.v[last][k] - samples.v[0][k]).collect();
    let mut out = Vec::new();
    // residual_1 = incr - int N_1^(1); omitted = int N_2^(1)
    let mut trunc = p.res1.clone();
    let mut omitted = p.non1.clone();
    for j in 1..=j_max {
        if j >= 2 {
            let (bnd_int, non) = &p.step[j - 2];
            for k in 0..n {
                trunc[k] += bnd_int[k] - non[k];
            }
            omitted = non.clone();
        }
        let residual: Vec<Complex64> = (0..n).map(|k| incr[k] - trunc[k]).collect();
        let closure: Vec<Complex64> = (0..n).map(|k| residual[k] - omitted[k]).collect();
        out.push((residual, closure));
    }
    out
}

/// Residuals of the level-`J` truncations, `J = 1..=j_max`.
pub fn nfe_residual(traj: &Trajectory, params: &InfrParams, opts: &NfeOptions) -> Result<NfeReport> {
    if traj.tag() != FieldTag::V {
        return Err(Error::InvalidArgument("nfe_residual needs a gauged trajectory".into()));
    }
    if opts.j_max == 0 || (opts.j_max > DEFAULT_J_MAX && !opts.allow_deep) {
        return Err(Error::InvalidArgument(format!(
            "J_max = {} outside 1..=3 (set allow_deep to override)",
            opts.j_max
        )));
    }
    if traj.len() < 3 {
        return Err(Error::InvalidArgument("need at least three snapshots".into()));
    }
    let grid = *traj.grid();
    let index = opts.norm_index.unwrap_or(params.s + 1.0);
    let u0 = gauge_inverse(&traj.snapshots()[0])?;
    let mu = u0.l2_norm().powi(2) / (8.0 * grid.half_length());
    let system = gauged_system(Some(mu));

    let fine = Samples::new(traj, 1)?;
    let pf = pieces(&fine, &system, params, opts.j_max);
    let cf = closures(&fine, &pf, opts.j_max);
    let stride_ok = (traj.len() - 1) % 2 == 0 && traj.len() >= 5;
    let coarse_closures = if stride_ok {
        let coarse = Samples::new(traj, 2)?;
        let pc = pieces(&coarse, &system, params, opts.j_max);
        Some(closures(&coarse, &pc, opts.j_max))
    } else {
        None
    };
    let last = fine.len() - 1;
    let incr: Vec<Complex64> = (0..grid.n_points()).map(|k| fine.v[last][k] - fine.v[0][k]).collect();
    let mut levels = Vec::new();
    for j in 1..=opts.j_max {
        let (residual, closure) = &cf[j - 1];
        let omitted = if j == 1 { &pf.non1 } else { &pf.step[j - 2].1 };
        let quad = coarse_closures.as_ref().map_or(f64::NAN, |cc| {
            let d: Vec<Complex64> = cc[j - 1].1.iter().zip(closure).map(|(a, b)| a - b).collect();
            hi_norm(grid, &d, index)
        });
        levels.push(NfeLevel {
            level: j,
            residual: hi_norm(grid, residual, index),
            explicit_remainder: hi_norm(grid, omitted, index),
            closure_error: hi_norm(grid, closure, index),
            quadrature_error_estimate: quad,
            nonresonant_empty: pf.empty[j - 1],
            compositions: pf.counts[j - 1],
        });
    }
    Ok(NfeReport {
        t_final: traj.last().0,
        snapshots: traj.len(),
        mu,
        norm_index: index,
        increment_norm: hi_norm(grid, &incr, index),
        levels,
    })
}
