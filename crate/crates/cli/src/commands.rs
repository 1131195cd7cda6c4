//! One function per subcommand. Each returns the reports it produced; the
//! caller embeds the config, writes them and decides the exit code.

use std::path::Path;

use bo_core::dynamics::{evolve_bo_with, evolve_gauged_with, weighted_norm_diagnostic, EvolveOptions};
use bo_core::gauge::{gauge_forward, gauge_inverse};
use bo_core::infr::{cubic_term, infr_params, nfe_residual, quad_conj_term, quad_plain_term, NfeOptions, NonlinearTerm};
use bo_core::lab::{
    gaussian_derivative, integral_experiment, lemma21_experiment, lipschitz_experiment, rough_data,
    smoothing_experiment, verify_operator_estimate, Check, EstimateReport, IntegralKind, Lemma21Options,
    LipschitzOptions, Mesh, OperatorOptions, Sample, SmoothingOptions,
};
use bo_core::spectral::{Grid, Region, SpectralField};
use serde::Serialize;

use crate::config::{DataKind, RunConfig};
use crate::output;
use crate::{ConfigError, Failure};

pub const ROUND_TRIP_TOL: f64 = 1e-10;
pub const CONSISTENCY_TOL: f64 = 1e-6;

/// A report plus the file stem it is written under.
pub struct Named {
    pub stem: String,
    pub report: EstimateReport,
}

fn named(stem: impl Into<String>, report: EstimateReport) -> Named {
    Named {
        stem: stem.into(),
        report,
    }
}

/// Unwraps a field `resolve` has filled.
fn get<T: Clone>(v: &Option<T>, path: &str) -> Result<T, Failure> {
    v.clone()
        .ok_or_else(|| Failure::Config(ConfigError::new(path, "missing value")))
}

/// Core errors caused by the inputs are config errors; the rest are
/// numerical failures.
fn core_err(context: String) -> impl FnOnce(bo_core::Error) -> Failure {
    move |e| match e {
        bo_core::Error::InvalidParameters(_) | bo_core::Error::InvalidArgument(_) | bo_core::Error::InvalidGrid(_) => {
            Failure::Config(ConfigError::new(context, e.to_string()))
        }
        other => Failure::Numerical(anyhow::Error::new(other).context(context)),
    }
}

fn grid(cfg: &RunConfig) -> Result<Grid, Failure> {
    let n = get(&cfg.grid.n_points, "grid.n_points")?;
    let l = get(&cfg.grid.half_length, "grid.half_length")?;
    Grid::new(n, l).map_err(core_err("grid".into()))
}

fn save_steps(cfg: &RunConfig) -> Result<usize, Failure> {
    let dt = get(&cfg.time.dt, "time.dt")?;
    let every = get(&cfg.time.save_every, "time.save_every")?;
    Ok(((every / dt).round() as usize).max(1))
}

/// Initial data `u_0` from the data spec.
pub fn initial_data(cfg: &RunConfig, grid: Grid) -> Result<SpectralField, Failure> {
    let d = &cfg.data;
    let amp = get(&d.amplitude, "data.amplitude")?;
    Ok(match get(&d.kind, "data.kind")? {
        DataKind::GaussianDerivative => gaussian_derivative(grid, amp, get(&d.width, "data.width")?),
        DataKind::RoughRandom => rough_data(grid, get(&d.regularity, "data.regularity")?, amp, get(&d.seed, "data.seed")?),
        DataKind::CosinePair => {
            let [k1, k2] = get(&d.modes, "data.modes")?;
            let (q1, q2) = (grid.xi(grid.index_of(k1).unwrap()), grid.xi(grid.index_of(k2).unwrap()));
            SpectralField::sample(grid, |x| amp * ((q1 * x).cos() + (q2 * x + 0.3).cos())).derivative()
        }
    })
}

/// The rough-data experiments build their own data of regularity `s`.
fn require_rough(cfg: &RunConfig) -> Result<(), Failure> {
    if cfg.data.kind != Some(DataKind::RoughRandom) {
        return Err(Failure::Config(ConfigError::new("data.kind", "this experiment uses rough-random data")));
    }
    if cfg.data.regularity.is_some() {
        return Err(Failure::Config(ConfigError::new(
            "data.regularity",
            "this experiment draws data of regularity infr.s; leave unset",
        )));
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<Named>, Failure> {
    let grid = grid(cfg)?;
    let u0 = initial_data(cfg, grid)?;
    let (t_final, dt) = (get(&cfg.time.t_final, "time.t_final")?, get(&cfg.time.dt, "time.dt")?);
    let opts = EvolveOptions {
        save_every: save_steps(cfg)?,
        ..Default::default()
    };
    let cell = format!("evolve_bo (n = {}, L = {}, dt = {dt})", grid.n_points(), grid.half_length());
    let traj = evolve_bo_with(&u0, t_final, dt, &opts).map_err(core_err(cell))?;
    output::write_trajectory(&out.join("trajectory"), &traj).map_err(Failure::Numerical)?;

    let mut rep = EstimateReport::new("simulate");
    rep.seed = cfg.data.seed;
    rep.params.n = vec![grid.n_points()];
    rep.params.amplitudes = vec![get(&cfg.data.amplitude, "data.amplitude")?];
    let m0 = u0.l2_norm();
    let mut drift: f64 = 0.0;
    for (&t, u) in traj.times().iter().zip(traj.snapshots()) {
        let m = u.l2_norm();
        drift = drift.max((m - m0).abs() / m0.max(f64::MIN_POSITIVE));
        for (series, value) in [
            ("l2-norm", m),
            ("weighted-norm", weighted_norm_diagnostic(u, t)),
            ("zero-mode", u.coeff(0).norm()),
        ] {
            rep.samples.push(Sample {
                n: Some(grid.n_points()),
                t: Some(t),
                ..Sample::new(series, value)
            });
        }
    }
    rep.notes.push(format!(
        "{} snapshots, step {:e}, relative L2 drift {drift:.3e}; trajectory in {}",
        traj.len(),
        traj.dt(),
        out.join("trajectory").display()
    ));
    Ok(vec![named("simulate", rep)])
}

pub fn gauge_check(cfg: &RunConfig) -> Result<Vec<Named>, Failure> {
    let grid = grid(cfg)?;
    let u0 = initial_data(cfg, grid)?;
    let s = get(&cfg.infr.s, "infr.s")?;
    let (t_final, dt) = (get(&cfg.time.t_final, "time.t_final")?, get(&cfg.time.dt, "time.dt")?);

    let state = gauge_forward(&u0);
    let back = gauge_inverse(&state.v).map_err(core_err("gauge_inverse".into()))?;
    let rel = (&back - &u0).l2_norm() / u0.l2_norm().max(f64::MIN_POSITIVE);

    let opts = EvolveOptions {
        save_every: usize::MAX,
        ..Default::default()
    };
    let cell = format!("n = {}, L = {}, dt = {dt}", grid.n_points(), grid.half_length());
    let u = evolve_bo_with(&u0, t_final, dt, &opts).map_err(core_err(format!("evolve_bo ({cell})")))?;
    let v = evolve_gauged_with(&state, t_final, dt, &opts).map_err(core_err(format!("evolve_gauged ({cell})")))?;
    let dist = (v.last().1 - &gauge_forward(u.last().1).v).sobolev_norm(s + 1.0);

    let mut rep = EstimateReport::new("gauge-check");
    rep.seed = cfg.data.seed;
    rep.params.s = vec![s];
    rep.params.n = vec![grid.n_points()];
    rep.samples.push(Sample {
        n: Some(grid.n_points()),
        ..Sample::new("round-trip", rel)
    });
    rep.samples.push(Sample {
        s: Some(s),
        n: Some(grid.n_points()),
        t: Some(t_final),
        ..Sample::new("consistency", dist)
    });
    rep.oracles.push("G^-1(G(u)) = u; gauged flow of G(u_0) = G of the direct flow".into());
    rep.push_check(Check::at_most("round-trip relative error", rel, ROUND_TRIP_TOL).for_series("round-trip"));
    rep.push_check(
        Check::at_most("gauged vs gauge of direct flow, H^(s+1) distance", dist, CONSISTENCY_TOL)
            .for_series("consistency"),
    );
    Ok(vec![named("gauge-check", rep)])
}

#[derive(Serialize)]
struct ParamsFile<'a> {
    config: serde_json::Value,
    params: &'a bo_core::infr::InfrParams,
    c: Vec<f64>,
}

/// Rows `(quantity, value)` of the parameter table.
pub fn params_table(p: &bo_core::infr::InfrParams, j_max: usize) -> Vec<(String, f64)> {
    let mut rows = vec![
        ("s".to_string(), p.s),
        ("eps".into(), p.eps),
        ("gamma_quad".into(), p.gamma_quad),
        ("gamma_cubic".into(), p.gamma_cubic),
        ("gamma".into(), p.gamma),
        ("beta".into(), p.beta),
        ("sigma".into(), p.sigma),
        ("theta".into(), p.theta),
        ("delta".into(), p.delta),
        ("N_threshold".into(), p.n_threshold),
    ];
    rows.extend((1..=j_max).map(|j| (format!("c_{j}"), p.c(j))));
    rows
}

pub fn params(cfg: &RunConfig, out: &Path) -> Result<Vec<Named>, Failure> {
    let s = get(&cfg.infr.s, "infr.s")?;
    let eps = get(&cfg.infr.eps, "infr.eps")?;
    let p = infr_params(s, eps)
        .and_then(|p| p.with_threshold(cfg.infr.n_threshold.unwrap_or(1e3)))
        .and_then(|p| p.with_c_scale(cfg.infr.c_scale.unwrap_or(1.0)))
        .map_err(core_err("infr".into()))?;
    let rows = params_table(&p, 3);
    let mut text = String::from("quantity,value\n");
    for (name, value) in &rows {
        println!("{name:<12} {value}");
        text.push_str(&format!("{name},{value}\n"));
    }
    for t in &p.terms {
        let show = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
        println!(
            "term {:<8} gamma {} sigma {} theta {} delta {}",
            t.term,
            t.gamma,
            show(t.sigma),
            show(t.theta),
            show(t.delta)
        );
    }
    output::write_atomic(&out.join("params.csv"), text.as_bytes()).map_err(Failure::Numerical)?;
    let file = ParamsFile {
        config: cfg.to_json(),
        params: &p,
        c: (1..=3).map(|j| p.c(j)).collect(),
    };
    output::write_json(&out.join("params.json"), &file).map_err(Failure::Numerical)?;
    Ok(Vec::new())
}

pub fn term_by_name(name: &str) -> Option<NonlinearTerm> {
    Some(match name {
        "Q+" | "Q+:b" => quad_plain_term(Region::PlusHi),
        "Q+:a" => quad_conj_term(Region::PlusHi),
        "Q-:a" => quad_conj_term(Region::MinusHi),
        "Q-:b" => quad_plain_term(Region::MinusHi),
        "C+" => cubic_term(Region::PlusHi),
        "C-" => cubic_term(Region::MinusHi),
        _ => return None,
    })
}

pub fn estimates(cfg: &RunConfig) -> Result<Vec<Named>, Failure> {
    let e = &cfg.experiment;
    let s = get(&cfg.infr.s, "infr.s")?;
    let eps_list = get(&cfg.infr.eps_list, "infr.eps_list")?;
    let alpha = get(&e.alpha_list, "experiment.alpha_list")?;
    let m = get(&e.m_list, "experiment.m_list")?;
    let cutoff = get(&e.cutoff, "experiment.cutoff")?;
    let [outer, inner] = get(&e.mesh, "experiment.mesh")?;
    let trials = get(&e.trials, "experiment.trials")?;
    let terms = get(&e.terms, "experiment.terms")?;
    let mut out = Vec::new();
    for &eps in &eps_list {
        let cell = format!("s = {s}, eps = {eps}");
        for kind in [IntegralKind::Quad, IntegralKind::Cubic] {
            let rep = integral_experiment(kind, s, eps, &alpha, &m, cutoff, Mesh { outer, inner })
                .map_err(core_err(format!("integral {} at {cell}", kind.name())))?;
            out.push(named(format!("integral-{}-eps{eps}", kind.name()), rep));
        }
        for name in &terms {
            let term = term_by_name(name)
                .ok_or_else(|| Failure::Config(ConfigError::new("experiment.terms", format!("unknown term '{name}'"))))?;
            // cubic cells cost far more per lattice point
            let (n, l) = if term.arity() == 3 {
                (128, 4.0 * std::f64::consts::PI)
            } else {
                (256, 8.0 * std::f64::consts::PI)
            };
            let opts = OperatorOptions {
                n_points: cfg.grid.n_points.unwrap_or(n),
                half_length: cfg.grid.half_length.unwrap_or(l),
                seed: get(&cfg.data.seed, "data.seed")?,
                ascent_starts: get(&e.ascent_starts, "experiment.ascent_starts")?,
                ..Default::default()
            };
            let rep = verify_operator_estimate(&term, s, eps, &alpha, &m, trials, &opts)
                .map_err(core_err(format!("operator {name} at {cell}")))?;
            out.push(named(format!("operator-{}-eps{eps}", name.replace(':', "")), rep));
        }
    }
    Ok(out)
}

pub fn smoothing(cfg: &RunConfig) -> Result<Vec<Named>, Failure> {
    require_rough(cfg)?;
    let s = get(&cfg.infr.s, "infr.s")?;
    let opts = SmoothingOptions {
        half_length: get(&cfg.grid.half_length, "grid.half_length")?,
        amplitude: get(&cfg.data.amplitude, "data.amplitude")?,
        dt: get(&cfg.time.dt, "time.dt")?,
        sample_every: get(&cfg.time.save_every, "time.save_every")?,
        ..Default::default()
    };
    let res = get(&cfg.experiment.resolutions, "experiment.resolutions")?;
    let eps_list = get(&cfg.infr.eps_list, "infr.eps_list")?;
    let rep = smoothing_experiment(
        get(&cfg.data.seed, "data.seed")?,
        s,
        &eps_list,
        get(&cfg.time.t_final, "time.t_final")?,
        &res,
        &opts,
    )
    .map_err(core_err(format!("smoothing at s = {s}, resolutions {res:?}")))?;
    Ok(vec![named("smoothing", rep)])
}

pub fn lipschitz(cfg: &RunConfig) -> Result<Vec<Named>, Failure> {
    require_rough(cfg)?;
    let s = get(&cfg.infr.s, "infr.s")?;
    let opts = LipschitzOptions {
        half_length: get(&cfg.grid.half_length, "grid.half_length")?,
        amplitude: get(&cfg.data.amplitude, "data.amplitude")?,
        dt: get(&cfg.time.dt, "time.dt")?,
        sample_every: get(&cfg.time.save_every, "time.save_every")?,
        ..Default::default()
    };
    let res = get(&cfg.experiment.resolutions, "experiment.resolutions")?;
    let sizes = get(&cfg.experiment.perturbation_sizes, "experiment.perturbation_sizes")?;
    let rep = lipschitz_experiment(
        get(&cfg.data.seed, "data.seed")?,
        s,
        get(&cfg.time.t_final, "time.t_final")?,
        &sizes,
        &res,
        &opts,
    )
    .map_err(core_err(format!("lipschitz at s = {s}, resolutions {res:?}, sizes {sizes:?}")))?;
    Ok(vec![named("lipschitz", rep)])
}

pub fn lemma21(cfg: &RunConfig) -> Result<Vec<Named>, Failure> {
    require_rough(cfg)?;
    if cfg.data.amplitude.is_some() {
        return Err(Failure::Config(ConfigError::new(
            "data.amplitude",
            "lemma21 sweeps experiment.amplitudes; leave unset",
        )));
    }
    let s = get(&cfg.infr.s, "infr.s")?;
    let opts = Lemma21Options {
        n_points: get(&cfg.grid.n_points, "grid.n_points")?,
        half_length: get(&cfg.grid.half_length, "grid.half_length")?,
        seed: get(&cfg.data.seed, "data.seed")?,
        dt: get(&cfg.time.dt, "time.dt")?,
        sample_every: get(&cfg.time.save_every, "time.save_every")?,
        ..Default::default()
    };
    let amps = get(&cfg.experiment.amplitudes, "experiment.amplitudes")?;
    let rep = lemma21_experiment(&amps, s, get(&cfg.time.t_final, "time.t_final")?, &opts)
        .map_err(core_err(format!("lemma21 at s = {s}, amplitudes {amps:?}")))?;
    Ok(vec![named("lemma21", rep)])
}

#[derive(Serialize)]
struct NfeFile<'a> {
    config: serde_json::Value,
    nfe: &'a bo_core::infr::NfeReport,
}

pub fn nfe(cfg: &RunConfig, out: &Path) -> Result<Vec<Named>, Failure> {
    let grid = grid(cfg)?;
    let u0 = initial_data(cfg, grid)?;
    let (t_final, dt) = (get(&cfg.time.t_final, "time.t_final")?, get(&cfg.time.dt, "time.dt")?);
    let i = &cfg.infr;
    let (s, eps) = (get(&i.s, "infr.s")?, get(&i.eps, "infr.eps")?);
    let p = infr_params(s, eps)
        .and_then(|p| p.with_threshold(i.n_threshold.unwrap_or(1e3)))
        .and_then(|p| p.with_c_scale(i.c_scale.unwrap_or(1.0)))
        .map_err(core_err("infr".into()))?;
    let opts = EvolveOptions {
        save_every: save_steps(cfg)?,
        ..Default::default()
    };
    let cell = format!("n = {}, L = {}, dt = {dt}", grid.n_points(), grid.half_length());
    let traj = evolve_gauged_with(&gauge_forward(&u0), t_final, dt, &opts)
        .map_err(core_err(format!("evolve_gauged ({cell})")))?;
    let nopts = NfeOptions {
        j_max: get(&i.j_max, "infr.j_max")?,
        ..Default::default()
    };
    let r = nfe_residual(&traj, &p, &nopts).map_err(core_err(format!("nfe_residual ({cell}, s = {s}, eps = {eps})")))?;
    output::write_json(
        &out.join("nfe-levels.json"),
        &NfeFile {
            config: cfg.to_json(),
            nfe: &r,
        },
    )
    .map_err(Failure::Numerical)?;

    let mut rep = EstimateReport::new("nfe");
    rep.params.s = vec![s];
    rep.params.eps = vec![eps];
    rep.params.n = vec![grid.n_points()];
    rep.notes.push(format!(
        "T = {t_final}, {} snapshots, N_threshold = {}, c_scale = {}",
        r.snapshots, p.n_threshold, p.c_scale
    ));
    for l in &r.levels {
        for (series, value) in [
            ("residual", l.residual),
            ("explicit-remainder", l.explicit_remainder),
            ("closure-error", l.closure_error),
            ("quadrature-error-estimate", l.quadrature_error_estimate),
        ] {
            rep.samples.push(Sample {
                s: Some(s),
                eps: Some(eps),
                n: Some(grid.n_points()),
                t: Some(t_final),
                ..Sample::new(&format!("{series}-J{}", l.level), value)
            });
        }
        if l.nonresonant_empty {
            rep.notes.push(format!("level {}: nonresonant region empty on this lattice", l.level));
        }
    }
    for w in r.levels.windows(2) {
        let ratio = w[1].residual / w[0].residual;
        rep.push_check(
            Check::at_most(format!("residual J={} / residual J={}", w[1].level, w[0].level), ratio, 1.0)
                .for_series(&format!("residual-J{}", w[1].level)),
        );
    }
    Ok(vec![named("nfe", rep)])
}
