//! Run configuration: strict JSON, then flag overrides, then per-command
//! defaults. Every report carries the resolved result.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum DataKind {
    /// `d/dx (A e^{-(x/w)^2})`.
    GaussianDerivative,
    /// Random phases, antiderivative spectrum `A <xi>^{-(r+1.51)}`.
    RoughRandom,
    /// `d/dx A (cos(k1 x) + cos(k2 x + 0.3))`; keeps the gauge on a sparse
    /// sublattice, which the normal form enumeration needs.
    CosinePair,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub n_points: Option<usize>,
    pub half_length: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSpec {
    pub t_final: Option<f64>,
    pub dt: Option<f64>,
    /// Snapshot spacing in time.
    pub save_every: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSpec {
    pub kind: Option<DataKind>,
    pub seed: Option<u64>,
    pub amplitude: Option<f64>,
    /// Sobolev regularity `r` of rough data (gauge in `H^{r+1}`).
    pub regularity: Option<f64>,
    /// Width of the Gaussian.
    pub width: Option<f64>,
    /// Lattice modes of the cosine pair.
    pub modes: Option<[i64; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfrSpec {
    pub s: Option<f64>,
    pub eps: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    pub n_threshold: Option<f64>,
    pub j_max: Option<usize>,
    pub c_scale: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub alpha_list: Option<Vec<f64>>,
    pub m_list: Option<Vec<f64>>,
    pub cutoff: Option<f64>,
    pub mesh: Option<[usize; 2]>,
    pub resolutions: Option<Vec<usize>>,
    pub trials: Option<usize>,
    /// Block-ascent norm estimates per operator cell; 0 skips them.
    pub ascent_starts: Option<usize>,
    pub terms: Option<Vec<String>>,
    pub perturbation_sizes: Option<Vec<f64>>,
    pub amplitudes: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<String>,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub data: DataSpec,
    pub infr: InfrSpec,
    pub experiment: ExperimentSpec,
    pub output_dir: Option<PathBuf>,
}

pub const COMMANDS: [&str; 8] = [
    "simulate",
    "gauge-check",
    "params",
    "estimates",
    "smoothing",
    "lipschitz",
    "lemma21",
    "nfe",
];

pub const TERMS: [&str; 7] = ["Q+", "Q+:a", "Q+:b", "Q-:a", "Q-:b", "C+", "C-"];

pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(path.display().to_string(), format!("cannot read: {e}")))?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::new(if path == "." { "config".into() } else { path }, e.inner().to_string())
    })
}

fn or<T: Clone>(slot: &mut Option<T>, default: T) {
    if slot.is_none() {
        *slot = Some(default);
    }
}

impl RunConfig {
    /// Fills every field `command` reads and leaves the rest untouched.
    pub fn resolve(mut self, command: &str) -> Result<RunConfig, ConfigError> {
        if let Some(c) = &self.command {
            if c != command {
                return Err(ConfigError::new(
                    "command",
                    format!("config is for '{c}' but '{command}' was requested"),
                ));
            }
        }
        self.command = Some(command.into());
        let (g, t, d, i, e) = (
            &mut self.grid,
            &mut self.time,
            &mut self.data,
            &mut self.infr,
            &mut self.experiment,
        );
        match command {
            "simulate" | "gauge-check" => {
                or(&mut g.n_points, 1024);
                or(&mut g.half_length, 32.0 * PI);
                or(&mut t.t_final, 0.5);
                or(&mut t.dt, 5e-3);
                or(&mut t.save_every, 0.05);
                or(&mut i.s, 0.5);
                data_defaults(d, DataKind::GaussianDerivative);
            }
            "params" => {
                or(&mut i.s, 0.5);
                or(&mut i.eps, 0.0);
                or(&mut i.n_threshold, 1e3);
                or(&mut i.c_scale, 1.0);
            }
            "estimates" => {
                or(&mut i.s, 0.5);
                if i.eps_list.is_none() {
                    i.eps_list = Some(vec![i.eps.unwrap_or(0.0)]);
                }
                or(&mut e.alpha_list, vec![8.0, 16.0, 32.0, 64.0]);
                or(&mut e.m_list, vec![2.0, 4.0, 8.0, 16.0, 32.0]);
                or(&mut e.cutoff, 1000.0);
                or(&mut e.mesh, [32, 32]);
                or(&mut e.trials, 32);
                or(&mut e.ascent_starts, 0);
                or(&mut e.terms, vec!["Q+".into(), "C+".into()]);
                or(&mut d.seed, 7);
            }
            "smoothing" => {
                or(&mut i.s, 0.5);
                if i.eps_list.is_none() {
                    i.eps_list = Some(vec![i.eps.unwrap_or(0.4)]);
                }
                or(&mut g.half_length, 2.0 * PI);
                or(&mut t.t_final, 0.5);
                or(&mut t.dt, 2e-3);
                or(&mut t.save_every, 0.01);
                or(&mut e.resolutions, vec![512, 1024, 2048]);
                or(&mut d.kind, DataKind::RoughRandom);
                or(&mut d.seed, 11);
                or(&mut d.amplitude, 0.5);
            }
            "lipschitz" => {
                or(&mut i.s, 0.5);
                or(&mut g.half_length, 2.0 * PI);
                or(&mut t.t_final, 0.5);
                or(&mut t.dt, 2e-3);
                or(&mut t.save_every, 0.01);
                or(&mut e.resolutions, vec![512, 1024]);
                or(&mut e.perturbation_sizes, vec![1e-3, 5e-4, 1e-4]);
                or(&mut d.kind, DataKind::RoughRandom);
                or(&mut d.seed, 5);
                or(&mut d.amplitude, 2.0);
            }
            "lemma21" => {
                or(&mut i.s, 0.5);
                or(&mut g.n_points, 256);
                or(&mut g.half_length, 2.0 * PI);
                or(&mut t.t_final, 0.5);
                or(&mut t.dt, 2e-3);
                or(&mut t.save_every, 0.01);
                or(&mut e.amplitudes, vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.5]);
                or(&mut d.kind, DataKind::RoughRandom);
                or(&mut d.seed, 21);
            }
            "nfe" => {
                or(&mut g.n_points, 128);
                or(&mut g.half_length, PI);
                or(&mut t.t_final, 0.01);
                or(&mut t.dt, 1e-4);
                or(&mut t.save_every, 1e-4);
                or(&mut i.s, 0.5);
                or(&mut i.eps, 0.0);
                or(&mut i.n_threshold, 1e3);
                or(&mut i.c_scale, 1.0);
                or(&mut i.j_max, 2);
                data_defaults(d, DataKind::CosinePair);
            }
            other => {
                return Err(ConfigError::new(
                    "command",
                    format!("unknown command '{other}', expected one of {}", COMMANDS.join(", ")),
                ))
            }
        }
        self.validate()?;
        Ok(self)
    }

    /// Checks every field that is set.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if let Some(n) = g.n_points {
            power_of_two("grid.n_points", n)?;
        }
        if let Some(l) = g.half_length {
            check("grid.half_length", l >= PI && l.is_finite(), || format!("must be >= pi, got {l}"))?;
        }
        let t = &self.time;
        positive("time.t_final", t.t_final)?;
        positive("time.dt", t.dt)?;
        positive("time.save_every", t.save_every)?;
        let d = &self.data;
        if let Some(a) = d.amplitude {
            check("data.amplitude", a >= 0.0 && a.is_finite(), || format!("must be >= 0, got {a}"))?;
        }
        positive("data.width", d.width)?;
        if let Some(r) = d.regularity {
            check("data.regularity", r > 0.0 && r.is_finite(), || format!("must be > 0, got {r}"))?;
        }
        if let (Some(m), Some(n)) = (d.modes, g.n_points) {
            let ok = m.iter().all(|&k| k > 0 && (k as usize) < n / 2);
            check("data.modes", ok, || format!("modes must lie in 1..{}, got {m:?}", n / 2))?;
        }
        let i = &self.infr;
        positive("infr.s", i.s)?;
        if let Some(e) = i.eps {
            check("infr.eps", e >= 0.0, || format!("must be >= 0, got {e}"))?;
        }
        if let Some(list) = &i.eps_list {
            check("infr.eps_list", !list.is_empty(), || "must not be empty".into())?;
            for (k, e) in list.iter().enumerate() {
                check(&format!("infr.eps_list[{k}]"), *e >= 0.0, || format!("must be >= 0, got {e}"))?;
            }
        }
        if let Some(nt) = i.n_threshold {
            check("infr.n_threshold", nt > 1.0, || format!("must exceed 1, got {nt}"))?;
        }
        if let Some(j) = i.j_max {
            check("infr.j_max", (1..=3).contains(&j), || format!("must be 1, 2 or 3, got {j}"))?;
        }
        positive("infr.c_scale", i.c_scale)?;
        let e = &self.experiment;
        positive_list("experiment.alpha_list", e.alpha_list.as_deref(), true)?;
        positive_list("experiment.m_list", e.m_list.as_deref(), false)?;
        positive("experiment.cutoff", e.cutoff)?;
        if let Some(m) = e.mesh {
            check("experiment.mesh", m.iter().all(|&k| k >= 2), || format!("mesh counts must be >= 2, got {m:?}"))?;
        }
        if let Some(r) = &e.resolutions {
            check("experiment.resolutions", !r.is_empty(), || "must not be empty".into())?;
            for (k, &n) in r.iter().enumerate() {
                power_of_two(&format!("experiment.resolutions[{k}]"), n)?;
            }
            check("experiment.resolutions", r.windows(2).all(|w| w[0] < w[1]), || {
                "must be strictly increasing".into()
            })?;
        }
        if let Some(terms) = &e.terms {
            check("experiment.terms", !terms.is_empty(), || "must not be empty".into())?;
            for (k, name) in terms.iter().enumerate() {
                check(&format!("experiment.terms[{k}]"), TERMS.contains(&name.as_str()), || {
                    format!("unknown term '{name}', expected one of {}", TERMS.join(", "))
                })?;
            }
        }
        positive_list("experiment.perturbation_sizes", e.perturbation_sizes.as_deref(), true)?;
        positive_list("experiment.amplitudes", e.amplitudes.as_deref(), true)?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialises")
    }
}

fn data_defaults(d: &mut DataSpec, kind: DataKind) {
    or(&mut d.kind, kind);
    match d.kind.expect("set above") {
        DataKind::GaussianDerivative => {
            or(&mut d.amplitude, 1.0);
            or(&mut d.width, 2.0);
        }
        DataKind::RoughRandom => {
            or(&mut d.amplitude, 0.5);
            or(&mut d.seed, 1);
            or(&mut d.regularity, 0.5);
        }
        DataKind::CosinePair => {
            or(&mut d.amplitude, 0.08);
            or(&mut d.modes, [32, 48]);
        }
    }
}

fn check(path: &str, ok: bool, msg: impl FnOnce() -> String) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::new(path, msg()))
    }
}

fn positive(path: &str, v: Option<f64>) -> Result<(), ConfigError> {
    match v {
        Some(x) => check(path, x > 0.0 && x.is_finite(), || format!("must be positive, got {x}")),
        None => Ok(()),
    }
}

fn power_of_two(path: &str, n: usize) -> Result<(), ConfigError> {
    check(path, n >= 8 && n.is_power_of_two(), || format!("must be a power of two >= 8, got {n}"))
}

/// Nonempty list of positive values, or of nonnegative ones with `zero_ok`.
fn positive_list(path: &str, list: Option<&[f64]>, zero_ok: bool) -> Result<(), ConfigError> {
    let Some(list) = list else { return Ok(()) };
    check(path, !list.is_empty(), || "must not be empty".into())?;
    for (k, &x) in list.iter().enumerate() {
        let ok = x.is_finite() && (x > 0.0 || (zero_ok && x >= 0.0));
        check(&format!("{path}[{k}]"), ok, || {
            format!("must be {}, got {x}", if zero_ok { "nonnegative" } else { "positive" })
        })?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_name_their_path() {
        let err = parse(r#"{"grid": {"n_points": 64, "bogus": 1}}"#).unwrap_err();
        assert!(err.path.starts_with("grid"), "{err}");
        assert!(err.message.contains("bogus"), "{err}");
        let err = parse(r#"{"nope": 1}"#).unwrap_err();
        assert!(err.message.contains("nope"), "{err}");
    }

    #[test]
    fn wrong_type_names_its_path() {
        let err = parse(r#"{"time": {"dt": "small"}}"#).unwrap_err();
        assert_eq!(err.path, "time.dt");
    }

    #[test]
    fn defaults_fill_only_what_the_command_reads() {
        let c = RunConfig::default().resolve("params").unwrap();
        assert_eq!(c.infr.s, Some(0.5));
        assert_eq!(c.grid.n_points, None);
        let c = RunConfig::default().resolve("simulate").unwrap();
        assert_eq!(c.grid.n_points, Some(1024));
        assert_eq!(c.data.kind, Some(DataKind::GaussianDerivative));
    }

    #[test]
    fn explicit_values_survive_resolution() {
        let mut c = RunConfig::default();
        c.grid.n_points = Some(64);
        c.data.kind = Some(DataKind::RoughRandom);
        let c = c.resolve("simulate").unwrap();
        assert_eq!(c.grid.n_points, Some(64));
        assert_eq!(c.data.seed, Some(1));
        assert_eq!(c.data.width, None);
    }

    #[test]
    fn validation_reports_field_paths() {
        let mut c = RunConfig::default();
        c.grid.n_points = Some(100);
        assert_eq!(c.resolve("simulate").unwrap_err().path, "grid.n_points");
        let mut c = RunConfig::default();
        c.experiment.resolutions = Some(vec![1024, 512]);
        assert_eq!(c.resolve("smoothing").unwrap_err().path, "experiment.resolutions");
        let mut c = RunConfig::default();
        c.experiment.m_list = Some(vec![2.0, 0.0]);
        assert_eq!(c.resolve("estimates").unwrap_err().path, "experiment.m_list[1]");
        let mut c = RunConfig::default();
        c.experiment.terms = Some(vec!["Z".into()]);
        assert_eq!(c.resolve("estimates").unwrap_err().path, "experiment.terms[0]");
    }

    #[test]
    fn command_mismatch_is_rejected() {
        let c = RunConfig {
            command: Some("params".into()),
            ..Default::default()
        };
        assert_eq!(c.resolve("nfe").unwrap_err().path, "command");
    }
}
