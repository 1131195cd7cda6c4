//! `bolab`: command line front end of the laboratory.
//!
//! Exit codes: 0 all verdicts pass (or descriptive only), 1 a verdict
//! failed or was inconclusive, 2 usage or config error, 3 numerical failure.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bo_core::lab::{Bound, Verdict};
use clap::{Args, Parser, Subcommand};

use config::{DataKind, RunConfig};

/// Environment variable holding the default output directory.
pub const OUT_ENV: &str = "BOLAB_OUT";
const DEFAULT_OUT: &str = "bolab-out";

#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

pub enum Failure {
    Config(ConfigError),
    Numerical(anyhow::Error),
}

#[derive(Parser, Debug)]
#[command(name = "bolab", version, about = "Gauge, normal form and estimate experiments for the Benjamin-Ono flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $BOLAB_OUT, else ./bolab-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel experiment cells.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(flatten)]
    flags: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Evolve the Benjamin-Ono equation and export the trajectory.
    Simulate,
    /// Gauge round trip and gauged/direct consistency.
    GaugeCheck,
    /// Normal form parameters at (s, eps).
    Params,
    /// Integral scaling sweeps and operator-level estimates.
    Estimates,
    /// Smoothing of the profile remainder across resolutions.
    Smoothing,
    /// Lipschitz ratio of two nearby gauged flows.
    Lipschitz,
    /// High-band time derivative against the data amplitude.
    Lemma21,
    /// Normal form residuals by level.
    Nfe,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::GaugeCheck => "gauge-check",
            Command::Params => "params",
            Command::Estimates => "estimates",
            Command::Smoothing => "smoothing",
            Command::Lipschitz => "lipschitz",
            Command::Lemma21 => "lemma21",
            Command::Nfe => "nfe",
        }
    }
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    n_points: Option<usize>,
    #[arg(long, global = true)]
    half_length: Option<f64>,
    /// Final time.
    #[arg(long = "t", global = true)]
    t_final: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Snapshot spacing in time.
    #[arg(long, global = true)]
    save_every: Option<f64>,
    #[arg(long, global = true, value_enum)]
    data: Option<DataKind>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    amplitude: Option<f64>,
    #[arg(long, global = true)]
    regularity: Option<f64>,
    #[arg(long, global = true)]
    width: Option<f64>,
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    n_threshold: Option<f64>,
    #[arg(long, global = true)]
    j_max: Option<usize>,
    #[arg(long, global = true)]
    c_scale: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    alpha_list: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    m_list: Option<Vec<f64>>,
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    #[arg(long, global = true, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long, global = true)]
    ascent_starts: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    terms: Option<Vec<String>>,
    #[arg(long, global = true, value_delimiter = ',')]
    perturbation_sizes: Option<Vec<f64>>,
    #[arg(long, global = true, value_delimiter = ',')]
    amplitudes: Option<Vec<f64>>,
}

fn set<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

impl Overrides {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.grid.n_points, self.n_points);
        set(&mut c.grid.half_length, self.half_length);
        set(&mut c.time.t_final, self.t_final);
        set(&mut c.time.dt, self.dt);
        set(&mut c.time.save_every, self.save_every);
        set(&mut c.data.kind, self.data);
        set(&mut c.data.seed, self.seed);
        set(&mut c.data.amplitude, self.amplitude);
        set(&mut c.data.regularity, self.regularity);
        set(&mut c.data.width, self.width);
        set(&mut c.infr.s, self.s);
        set(&mut c.infr.eps, self.eps);
        set(&mut c.infr.eps_list, self.eps_list);
        set(&mut c.infr.n_threshold, self.n_threshold);
        set(&mut c.infr.j_max, self.j_max);
        set(&mut c.infr.c_scale, self.c_scale);
        set(&mut c.experiment.alpha_list, self.alpha_list);
        set(&mut c.experiment.m_list, self.m_list);
        set(&mut c.experiment.cutoff, self.cutoff);
        set(&mut c.experiment.resolutions, self.resolutions);
        set(&mut c.experiment.trials, self.trials);
        set(&mut c.experiment.ascent_starts, self.ascent_starts);
        set(&mut c.experiment.terms, self.terms);
        set(&mut c.experiment.perturbation_sizes, self.perturbation_sizes);
        set(&mut c.experiment.amplitudes, self.amplitudes);
    }
}

/// Six significant digits, scientific outside `[1e-3, 1e5)`.
fn number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    if x.abs() < 1e-3 || x.abs() >= 1e5 {
        let s = format!("{x:.5e}");
        let (mantissa, exp) = s.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exp}")
    } else {
        let digits = (5 - x.abs().log10().floor() as i32).max(0) as usize;
        let s = format!("{x:.digits$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

fn bound_text(b: &Bound) -> String {
    match *b {
        Bound::AtMost { limit } => format!("≤ {}", number(limit)),
        Bound::AtLeast { limit } => format!("≥ {}", number(limit)),
        Bound::Within { lo, hi } => format!("in [{}, {}]", number(lo), number(hi)),
    }
}

fn run(cli: Cli) -> Result<Verdict, Failure> {
    let name = cli.command.name();
    let mut cfg = match &cli.config {
        Some(path) => config::load(path).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    cli.flags.apply(&mut cfg);
    if let Some(out) = cli.out {
        cfg.output_dir = Some(out);
    }
    if cfg.output_dir.is_none() {
        let dir = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_OUT.into());
        cfg.output_dir = Some(dir);
    }
    let cfg = cfg.resolve(name).map_err(Failure::Config)?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Failure::Config(ConfigError::new("--jobs", "must be at least 1")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::Numerical(e.into()))?;
    }
    let out: PathBuf = cfg.output_dir.clone().expect("set above").join(name);
    log::info!("{name}: writing to {}", out.display());

    let reports = match cli.command {
        Command::Simulate => commands::simulate(&cfg, &out)?,
        Command::GaugeCheck => commands::gauge_check(&cfg)?,
        Command::Params => commands::params(&cfg, &out)?,
        Command::Estimates => commands::estimates(&cfg)?,
        Command::Smoothing => commands::smoothing(&cfg)?,
        Command::Lipschitz => commands::lipschitz(&cfg)?,
        Command::Lemma21 => commands::lemma21(&cfg)?,
        Command::Nfe => commands::nfe(&cfg, &out)?,
    };
    if reports.is_empty() {
        println!("{name}: DESCRIPTIVE -> {}", out.display());
        return Ok(Verdict::Descriptive);
    }
    let mut verdicts = Vec::new();
    for commands::Named { stem, mut report } in reports {
        report.config = Some(cfg.to_json());
        let path = output::write_report(&out, &stem, &report).map_err(Failure::Numerical)?;
        print_report(&report, &path);
        verdicts.push(report.verdict);
    }
    Ok(Verdict::combine(verdicts))
}

fn print_report(report: &bo_core::lab::EstimateReport, path: &Path) {
    let passed = report.checks.iter().filter(|c| c.verdict == Verdict::Pass).count();
    println!(
        "{}: {} ({passed}/{} checks pass) -> {}",
        report.experiment,
        report.verdict.label().to_uppercase(),
        report.checks.len(),
        path.display()
    );
    for c in &report.checks {
        let head = if c.criterion.contains("<=") || c.criterion.contains(">=") {
            format!("{} [{}]", c.criterion, bound_text(&c.bound))
        } else {
            format!("{} {}", c.criterion, bound_text(&c.bound))
        };
        println!("  {head}: {} (measured {})", c.verdict.label().to_uppercase(), number(c.measured));
    }
}


fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Verdict::Pass | Verdict::Descriptive) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
