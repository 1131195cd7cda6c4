//! Self-contained experiment reports (JSON + flat CSV).

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::fit::{PowerFit, FIT_RESIDUAL_MAX};
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    /// No pass/fail criterion attached.
    Descriptive,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Descriptive => "descriptive",
        }
    }

    /// Fail dominates inconclusive, which dominates pass.
    pub fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut out = Verdict::Descriptive;
        for v in verdicts {
            out = match (out, v) {
                (Verdict::Fail, _) | (_, Verdict::Fail) => Verdict::Fail,
                (Verdict::Inconclusive, _) | (_, Verdict::Inconclusive) => Verdict::Inconclusive,
                (Verdict::Pass, _) | (_, Verdict::Pass) => Verdict::Pass,
                _ => Verdict::Descriptive,
            };
        }
        out
    }
}

/// The parameter axes swept by an experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub m: Vec<f64>,
    #[serde(default)]
    pub s: Vec<f64>,
    #[serde(default)]
    pub eps: Vec<f64>,
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
}

/// One measured value. `series` groups the samples a fit runs over.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub series: String,
    pub alpha: Option<f64>,
    pub m: Option<f64>,
    pub s: Option<f64>,
    pub eps: Option<f64>,
    pub n: Option<usize>,
    pub amplitude: Option<f64>,
    pub t: Option<f64>,
    /// Frequency, for spectral profiles.
    pub xi: Option<f64>,
    pub value: f64,
}

impl Sample {
    pub fn new(series: &str, value: f64) -> Self {
        Sample {
            series: series.into(),
            value,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub series: String,
    /// Name of the abscissa (`m`, `alpha`, `n`, ...).
    pub variable: String,
    pub fit: Option<PowerFit>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Bound {
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Within { lo: f64, hi: f64 },
}

/// A criterion: measured value, its bound, and the fit residual when the
/// value is a fitted exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: String,
    pub series: Option<String>,
    pub measured: f64,
    pub bound: Bound,
    pub fit_residual: Option<f64>,
    pub verdict: Verdict,
}

impl Check {
    pub fn new(criterion: impl Into<String>, measured: f64, bound: Bound) -> Self {
        let mut c = Check {
            criterion: criterion.into(),
            series: None,
            measured,
            bound,
            fit_residual: None,
            verdict: Verdict::Inconclusive,
        };
        c.verdict = c.evaluate();
        c
    }

    pub fn at_most(criterion: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(criterion, measured, Bound::AtMost { limit })
    }

    pub fn at_least(criterion: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self::new(criterion, measured, Bound::AtLeast { limit })
    }

    pub fn within(criterion: impl Into<String>, measured: f64, lo: f64, hi: f64) -> Self {
        Self::new(criterion, measured, Bound::Within { lo, hi })
    }

    /// A bound on a fitted exponent; a missing fit is inconclusive.
    pub fn exponent(criterion: impl Into<String>, series: &str, fit: Option<&PowerFit>, bound: Bound) -> Self {
        let mut c = Self::new(criterion, fit.map_or(f64::NAN, |f| f.exponent), bound);
        c.series = Some(series.into());
        c.fit_residual = Some(fit.map_or(f64::INFINITY, |f| f.residual));
        c.verdict = c.evaluate();
        c
    }

    pub fn for_series(mut self, series: &str) -> Self {
        self.series = Some(series.into());
        self
    }

    /// Recomputes the verdict from the stored fields.
    pub fn evaluate(&self) -> Verdict {
        if !self.measured.is_finite() {
            return Verdict::Inconclusive;
        }
        if let Some(r) = self.fit_residual {
            if !(r <= FIT_RESIDUAL_MAX) {
                return Verdict::Inconclusive;
            }
        }
        let ok = match self.bound {
            Bound::AtMost { limit } => self.measured <= limit,
            Bound::AtLeast { limit } => self.measured >= limit,
            Bound::Within { lo, hi } => lo <= self.measured && self.measured <= hi,
        };
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub experiment: String,
    pub seed: Option<u64>,
    pub params: ParamGrid,
    pub samples: Vec<Sample>,
    pub fits: Vec<FitRecord>,
    pub checks: Vec<Check>,
    /// Where each reference value comes from.
    pub oracles: Vec<String>,
    pub notes: Vec<String>,
    pub verdict: Verdict,
    /// Resolved run configuration, filled in by front ends.
    pub config: Option<serde_json::Value>,
}

impl EstimateReport {
    pub fn new(experiment: &str) -> Self {
        EstimateReport {
            experiment: experiment.into(),
            seed: None,
            params: ParamGrid::default(),
            samples: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            oracles: Vec::new(),
            notes: Vec::new(),
            verdict: Verdict::Descriptive,
            config: None,
        }
    }

    /// Fits the samples of `series` against `x`, stores and returns the fit.
    pub fn fit_series(&mut self, series: &str, variable: &str, x: impl Fn(&Sample) -> Option<f64>) -> Option<PowerFit> {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .samples
            .iter()
            .filter(|s| s.series == series)
            .filter_map(|s| x(s).map(|v| (v, s.value)))
            .unzip();
        let fit = super::fit::fit_power(&xs, &ys);
        self.fits.push(FitRecord {
            series: series.into(),
            variable: variable.into(),
            fit,
        });
        fit
    }

    /// Upper bound on the growth exponent of `series` in `x`. Uses the power
    /// fit when it is conclusive, otherwise the largest local log-log slope,
    /// which is never below the fitted exponent.
    pub fn growth_check(
        &mut self,
        criterion: impl Into<String>,
        series: &str,
        variable: &str,
        x: impl Fn(&Sample) -> Option<f64>,
        limit: f64,
    ) -> Check {
        let (xs, ys): (Vec<f64>, Vec<f64>) = self
            .samples
            .iter()
            .filter(|s| s.series == series)
            .filter_map(|s| x(s).map(|v| (v, s.value)))
            .unzip();
        let fit = self.fit_series(series, variable, x);
        let bound = Bound::AtMost { limit };
        match (fit, super::fit::max_local_slope(&xs, &ys)) {
            (Some(f), Some(local)) if !f.conclusive() => {
                let criterion = format!("{} (max local slope, fit residual {:.3})", criterion.into(), f.residual);
                Check::new(criterion, local, bound).for_series(series)
            }
            _ => Check::exponent(criterion, series, fit.as_ref(), bound),
        }
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
        self.verdict = Verdict::combine(self.checks.iter().map(|c| c.verdict));
    }

    /// Recomputes every verdict from stored data alone.
    pub fn recomputed_verdict(&self) -> Verdict {
        Verdict::combine(self.checks.iter().map(Check::evaluate))
    }

    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass | Verdict::Descriptive)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Flat table `experiment, series, params..., value, fit_exponent,
    /// fit_residual, verdict`; fit and verdict columns refer to the sample's
    /// series.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(CSV_HEADER).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.samples {
            let fit = self
                .fits
                .iter()
                .find(|f| f.series == s.series)
                .and_then(|f| f.fit);
            let checks: Vec<Verdict> = self
                .checks
                .iter()
                .filter(|c| c.series.as_deref() == Some(s.series.as_str()))
                .map(|c| c.verdict)
                .collect();
            let verdict = if checks.is_empty() {
                String::new()
            } else {
                Verdict::combine(checks).label().to_string()
            };
            out.write_record([
                self.experiment.clone(),
                s.series.clone(),
                opt(s.alpha),
                opt(s.m),
                opt(s.s),
                opt(s.eps),
                s.n.map(|n| n.to_string()).unwrap_or_default(),
                opt(s.amplitude),
                opt(s.t),
                opt(s.xi),
                s.value.to_string(),
                opt(fit.map(|f| f.exponent)),
                opt(fit.map(|f| f.residual)),
                verdict,
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// One line per check, `PASS`/`FAIL`/`INCONCLUSIVE`.
    pub fn summary(&self) -> String {
        let mut s = format!("{}: {}", self.experiment, self.verdict.label().to_uppercase());
        for c in &self.checks {
            s.push_str(&format!(
                "\n  {} = {:.4e} ({}): {}",
                c.criterion,
                c.measured,
                bound_text(&c.bound),
                c.verdict.label().to_uppercase()
            ));
        }
        s
    }
}

pub const CSV_HEADER: [&str; 14] = [
    "experiment",
    "series",
    "alpha",
    "m",
    "s",
    "eps",
    "n",
    "amplitude",
    "t",
    "xi",
    "value",
    "fit_exponent",
    "fit_residual",
    "verdict",
];

fn bound_text(b: &Bound) -> String {
    match *b {
        Bound::AtMost { limit } => format!("<= {limit}"),
        Bound::AtLeast { limit } => format!(">= {limit}"),
        Bound::Within { lo, hi } => format!("in [{lo}, {hi}]"),
    }
}

fn csv_err(e: csv::Error) -> crate::Error {
    crate::Error::Io(std::io::Error::other(e.to_string()))
}
