//! Fit configuration, iteration traces and the top-level dispatcher.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::dist::{Family, ParameterSet};
use crate::error::{Error, Result};
use crate::sample::{observed_loglik, CensoredSample};
use crate::{direct, em, mcem, rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Exact EM (normal family only).
    Em,
    /// Monte Carlo EM.
    Mcem,
    /// Direct maximization of the observed-data likelihood.
    Direct,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Em => "em",
            Algorithm::Mcem => "mcem",
            Algorithm::Direct => "direct",
        }
    }

    /// Exact EM where the E-step is closed-form, MCEM otherwise.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Normal => Algorithm::Em,
            Family::Laplace | Family::Rayleigh => Algorithm::Mcem,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "em" => Ok(Algorithm::Em),
            "mcem" => Ok(Algorithm::Mcem),
            "direct" => Ok(Algorithm::Direct),
            other => Err(Error::Parse(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// When an MCEM run stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum McemStopping {
    /// Run exactly `max_iter` iterations.
    #[default]
    FixedIterations,
    /// Stop once the largest parameter change stays below `tol` for this
    /// many consecutive iterations (or at `max_iter`).
    ConsecutiveSmallChanges(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub algorithm: Algorithm,
    pub family: Family,
    /// Starting values; `None` selects a moment-based start from the
    /// uncensored data.
    pub start: Option<ParameterSet>,
    /// Monte Carlo replicates per iteration (MCEM only).
    pub mc_size: usize,
    /// Optional geometric growth of the replicate count: iteration `s` uses
    /// `ceil(mc_size * growth^(s-1))` replicates.
    pub mc_growth: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    pub stopping: McemStopping,
    /// Worker threads for MCEM sampling; 0 uses the global rayon pool.
    /// Results do not depend on this value.
    pub workers: usize,
    /// Number of starts for direct maximization.
    pub direct_starts: usize,
}

impl FitConfig {
    pub const DEFAULT_MC_SIZE: usize = 50_000;
    pub const DEFAULT_TOL: f64 = 1e-8;

    pub fn new(algorithm: Algorithm, family: Family) -> Self {
        let max_iter = match algorithm {
            Algorithm::Em => 500,
            Algorithm::Mcem => 15,
            Algorithm::Direct => 10_000,
        };
        Self {
            algorithm,
            family,
            start: None,
            mc_size: Self::DEFAULT_MC_SIZE,
            mc_growth: None,
            max_iter,
            tol: Self::DEFAULT_TOL,
            seed: rng::DEFAULT_SEED,
            stopping: McemStopping::default(),
            workers: 0,
            direct_starts: 5,
        }
    }

    pub fn with_start(mut self, start: ParameterSet) -> Self {
        self.start = Some(start);
        self
    }

    pub fn with_mc_size(mut self, k: usize) -> Self {
        self.mc_size = k;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithm == Algorithm::Em && self.family != Family::Normal {
            return Err(Error::Unsupported {
                algorithm: "exact EM".into(),
                family: self.family.to_string(),
                reason: "the E-step has no closed form; use mcem or direct".into(),
            });
        }
        if let Some(start) = &self.start {
            if start.family() != self.family {
                return Err(Error::FamilyMismatch {
                    expected: self.family.to_string(),
                    got: start.family().to_string(),
                });
            }
            start.validate()?;
        }
        if self.max_iter == 0 {
            return Err(Error::ParameterDomain("max_iter must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::ParameterDomain("tol must be > 0".into()));
        }
        if self.algorithm == Algorithm::Mcem && self.mc_size == 0 {
            return Err(Error::ParameterDomain("K must be >= 1".into()));
        }
        if let Some(g) = self.mc_growth {
            if !(g >= 1.0) || !g.is_finite() {
                return Err(Error::ParameterDomain(format!(
                    "K growth factor {g} must be >= 1"
                )));
            }
        }
        if let McemStopping::ConsecutiveSmallChanges(0) = self.stopping {
            return Err(Error::ParameterDomain(
                "consecutive-change count must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Starting values: the configured ones, or a moment start from the
    /// uncensored data.
    pub fn start_for(&self, sample: &CensoredSample) -> Result<ParameterSet> {
        match self.start {
            Some(p) => Ok(p),
            None => default_start(sample, self.family),
        }
    }
}

/// Moment-based start from the uncensored values: sample mean and variance
/// (normal), median and mean absolute deviation (Laplace), and the
/// complete-data MLE `√(Σy²/2m)` (Rayleigh).
pub fn default_start(sample: &CensoredSample, family: Family) -> Result<ParameterSet> {
    let mut y: Vec<f64> = sample.uncensored().collect();
    let m = y.len();
    match family {
        Family::Normal => {
            if m < 2 {
                return ParameterSet::normal(y.first().copied().unwrap_or(0.0), 1.0);
            }
            let mean = y.iter().sum::<f64>() / m as f64;
            let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
            ParameterSet::normal(mean, if var > 0.0 { var } else { 1.0 })
        }
        Family::Laplace => {
            if m == 0 {
                return ParameterSet::laplace(0.0, 1.0);
            }
            y.sort_by(f64::total_cmp);
            let med = if m % 2 == 1 {
                y[m / 2]
            } else {
                0.5 * (y[m / 2 - 1] + y[m / 2])
            };
            let mad = y.iter().map(|v| (v - med).abs()).sum::<f64>() / m as f64;
            ParameterSet::laplace(med, if mad > 0.0 { mad } else { 1.0 })
        }
        Family::Rayleigh => {
            let sq: f64 = y.iter().map(|v| v * v).sum();
            if m == 0 || sq <= 0.0 {
                return ParameterSet::rayleigh(1.0);
            }
            ParameterSet::rayleigh((sq / (2.0 * m as f64)).sqrt())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub s: usize,
    pub params: ParameterSet,
    pub loglik: f64,
}

/// Per-iteration record of a fit. Row 0 holds the starting values.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    pub family: Family,
    pub rows: Vec<TraceRow>,
    pub converged: bool,
    pub final_params: ParameterSet,
}

impl FitTrace {
    pub(crate) fn start(sample: &CensoredSample, start: ParameterSet) -> Result<Self> {
        let loglik = observed_loglik(sample, &start)?;
        Ok(Self {
            family: start.family(),
            rows: vec![TraceRow {
                s: 0,
                params: start,
                loglik,
            }],
            converged: false,
            final_params: start,
        })
    }

    pub(crate) fn push(&mut self, sample: &CensoredSample, params: ParameterSet) -> Result<()> {
        let loglik = observed_loglik(sample, &params)?;
        let s = self.rows.len();
        self.rows.push(TraceRow { s, params, loglik });
        self.final_params = params;
        Ok(())
    }

    pub fn last(&self) -> &TraceRow {
        self.rows.last().expect("trace always holds the start row")
    }

    /// Number of completed iterations.
    pub fn iterations(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn csv_header(family: Family) -> Vec<&'static str> {
        let mut cols = vec!["s"];
        match family {
            Family::Normal => cols.extend(["mu", "sigma", "sigma2"]),
            Family::Laplace => cols.extend(["mu", "sigma"]),
            Family::Rayleigh => cols.push("beta"),
        }
        cols.push("loglik");
        cols
    }

    /// Writes the trace as CSV with 17 significant digits per value. The
    /// normal family carries both σ (for reading) and σ² (the stored value).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(Self::csv_header(self.family))?;
        let fmt = |v: f64| format!("{v:.16e}");
        for row in &self.rows {
            let mut rec = vec![row.s.to_string()];
            match row.params {
                ParameterSet::Normal { mu, sigma2 } => {
                    rec.extend([fmt(mu), fmt(sigma2.sqrt()), fmt(sigma2)])
                }
                ParameterSet::Laplace { mu, sigma } => rec.extend([fmt(mu), fmt(sigma)]),
                ParameterSet::Rayleigh { beta } => rec.push(fmt(beta)),
            }
            rec.push(fmt(row.loglik));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parses trace rows written by [`FitTrace::write_csv`].
    pub fn read_csv_rows<R: Read>(reader: R) -> Result<(Family, Vec<TraceRow>)> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
        let family = Family::ALL
            .into_iter()
            .find(|f| Self::csv_header(*f) == headers)
            .ok_or_else(|| Error::Parse(format!("unrecognized trace header {headers:?}")))?;
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let num = |i: usize| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad value '{}'", &record[i])))
            };
            let s: usize = record[0]
                .parse()
                .map_err(|_| Error::Parse(format!("bad iteration '{}'", &record[0])))?;
            let (params, ll_col) = match family {
                Family::Normal => (
                    ParameterSet::Normal {
                        mu: num(1)?,
                        sigma2: num(3)?,
                    },
                    4,
                ),
                Family::Laplace => (
                    ParameterSet::Laplace {
                        mu: num(1)?,
                        sigma: num(2)?,
                    },
                    3,
                ),
                Family::Rayleigh => (ParameterSet::Rayleigh { beta: num(1)? }, 2),
            };
            rows.push(TraceRow {
                s,
                params,
                loglik: num(ll_col)?,
            });
        }
        Ok((family, rows))
    }
}

/// Largest absolute change in the reported parameters (σ rather than σ²).
pub(crate) fn max_change(a: &ParameterSet, b: &ParameterSet) -> f64 {
    a.reported()
        .iter()
        .zip(b.reported())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Fits `sample` with the configured algorithm.
pub fn fit(sample: &CensoredSample, config: &FitConfig) -> Result<FitTrace> {
    match config.algorithm {
        Algorithm::Em => em::fit_em(sample, config),
        Algorithm::Mcem => mcem::fit_mcem(sample, config),
        Algorithm::Direct => {
            config.validate()?;
            let start = config.start_for(sample)?;
            let mut trace = FitTrace::start(sample, start)?;
            match direct::fit_direct(sample, config) {
                Ok(report) => {
                    trace.push(sample, report.argmax)?;
                    trace.converged = report.converged;
                }
                Err(Error::NonConvergence { best, .. }) => trace.push(sample, best)?,
                Err(e) => return Err(e),
            }
            Ok(trace)
        }
    }
}
