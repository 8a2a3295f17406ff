//! Right-censored samples `(wᵢ, δᵢ)` with `wᵢ = min(xᵢ, Rᵢ)` and `δᵢ = 1` when
//! the lifetime itself was observed.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::dist::{self, Family, ParameterSet};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unit {
    pub w: f64,
    /// 1 = observed failure, 0 = right-censored at `w`.
    pub delta: u8,
}

impl Unit {
    pub fn observed(w: f64) -> Self {
        Self { w, delta: 1 }
    }

    pub fn censored(w: f64) -> Self {
        Self { w, delta: 0 }
    }

    #[inline]
    pub fn is_censored(&self) -> bool {
        self.delta == 0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CensoredSample {
    units: Vec<Unit>,
}

impl CensoredSample {
    /// Wraps units as given. Use [`CensoredSample::validate`] before fitting;
    /// the estimators do so themselves.
    pub fn new(units: Vec<Unit>) -> Self {
        Self { units }
    }

    pub fn from_pairs(pairs: &[(f64, u8)]) -> Self {
        Self::new(pairs.iter().map(|&(w, delta)| Unit { w, delta }).collect())
    }

    /// Type-II censoring: the `r` smallest of `n` lifetimes are observed and
    /// the remaining `n − r` units are censored at the largest of them.
    pub fn from_type2(observed: &[f64], n: usize) -> Result<Self> {
        if observed.is_empty() {
            return Err(Error::EmptySample);
        }
        let r = observed.len();
        if r > n {
            return Err(Error::Count {
                observed: r,
                total: n,
            });
        }
        if let Some(bad) = observed.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidSample(vec![format!(
                "non-finite observation {bad}"
            )]));
        }
        let mut sorted = observed.to_vec();
        sorted.sort_by(f64::total_cmp);
        let largest = sorted[r - 1];
        let mut units: Vec<Unit> = sorted.into_iter().map(Unit::observed).collect();
        units.extend(std::iter::repeat_n(Unit::censored(largest), n - r));
        Ok(Self::new(units))
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn n(&self) -> usize {
        self.units.len()
    }

    /// Number of uncensored units.
    pub fn m(&self) -> usize {
        self.units.iter().filter(|u| !u.is_censored()).count()
    }

    pub fn uncensored(&self) -> impl Iterator<Item = f64> + '_ {
        self.units.iter().filter(|u| !u.is_censored()).map(|u| u.w)
    }

    /// Censoring times of the censored units.
    pub fn censoring_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.units.iter().filter(|u| u.is_censored()).map(|u| u.w)
    }

    /// Reports every invariant violation of the sample for `family`.
    pub fn validate(&self, family: Family) -> Validation {
        let mut report = Validation::default();
        if self.units.is_empty() {
            report.violations.push(Violation::Empty);
            return report;
        }
        for (index, unit) in self.units.iter().enumerate() {
            if unit.delta > 1 {
                report.violations.push(Violation::BadIndicator {
                    index,
                    delta: unit.delta,
                });
            }
            if !unit.w.is_finite() {
                report
                    .violations
                    .push(Violation::NonFinite { index, w: unit.w });
            } else if family == Family::Rayleigh && unit.w <= 0.0 {
                report
                    .violations
                    .push(Violation::NonPositive { index, w: unit.w });
            }
        }
        if self.m() == 0 {
            report.warnings.push(Warning::AllCensored);
        }
        report
    }

    /// Validation for estimation: violations are errors, and so is m = 0.
    pub fn check_fittable(&self, family: Family) -> Result<()> {
        let report = self.validate(family);
        if report.violations.contains(&Violation::Empty) {
            return Err(Error::EmptySample);
        }
        if !report.violations.is_empty() {
            return Err(Error::InvalidSample(
                report.violations.iter().map(ToString::to_string).collect(),
            ));
        }
        if report.warnings.contains(&Warning::AllCensored) {
            return Err(Error::NoUncensored);
        }
        Ok(())
    }

    /// Reads the `w,delta` CSV format.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() {
            return Err(Error::EmptySample);
        }
        if headers.len() != 2 || &headers[0] != "w" || &headers[1] != "delta" {
            return Err(Error::Parse(format!(
                "expected header 'w,delta', found '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut units = Vec::new();
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            let row = line + 2;
            let w: f64 = record[0]
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad w '{}'", &record[0])))?;
            let delta: u8 = record[1]
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad delta '{}'", &record[1])))?;
            units.push(Unit { w, delta });
        }
        if units.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self::new(units))
    }

    pub fn read_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::read_csv(file)
    }

    /// Writes the `w,delta` CSV format; values use shortest round-trip form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["w", "delta"])?;
        for unit in &self.units {
            wtr.write_record([unit.w.to_string(), unit.delta.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    BadIndicator { index: usize, delta: u8 },
    NonFinite { index: usize, w: f64 },
    NonPositive { index: usize, w: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "empty sample"),
            Violation::BadIndicator { index, delta } => {
                write!(
                    f,
                    "unit {index}: censoring indicator {delta} not in {{0,1}}"
                )
            }
            Violation::NonFinite { index, w } => write!(f, "unit {index}: non-finite value {w}"),
            Violation::NonPositive { index, w } => {
                write!(f, "unit {index}: nonpositive observation {w}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Warning {
    AllCensored,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::AllCensored => write!(f, "likelihood unbounded; estimation refused"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Validation {
    pub violations: Vec<Violation>,
    pub warnings: Vec<Warning>,
}

impl Validation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Observed-data log-likelihood `Σ δᵢ ln f(wᵢ) + (1 − δᵢ) ln S(wᵢ)`, without
/// any normalizing constant. Returns −∞ when an uncensored point has zero
/// density.
pub fn observed_loglik(sample: &CensoredSample, p: &ParameterSet) -> Result<f64> {
    p.validate()?;
    let mut acc = CompensatedSum::new();
    for unit in sample.units() {
        let term = if unit.is_censored() {
            dist::log_survival_unchecked(p, unit.w)
        } else {
            dist::log_pdf_unchecked(p, unit.w)
        };
        if term == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        acc.add(term);
    }
    Ok(acc.value())
}
