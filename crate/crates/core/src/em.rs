//! Exact EM for right-censored normal samples.
//!
//! The censored lifetimes follow the normal law truncated to (Rⱼ, ∞), whose
//! first two moments are closed-form in the Mills ratio λ(α) = φ(α)/(1 − Φ(α)):
//!
//! ```text
//! E[z]  = μ + σ λ(α)
//! E[z²] = μ² + σ² + (μ + R) σ λ(α),     α = (R − μ)/σ
//! ```
//!
//! The M-step is the complete-data MLE with these expectations plugged in.

use crate::dist::{std_normal, Family, ParameterSet};
use crate::error::{Error, Result};
use crate::fit::{max_change, Algorithm, FitConfig, FitTrace};
use crate::numeric::CompensatedSum;
use crate::sample::CensoredSample;

/// Standardized truncation point beyond which the E-step refuses to run.
pub const MAX_STANDARDIZED_TRUNCATION: f64 = 38.0;

/// Sufficient statistics of one E-step, taken about `shift`:
/// `t1 = Σ(y − c)`, `t2 = Σ(y − c)²` over uncensored values, and `s1`, `s2`
/// the conditional expectations of `Σ(z − c)` and `Σ(z − c)²` over the
/// censored ones. With `shift = 0` these are the plain T₁, T₂, S₁, S₂.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalSuffStats {
    pub t1: f64,
    pub t2: f64,
    pub s1: f64,
    pub s2: f64,
    pub shift: f64,
}

impl NormalSuffStats {
    pub fn unshifted(t1: f64, t2: f64, s1: f64, s2: f64) -> Self {
        Self {
            t1,
            t2,
            s1,
            s2,
            shift: 0.0,
        }
    }
}

fn normal_parts(theta: &ParameterSet) -> Result<(f64, f64)> {
    match *theta {
        ParameterSet::Normal { mu, sigma2 } => {
            theta.validate()?;
            Ok((mu, sigma2))
        }
        other => Err(Error::FamilyMismatch {
            expected: Family::Normal.to_string(),
            got: other.family().to_string(),
        }),
    }
}

/// Centre used for the sufficient statistics: the mean of the uncensored
/// values (or 0 if there are none).
pub fn stats_shift(sample: &CensoredSample) -> f64 {
    let m = sample.m();
    if m == 0 {
        0.0
    } else {
        sample.uncensored().collect::<CompensatedSum>().value() / m as f64
    }
}

pub fn e_step(sample: &CensoredSample, theta: &ParameterSet) -> Result<NormalSuffStats> {
    e_step_shifted(sample, theta, 0.0)
}

pub fn e_step_shifted(
    sample: &CensoredSample,
    theta: &ParameterSet,
    shift: f64,
) -> Result<NormalSuffStats> {
    let (mu, sigma2) = normal_parts(theta)?;
    let sigma = sigma2.sqrt();
    let mut t1 = CompensatedSum::new();
    let mut t2 = CompensatedSum::new();
    for y in sample.uncensored() {
        let d = y - shift;
        t1.add(d);
        t2.add(d * d);
    }
    let mut s1 = CompensatedSum::new();
    let mut s2 = CompensatedSum::new();
    let centred_mu = mu - shift;
    for bound in sample.censoring_times() {
        let alpha = (bound - mu) / sigma;
        if alpha > MAX_STANDARDIZED_TRUNCATION {
            return Err(Error::NumericRange(format!(
                "censoring time {bound} lies {alpha:.1} standard deviations above mu = {mu}; \
                 the truncated normal moments underflow (try a different start)"
            )));
        }
        let hazard_term = sigma * std_normal::mills_ratio(alpha);
        s1.add(centred_mu + hazard_term);
        s2.add(centred_mu * centred_mu + sigma2 + (centred_mu + (bound - shift)) * hazard_term);
    }
    Ok(NormalSuffStats {
        t1: t1.value(),
        t2: t2.value(),
        s1: s1.value(),
        s2: s2.value(),
        shift,
    })
}

/// `μ = c + (T₁ + S₁)/n`, `σ² = (T₂ + S₂)/n − ((T₁ + S₁)/n)²`.
pub fn m_step(stats: &NormalSuffStats, n: usize) -> Result<ParameterSet> {
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let n = n as f64;
    let first = (stats.t1 + stats.s1) / n;
    let second = (stats.t2 + stats.s2) / n;
    let sigma2 = second - first * first;
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(Error::DegenerateData(format!(
            "variance update {sigma2} is not positive (all mass at one point?)"
        )));
    }
    ParameterSet::normal(stats.shift + first, sigma2)
}

/// Alternates [`e_step`] and [`m_step`] from the configured start until the
/// largest change in (μ, σ) falls below `tol` or `max_iter` is reached.
pub fn fit_em(sample: &CensoredSample, config: &FitConfig) -> Result<FitTrace> {
    if config.algorithm != Algorithm::Em {
        return Err(Error::Parse(format!(
            "fit_em called with algorithm {}",
            config.algorithm
        )));
    }
    config.validate()?;
    sample.check_fittable(Family::Normal)?;
    let start = config.start_for(sample)?;
    let shift = stats_shift(sample);
    let fully_observed = sample.m() == sample.n();
    let mut trace = FitTrace::start(sample, start)?;
    let mut theta = start;
    for _ in 0..config.max_iter {
        let stats = e_step_shifted(sample, &theta, shift)?;
        let next = m_step(&stats, sample.n())?;
        trace.push(sample, next)?;
        let change = max_change(&theta, &next);
        theta = next;
        // With nothing censored the E-step ignores θ, so one step is final.
        if fully_observed || change < config.tol {
            trace.converged = true;
            break;
        }
    }
    Ok(trace)
}
