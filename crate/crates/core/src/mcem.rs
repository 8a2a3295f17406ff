//! Monte Carlo EM for the normal, Laplace and Rayleigh families.
//!
//! Each iteration draws K completions of every censored unit from the
//! truncated predictive law at the current parameters and applies the
//! closed-form maximizer of the averaged complete-data log-likelihood.
//!
//! The draw for unit `i`, replicate `k` at iteration `s` is the first uniform
//! of stream `(seed, s, i, k)`. Draws are reduced in fixed chunks whose
//! partial sums are merged in index order, so results are bit-identical for
//! any number of worker threads.

use rayon::prelude::*;

use crate::dist::{Family, ParameterSet};
use crate::em::stats_shift;
use crate::error::{Error, Result};
use crate::fit::{max_change, Algorithm, FitConfig, FitTrace, McemStopping};
use crate::median::weighted_median;
use crate::numeric::CompensatedSum;
use crate::rng::{uniform_at, StreamKey};
use crate::sample::CensoredSample;
use crate::truncated::sample_truncated;

const CHUNK: usize = 4096;

/// Addresses the draws of one MCEM iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IterationStream {
    pub seed: u64,
    /// 1-based EM iteration.
    pub iteration: u64,
}

/// Monte Carlo sums over all censored units and replicates, taken about
/// `shift`: `v1 = Σ (z − c)`, `v2 = Σ (z − c)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloAccumulator {
    pub replicates: usize,
    pub censored: usize,
    pub shift: f64,
    pub v1: f64,
    pub v2: f64,
    /// Every draw, unit-major, when retention was requested.
    pub draws: Option<Vec<f64>>,
}

impl MonteCarloAccumulator {
    pub fn draw_count(&self) -> usize {
        self.replicates * self.censored
    }

    /// V₁ = Σₖ Σᵢ z_{i,k}.
    pub fn raw_v1(&self) -> f64 {
        self.v1 + self.draw_count() as f64 * self.shift
    }

    /// V₂ = Σₖ Σᵢ z²_{i,k}.
    pub fn raw_v2(&self) -> f64 {
        let n = self.draw_count() as f64;
        self.v2 + 2.0 * self.shift * self.v1 + n * self.shift * self.shift
    }
}

struct Partial {
    v1: CompensatedSum,
    v2: CompensatedSum,
    draws: Vec<f64>,
}

/// Draws K completions of every censored unit under `theta` and accumulates
/// them. The draws themselves are kept when `retain` is set.
pub fn simulate_censored(
    sample: &CensoredSample,
    theta: &ParameterSet,
    replicates: usize,
    stream: IterationStream,
    shift: f64,
    retain: bool,
) -> Result<MonteCarloAccumulator> {
    theta.validate()?;
    if replicates == 0 {
        return Err(Error::ParameterDomain("K must be >= 1".into()));
    }
    let censored: Vec<(u64, f64)> = sample
        .units()
        .iter()
        .enumerate()
        .filter(|(_, u)| u.is_censored())
        .map(|(i, u)| (i as u64, u.w))
        .collect();
    let chunks_per_unit = replicates.div_ceil(CHUNK);
    let tasks: Vec<(u64, f64, usize)> = censored
        .iter()
        .flat_map(|&(i, bound)| (0..chunks_per_unit).map(move |c| (i, bound, c)))
        .collect();

    let partials: Vec<Result<Partial>> = tasks
        .par_iter()
        .map(|&(unit, bound, chunk)| {
            let first = chunk * CHUNK;
            let last = (first + CHUNK).min(replicates);
            let mut part = Partial {
                v1: CompensatedSum::new(),
                v2: CompensatedSum::new(),
                draws: Vec::with_capacity(if retain { last - first } else { 0 }),
            };
            for k in first..last {
                let key = StreamKey::new(stream.iteration, unit, k as u64 + 1);
                let z = sample_truncated(theta, bound, uniform_at(stream.seed, key))?;
                let d = z - shift;
                part.v1.add(d);
                part.v2.add(d * d);
                if retain {
                    part.draws.push(z);
                }
            }
            Ok(part)
        })
        .collect();

    let mut v1 = CompensatedSum::new();
    let mut v2 = CompensatedSum::new();
    let mut draws = retain.then(|| Vec::with_capacity(replicates * censored.len()));
    for part in partials {
        let part = part?;
        v1.merge(&part.v1);
        v2.merge(&part.v2);
        if let Some(all) = draws.as_mut() {
            all.extend_from_slice(&part.draws);
        }
    }
    Ok(MonteCarloAccumulator {
        replicates,
        censored: censored.len(),
        shift,
        v1: v1.value(),
        v2: v2.value(),
        draws,
    })
}

fn expect_family(theta: &ParameterSet, family: Family) -> Result<()> {
    if theta.family() == family {
        Ok(())
    } else {
        Err(Error::FamilyMismatch {
            expected: family.to_string(),
            got: theta.family().to_string(),
        })
    }
}

/// `μ = (T₁ + V₁/K)/n`, `σ² = (T₂ + V₂/K)/n − μ²`, with all sums taken about
/// the uncensored mean.
pub fn mcem_step_normal(
    sample: &CensoredSample,
    theta: &ParameterSet,
    replicates: usize,
    stream: IterationStream,
) -> Result<ParameterSet> {
    expect_family(theta, Family::Normal)?;
    let shift = stats_shift(sample);
    let mut t1 = CompensatedSum::new();
    let mut t2 = CompensatedSum::new();
    for y in sample.uncensored() {
        t1.add(y - shift);
        t2.add((y - shift) * (y - shift));
    }
    let acc = simulate_censored(sample, theta, replicates, stream, shift, false)?;
    let n = sample.n() as f64;
    let k = replicates as f64;
    let first = (t1.value() + acc.v1 / k) / n;
    let sigma2 = (t2.value() + acc.v2 / k) / n - first * first;
    if !(sigma2 > 0.0) {
        return Err(Error::DegenerateData(format!(
            "variance update {sigma2} is not positive"
        )));
    }
    ParameterSet::normal(shift + first, sigma2)
}

/// Location: median of the multiset holding every uncensored value K times
/// and every draw once. Scale: mean absolute deviation about it, with the
/// censored part averaged over replicates.
pub fn mcem_step_laplace(
    sample: &CensoredSample,
    theta: &ParameterSet,
    replicates: usize,
    stream: IterationStream,
) -> Result<ParameterSet> {
    expect_family(theta, Family::Laplace)?;
    let acc = simulate_censored(sample, theta, replicates, stream, 0.0, true)?;
    let draws = acc.draws.expect("draws retained");
    let k = replicates as u64;
    let mut items: Vec<(f64, u64)> = sample
        .uncensored()
        .map(|y| (y, k))
        .chain(draws.iter().map(|&z| (z, 1)))
        .collect();
    let mu = weighted_median(&mut items).ok_or(Error::EmptySample)?;
    let observed_dev: f64 = sample
        .uncensored()
        .map(|y| (y - mu).abs())
        .collect::<CompensatedSum>()
        .value();
    let draw_dev: f64 = draws
        .iter()
        .map(|z| (z - mu).abs())
        .collect::<CompensatedSum>()
        .value();
    let sigma = (observed_dev + draw_dev / replicates as f64) / sample.n() as f64;
    if !(sigma > 0.0) {
        return Err(Error::DegenerateData(format!(
            "scale update {sigma} is not positive"
        )));
    }
    ParameterSet::laplace(mu, sigma)
}

/// `β = √((T₂ + V₂/K) / 2n)`.
pub fn mcem_step_rayleigh(
    sample: &CensoredSample,
    theta: &ParameterSet,
    replicates: usize,
    stream: IterationStream,
) -> Result<ParameterSet> {
    expect_family(theta, Family::Rayleigh)?;
    let t2: f64 = sample
        .uncensored()
        .map(|y| y * y)
        .collect::<CompensatedSum>()
        .value();
    let acc = simulate_censored(sample, theta, replicates, stream, 0.0, false)?;
    let beta2 = (t2 + acc.v2 / replicates as f64) / (2.0 * sample.n() as f64);
    ParameterSet::rayleigh(beta2.sqrt())
}

pub fn mcem_step(
    sample: &CensoredSample,
    theta: &ParameterSet,
    replicates: usize,
    stream: IterationStream,
) -> Result<ParameterSet> {
    match theta.family() {
        Family::Normal => mcem_step_normal(sample, theta, replicates, stream),
        Family::Laplace => mcem_step_laplace(sample, theta, replicates, stream),
        Family::Rayleigh => mcem_step_rayleigh(sample, theta, replicates, stream),
    }
}

/// Replicate count at 1-based iteration `s`.
pub fn replicates_at(config: &FitConfig, s: usize) -> usize {
    match config.mc_growth {
        None => config.mc_size,
        Some(g) => {
            let k = config.mc_size as f64 * g.powi(s as i32 - 1);
            k.ceil().min(usize::MAX as f64) as usize
        }
    }
}

pub fn fit_mcem(sample: &CensoredSample, config: &FitConfig) -> Result<FitTrace> {
    if config.algorithm != Algorithm::Mcem {
        return Err(Error::Parse(format!(
            "fit_mcem called with algorithm {}",
            config.algorithm
        )));
    }
    config.validate()?;
    sample.check_fittable(config.family)?;
    let start = config.start_for(sample)?;
    if config.workers == 0 {
        run_mcem(sample, config, start)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::Io(format!("thread pool: {e}")))?;
        pool.install(|| run_mcem(sample, config, start))
    }
}

fn run_mcem(sample: &CensoredSample, config: &FitConfig, start: ParameterSet) -> Result<FitTrace> {
    let mut trace = FitTrace::start(sample, start)?;
    let mut theta = start;
    let mut small_run = 0;
    for s in 1..=config.max_iter {
        let stream = IterationStream {
            seed: config.seed,
            iteration: s as u64,
        };
        let next = mcem_step(sample, &theta, replicates_at(config, s), stream)?;
        trace.push(sample, next)?;
        let change = max_change(&theta, &next);
        theta = next;
        if let McemStopping::ConsecutiveSmallChanges(needed) = config.stopping {
            small_run = if change < config.tol {
                small_run + 1
            } else {
                0
            };
            if small_run >= needed {
                trace.converged = true;
                return Ok(trace);
            }
        }
    }
    trace.converged = config.stopping == McemStopping::FixedIterations;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(s: u64) -> IterationStream {
        IterationStream {
            seed: 7,
            iteration: s,
        }
    }

    #[test]
    fn complete_laplace_data_is_median_and_mad() {
        let s = CensoredSample::from_type2(&[1.0, 2.0, 4.0, 8.0, 9.0], 5).unwrap();
        let theta = ParameterSet::laplace(100.0, 0.3).unwrap();
        let next = mcem_step_laplace(&s, &theta, 17, stream(1)).unwrap();
        assert_eq!(
            next,
            ParameterSet::laplace(4.0, (3.0 + 2.0 + 0.0 + 4.0 + 5.0) / 5.0).unwrap()
        );
    }

    #[test]
    fn complete_rayleigh_data_is_closed_form() {
        let s = CensoredSample::from_type2(&[1.0, 2.0, 3.0], 3).unwrap();
        for beta in [0.1, 5.0, 50.0] {
            let next = mcem_step_rayleigh(&s, &ParameterSet::rayleigh(beta).unwrap(), 3, stream(1))
                .unwrap();
            assert!((next.values()[0] - (14.0_f64 / 6.0).sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn retained_draws_exceed_their_bounds() {
        let s = CensoredSample::from_pairs(&[(1.0, 1), (2.0, 0), (5.0, 0)]);
        let theta = ParameterSet::normal(1.0, 1.0).unwrap();
        let acc = simulate_censored(&s, &theta, 5000, stream(2), 0.0, true).unwrap();
        let draws = acc.draws.as_ref().unwrap();
        assert_eq!(draws.len(), 10_000);
        assert!(draws[..5000].iter().all(|&z| z > 2.0));
        assert!(draws[5000..].iter().all(|&z| z > 5.0));
        assert!(acc.v2 >= 0.0);
        assert!(acc.v2 * 10_000.0 >= acc.v1 * acc.v1);
    }

    #[test]
    fn shifted_accumulator_recovers_raw_sums() {
        let s = CensoredSample::from_pairs(&[(1.0, 1), (2.0, 0), (3.0, 0)]);
        let theta = ParameterSet::normal(1.0, 1.0).unwrap();
        let raw = simulate_censored(&s, &theta, 1000, stream(3), 0.0, false).unwrap();
        let shifted = simulate_censored(&s, &theta, 1000, stream(3), 1.5, false).unwrap();
        assert!((raw.v1 - shifted.raw_v1()).abs() < 1e-9 * raw.v1.abs());
        assert!((raw.v2 - shifted.raw_v2()).abs() < 1e-9 * raw.v2.abs());
    }

    #[test]
    fn replicate_growth_schedule() {
        let mut cfg = FitConfig::new(Algorithm::Mcem, Family::Normal).with_mc_size(100);
        assert_eq!(replicates_at(&cfg, 1), 100);
        assert_eq!(replicates_at(&cfg, 5), 100);
        cfg.mc_growth = Some(1.5);
        assert_eq!(replicates_at(&cfg, 1), 100);
        assert_eq!(replicates_at(&cfg, 3), 225);
    }

    #[test]
    fn consecutive_stopping_rule() {
        let s = CensoredSample::from_type2(&[1.0, 2.0, 3.0], 3).unwrap();
        let mut cfg = FitConfig::new(Algorithm::Mcem, Family::Rayleigh)
            .with_mc_size(10)
            .with_max_iter(50)
            .with_start(ParameterSet::rayleigh(1.0).unwrap());
        cfg.stopping = McemStopping::ConsecutiveSmallChanges(3);
        // complete data: fixed after one step, then three zero changes
        let t = fit_mcem(&s, &cfg).unwrap();
        assert!(t.converged);
        assert_eq!(t.iterations(), 4);
    }

    #[test]
    fn all_censored_refused() {
        let s = CensoredSample::from_pairs(&[(1.0, 0), (2.0, 0)]);
        let cfg = FitConfig::new(Algorithm::Mcem, Family::Laplace).with_mc_size(10);
        assert_eq!(fit_mcem(&s, &cfg), Err(Error::NoUncensored));
    }
}
