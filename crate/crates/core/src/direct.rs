//! Direct maximization of the observed-data log-likelihood, used to
//! cross-check EM and MCEM, plus the closed-form censored Rayleigh MLE.

use crate::dist::{Family, ParameterSet};
use crate::error::{Error, Result};
use crate::fit::{default_start, FitConfig};
use crate::numeric::{central_gradient, compensated_sum, norm2};
use crate::sample::{observed_loglik, CensoredSample};
use crate::simplex::{minimize, SimplexOptions};

/// Stationarity threshold for declaring a direct fit converged.
pub const GRADIENT_TOL: f64 = 1e-5;
const FD_REL_STEP: f64 = 1e-6;
const RESTARTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    pub argmax: ParameterSet,
    pub loglik: f64,
    /// Simplex iterations summed over all starts and restarts.
    pub iterations: usize,
    pub converged: bool,
    /// Finite-difference gradient norm at `argmax` in (μ, σ) or β.
    pub gradient_norm: f64,
}

/// Maps the unconstrained search space to parameters: location is measured
/// from `loc` in units of `scale`, and the scale parameter is `scale·eˣ`.
#[derive(Debug, Clone, Copy)]
struct Reparam {
    family: Family,
    loc: f64,
    scale: f64,
}

impl Reparam {
    fn new(sample: &CensoredSample, family: Family) -> Result<Self> {
        let (loc, scale) = match default_start(sample, family)? {
            ParameterSet::Normal { mu, sigma2 } => (mu, sigma2.sqrt()),
            ParameterSet::Laplace { mu, sigma } => (mu, sigma),
            ParameterSet::Rayleigh { beta } => (0.0, beta),
        };
        Ok(Self { family, loc, scale })
    }

    fn decode(&self, x: &[f64]) -> Option<ParameterSet> {
        let p = match self.family {
            Family::Normal => {
                let sigma = self.scale * x[1].exp();
                ParameterSet::Normal {
                    mu: self.loc + self.scale * x[0],
                    sigma2: sigma * sigma,
                }
            }
            Family::Laplace => ParameterSet::Laplace {
                mu: self.loc + self.scale * x[0],
                sigma: self.scale * x[1].exp(),
            },
            Family::Rayleigh => ParameterSet::Rayleigh {
                beta: self.scale * x[0].exp(),
            },
        };
        p.validate().ok().map(|_| p)
    }

    fn encode(&self, p: &ParameterSet) -> Vec<f64> {
        match *p {
            ParameterSet::Normal { mu, sigma2 } => vec![
                (mu - self.loc) / self.scale,
                (sigma2.sqrt() / self.scale).ln(),
            ],
            ParameterSet::Laplace { mu, sigma } => {
                vec![(mu - self.loc) / self.scale, (sigma / self.scale).ln()]
            }
            ParameterSet::Rayleigh { beta } => vec![(beta / self.scale).ln()],
        }
    }

    /// Start offsets in the search space.
    fn start_offsets(&self, count: usize) -> Vec<Vec<f64>> {
        let dim = self.family.param_names().len();
        (0..count)
            .map(|i| {
                let mut x = vec![0.0; dim];
                if i > 0 {
                    let j = i - 1;
                    let ring = (j / (2 * dim) + 1) as f64;
                    let coord = (j / 2) % dim;
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    x[coord] = sign * 0.5 * ring;
                }
                x
            })
            .collect()
    }
}

fn natural_coords(p: &ParameterSet) -> Vec<f64> {
    p.reported()
}

fn from_natural(family: Family, v: &[f64]) -> Option<ParameterSet> {
    let p = match family {
        Family::Normal => ParameterSet::Normal {
            mu: v[0],
            sigma2: v[1] * v[1],
        },
        Family::Laplace => ParameterSet::Laplace {
            mu: v[0],
            sigma: v[1],
        },
        Family::Rayleigh => ParameterSet::Rayleigh { beta: v[0] },
    };
    (v.iter().all(|x| x.is_finite()) && p.validate().is_ok() && v.last() > Some(&0.0)).then_some(p)
}

/// Finite-difference gradient norm of the log-likelihood in (μ, σ) or β.
///
/// For the Laplace location the likelihood has kinks at the data, so that
/// coordinate contributes the distance from zero to the interval spanned by
/// its one-sided derivatives (zero at a kinked maximum).
pub fn stationarity(sample: &CensoredSample, p: &ParameterSet) -> f64 {
    let family = p.family();
    let x = natural_coords(p);
    let ll = |v: &[f64]| {
        from_natural(family, v)
            .and_then(|q| observed_loglik(sample, &q).ok())
            .unwrap_or(f64::NAN)
    };
    let mut grad = central_gradient(ll, &x, FD_REL_STEP);
    if family == Family::Laplace {
        let h = FD_REL_STEP * x[0].abs().max(1.0);
        let centre = ll(&x);
        let left = (centre - ll(&[x[0] - h, x[1]])) / h;
        let right = (ll(&[x[0] + h, x[1]]) - centre) / h;
        let (lo, hi) = (left.min(right), left.max(right));
        grad[0] = if lo <= 0.0 && 0.0 <= hi {
            0.0
        } else {
            lo.abs().min(hi.abs())
        };
    }
    norm2(&grad)
}

/// Where the Laplace location lies strictly between two data points and its
/// profile is flat there, moves it to the midpoint of that interval.
///
/// The μ-derivative between kinks is `(#{y > μ} − #{y < μ} + #{R > μ}) / σ`
/// plus a non-constant term for each censoring time below μ, so the profile
/// is flat exactly when the count vanishes and no censoring time lies below.
fn centre_laplace_location(sample: &CensoredSample, p: ParameterSet) -> ParameterSet {
    let ParameterSet::Laplace { mu, sigma } = p else {
        return p;
    };
    let below = sample
        .units()
        .iter()
        .map(|u| u.w)
        .filter(|&w| w < mu)
        .fold(f64::NEG_INFINITY, f64::max);
    let above = sample
        .units()
        .iter()
        .map(|u| u.w)
        .filter(|&w| w > mu)
        .fold(f64::INFINITY, f64::min);
    if !below.is_finite() || !above.is_finite() || sample.units().iter().any(|u| u.w == mu) {
        return p;
    }
    if sample.censoring_times().any(|r| r < mu) {
        return p;
    }
    let y_above = sample.uncensored().filter(|&y| y > mu).count() as i64;
    let y_below = sample.uncensored().filter(|&y| y < mu).count() as i64;
    let r_above = sample.censoring_times().count() as i64;
    if y_above - y_below + r_above == 0 {
        ParameterSet::Laplace {
            mu: 0.5 * (below + above),
            sigma,
        }
    } else {
        p
    }
}

#[derive(Debug, Clone, Copy)]
struct StartOutcome {
    params: ParameterSet,
    loglik: f64,
    iterations: usize,
    converged: bool,
    gradient_norm: f64,
}

fn run_start(
    sample: &CensoredSample,
    reparam: &Reparam,
    x0: Vec<f64>,
    max_iter: usize,
) -> Option<StartOutcome> {
    let objective = |x: &[f64]| {
        reparam
            .decode(x)
            .and_then(|p| observed_loglik(sample, &p).ok())
            .map(|ll| -ll)
            .unwrap_or(f64::INFINITY)
    };
    let opts = SimplexOptions {
        max_iter,
        ..SimplexOptions::default()
    };
    let mut result = minimize(objective, &x0, opts);
    let mut iterations = result.iterations;
    for _ in 0..RESTARTS {
        let again = minimize(objective, &result.x, opts);
        iterations += again.iterations;
        let improved = again.value < result.value;
        let small = (result.value - again.value).abs() <= 1e-12 * result.value.abs().max(1.0);
        if improved || !result.converged {
            result = again;
        }
        if small && result.converged {
            break;
        }
    }
    let mut params = reparam.decode(&result.x)?;
    if params.family() == Family::Laplace {
        params = centre_laplace_location(sample, params);
    }
    let loglik = observed_loglik(sample, &params).ok()?;
    if !loglik.is_finite() {
        return None;
    }
    let gradient_norm = stationarity(sample, &params);
    Some(StartOutcome {
        params,
        loglik,
        iterations,
        converged: result.converged && gradient_norm <= GRADIENT_TOL,
        gradient_norm,
    })
}

/// Multi-start simplex search over (location, log scale) or log β.
pub fn fit_direct(sample: &CensoredSample, config: &FitConfig) -> Result<OptimizerReport> {
    let family = config.family;
    sample.check_fittable(family)?;
    if let Some(start) = &config.start {
        if start.family() != family {
            return Err(Error::FamilyMismatch {
                expected: family.to_string(),
                got: start.family().to_string(),
            });
        }
    }
    let reparam = Reparam::new(sample, family)?;
    let base = config
        .start
        .map(|p| reparam.encode(&p))
        .unwrap_or_else(|| vec![0.0; family.param_names().len()]);
    let starts: Vec<Vec<f64>> = reparam
        .start_offsets(config.direct_starts.max(1))
        .into_iter()
        .map(|off| base.iter().zip(off).map(|(b, o)| b + o).collect())
        .collect();

    let outcomes: Vec<StartOutcome> = starts
        .into_iter()
        .filter_map(|x0| run_start(sample, &reparam, x0, config.max_iter))
        .collect();
    let total_iterations = outcomes.iter().map(|o| o.iterations).sum();
    // highest log-likelihood wins; ties go to the earliest start
    let pick = |only_converged: bool| {
        outcomes
            .iter()
            .filter(|o| o.converged || !only_converged)
            .fold(None::<&StartOutcome>, |best, o| match best {
                Some(b) if b.loglik >= o.loglik => Some(b),
                _ => Some(o),
            })
    };
    let best_converged = pick(true);
    let best_any = pick(false);
    match best_converged {
        Some(best) => Ok(OptimizerReport {
            argmax: best.params,
            loglik: best.loglik,
            iterations: total_iterations,
            converged: true,
            gradient_norm: best.gradient_norm,
        }),
        None => {
            let fallback = default_start(sample, family)?;
            let (best, loglik) = match best_any {
                Some(o) => (o.params, o.loglik),
                None => (fallback, observed_loglik(sample, &fallback)?),
            };
            Err(Error::NonConvergence { best, loglik })
        }
    }
}

/// `β̂² = Σ wᵢ² / (2m)`, the stationary point of the censored Rayleigh
/// likelihood.
pub fn rayleigh_mle_closed_form(sample: &CensoredSample) -> Result<ParameterSet> {
    sample.check_fittable(Family::Rayleigh)?;
    let sum_sq = compensated_sum(sample.units().iter().map(|u| u.w * u.w));
    ParameterSet::rayleigh((sum_sq / (2.0 * sample.m() as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::Algorithm;
    use crate::sample::Unit;

    #[test]
    fn closed_form_small_cases() {
        let one = CensoredSample::from_type2(&[1.0], 1).unwrap();
        let b = rayleigh_mle_closed_form(&one).unwrap().values()[0];
        assert!((b - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let c = 3.7;
        let same = CensoredSample::new(vec![Unit::observed(c); 6]);
        let b = rayleigh_mle_closed_form(&same).unwrap().values()[0];
        assert!((b - c / 2f64.sqrt()).abs() < 1e-14);
        let none = CensoredSample::from_pairs(&[(1.0, 0)]);
        assert_eq!(rayleigh_mle_closed_form(&none), Err(Error::NoUncensored));
    }

    #[test]
    fn start_offsets_are_distinct() {
        let s = CensoredSample::from_type2(&[1.0, 2.0, 3.0], 4).unwrap();
        let r = Reparam::new(&s, Family::Normal).unwrap();
        let offs = r.start_offsets(5);
        assert_eq!(offs[0], vec![0.0, 0.0]);
        for i in 0..5 {
            for j in 0..i {
                assert_ne!(offs[i], offs[j]);
            }
        }
    }

    #[test]
    fn reparam_round_trip() {
        let s = CensoredSample::from_type2(&[1.0, 2.0, 3.0], 4).unwrap();
        for p in [
            ParameterSet::normal(1.5, 0.7).unwrap(),
            ParameterSet::laplace(-2.0, 3.0).unwrap(),
            ParameterSet::rayleigh(4.0).unwrap(),
        ] {
            let r = Reparam::new(&s, p.family()).unwrap();
            let back = r.decode(&r.encode(&p)).unwrap();
            for (a, b) in back.values().iter().zip(p.values()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn flat_laplace_profile_is_centred() {
        // 4 observed, symmetric: profile flat on (2, 3)
        let s = CensoredSample::from_type2(&[1.0, 2.0, 3.0, 4.0], 4).unwrap();
        let p = centre_laplace_location(&s, ParameterSet::laplace(2.2, 1.0).unwrap());
        assert_eq!(p, ParameterSet::laplace(2.5, 1.0).unwrap());
        // odd count: minimum at the middle point, not an interval
        let s = CensoredSample::from_type2(&[1.0, 2.0, 3.0], 3).unwrap();
        let p = ParameterSet::laplace(2.2, 1.0).unwrap();
        assert_eq!(centre_laplace_location(&s, p), p);
    }

    #[test]
    fn complete_normal_data_matches_closed_form() {
        let data = [2.1, 3.4, 1.9, 5.5, 4.0, 3.3];
        let s = CensoredSample::from_type2(&data, 6).unwrap();
        let cfg = FitConfig::new(Algorithm::Direct, Family::Normal);
        let rep = fit_direct(&s, &cfg).unwrap();
        let mean = data.iter().sum::<f64>() / 6.0;
        let var = data.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / 6.0;
        let v = rep.argmax.values();
        assert!(rep.converged);
        assert!((v[0] - mean).abs() < 1e-7, "{v:?}");
        assert!((v[1] - var).abs() < 1e-7);
        assert!(rep.gradient_norm <= GRADIENT_TOL);
    }

    #[test]
    fn all_censored_refused() {
        let s = CensoredSample::from_pairs(&[(1.0, 0), (4.0, 0)]);
        let cfg = FitConfig::new(Algorithm::Direct, Family::Normal);
        assert_eq!(fit_direct(&s, &cfg), Err(Error::NoUncensored));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let s = CensoredSample::from_type2(&[1.0, 1.5, 2.0, 4.0], 6).unwrap();
        let cfg = FitConfig::new(Algorithm::Direct, Family::Normal).with_max_iter(2);
        assert!(matches!(
            fit_direct(&s, &cfg),
            Err(Error::NonConvergence { .. })
        ));
    }
}
