//! Inverse-transform samplers for left-truncated distributions, i.e. the law
//! of X given X > R. All randomness comes in through the uniform `u`.
//!
//! Returned values are strictly greater than the bound: when rounding lands
//! a draw on `R` itself, the next representable value above `R` is returned.

use crate::dist::{std_normal, ParameterSet};
use crate::error::{Error, Result};

fn check_uniform(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("uniform draw {u} outside (0, 1)")))
    }
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::ParameterDomain(format!(
            "{name} = {v} (must be > 0)"
        )))
    }
}

#[inline]
fn above(x: f64, bound: f64) -> f64 {
    if x > bound {
        x
    } else {
        bound.next_up()
    }
}

/// Normal(μ, σ²) truncated to (R, ∞).
///
/// For `r = (R − μ)/σ ≤ 0` this is `μ + σ Φ⁻¹((1 − Φ(r))u + Φ(r))`. For
/// `r > 0` the same point is located through the upper tail,
/// `μ + σ Q⁻¹(Q(r)(1 − u))`, which stays accurate when Φ(r) rounds to 1.
pub fn sample_truncated_normal(mu: f64, sigma: f64, bound: f64, u: f64) -> Result<f64> {
    check_scale("sigma", sigma)?;
    check_uniform(u)?;
    if !mu.is_finite() {
        return Err(Error::ParameterDomain(format!("mu = {mu}")));
    }
    let r = (bound - mu) / sigma;
    let x = if r <= 0.0 {
        let lower = std_normal::cdf(r);
        mu + sigma * std_normal::inv_cdf((1.0 - lower) * u + lower)
    } else {
        let tail = std_normal::sf(r);
        if tail < f64::MIN_POSITIVE {
            return Err(Error::TailUnderflow { standardized: r });
        }
        mu + sigma * std_normal::inv_sf(tail * (1.0 - u))
    };
    Ok(above(x, bound))
}

/// Split point `H = (1 − eʳ)/(2 − eʳ)` between the two branches used when
/// the bound lies below the location (`r < 0`).
pub fn laplace_branch_threshold(r: f64) -> f64 {
    let e = r.exp();
    (1.0 - e) / (2.0 - e)
}

/// Laplace(μ, σ) truncated to (R, ∞).
///
/// * `R ≥ μ`: `X = R − σ ln u` (the truncated law is a shifted exponential).
/// * `R < μ`: with `r = (R − μ)/σ` and `H` from [`laplace_branch_threshold`],
///   `X = μ + σ ln(2u + (1 − u)eʳ)` for `u ≤ H` and
///   `X = μ − σ ln(2(1 − u) − (1 − u)eʳ)` otherwise.
pub fn sample_truncated_laplace(mu: f64, sigma: f64, bound: f64, u: f64) -> Result<f64> {
    check_scale("sigma", sigma)?;
    check_uniform(u)?;
    if !mu.is_finite() {
        return Err(Error::ParameterDomain(format!("mu = {mu}")));
    }
    let x = if bound >= mu {
        bound - sigma * u.ln()
    } else {
        let r = (bound - mu) / sigma;
        let e = r.exp();
        if u <= laplace_branch_threshold(r) {
            mu + sigma * (2.0 * u + (1.0 - u) * e).ln()
        } else {
            mu - sigma * (2.0 * (1.0 - u) - (1.0 - u) * e).ln()
        }
    };
    Ok(above(x, bound))
}

/// Rayleigh(β) truncated to (R, ∞): `X = √(R² − 2β² ln u)`.
pub fn sample_truncated_rayleigh(beta: f64, bound: f64, u: f64) -> Result<f64> {
    check_scale("beta", beta)?;
    check_uniform(u)?;
    if !(bound >= 0.0) || !bound.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "truncation point {bound} (must be >= 0 for rayleigh)"
        )));
    }
    let x = (bound * bound - 2.0 * beta * beta * u.ln()).sqrt();
    Ok(above(x, bound))
}

/// Dispatches to the family's truncated sampler.
pub fn sample_truncated(p: &ParameterSet, bound: f64, u: f64) -> Result<f64> {
    match *p {
        ParameterSet::Normal { mu, sigma2 } => {
            check_scale("sigma2", sigma2)?;
            sample_truncated_normal(mu, sigma2.sqrt(), bound, u)
        }
        ParameterSet::Laplace { mu, sigma } => sample_truncated_laplace(mu, sigma, bound, u),
        ParameterSet::Rayleigh { beta } => sample_truncated_rayleigh(beta, bound, u),
    }
}
