#![allow(dead_code)]

use std::path::PathBuf;

use censored_em::dist::{self, ParameterSet};
use censored_em::rng::{RandomStream, StreamKey};
use censored_em::{CensoredSample, Unit};

pub const GUPTA_OBSERVED: [f64; 7] = [1.613, 1.644, 1.663, 1.732, 1.740, 1.763, 1.778];
pub const RAYLEIGH_OBSERVED: [f64; 15] = [
    1.950, 2.295, 4.282, 4.339, 4.411, 4.460, 4.699, 5.319, 5.440, 5.777, 7.485, 7.620, 8.181,
    8.443, 10.627,
];

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

pub fn gupta() -> CensoredSample {
    CensoredSample::read_csv_path(data_path("gupta.csv")).unwrap()
}

pub fn balakrishnan() -> CensoredSample {
    CensoredSample::read_csv_path(data_path("balakrishnan.csv")).unwrap()
}

pub fn rayleigh_example() -> CensoredSample {
    CensoredSample::read_csv_path(data_path("rayleigh.csv")).unwrap()
}

/// Composite Simpson rule on [a, b] with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

/// E[g(X) | X > bound] by quadrature of the untruncated density over
/// (bound, bound + span).
pub fn truncated_expectation<G: Fn(f64) -> f64>(
    p: &ParameterSet,
    bound: f64,
    span: f64,
    g: G,
) -> f64 {
    let mass = simpson(|x| dist::pdf(p, x).unwrap(), bound, bound + span, 400_000);
    let moment = simpson(
        |x| g(x) * dist::pdf(p, x).unwrap(),
        bound,
        bound + span,
        400_000,
    );
    moment / mass
}

/// Kolmogorov-Smirnov statistic of `draws` against `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(draws: &mut [f64], cdf: F) -> f64 {
    draws.sort_by(f64::total_cmp);
    let n = draws.len() as f64;
    draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Critical value of the KS statistic at significance 0.001 (asymptotic).
pub fn ks_critical_001(n: usize) -> f64 {
    1.949_5 / (n as f64).sqrt()
}

pub struct SampleGen {
    stream: RandomStream,
}

impl SampleGen {
    pub fn new(seed: u64) -> Self {
        Self {
            stream: RandomStream::new(seed, StreamKey::new(0, u64::MAX, 0)),
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.stream.next_uniform()
    }

    pub fn range_usize(&mut self, lo: usize, hi_inclusive: usize) -> usize {
        lo + (self.uniform() * (hi_inclusive - lo + 1) as f64) as usize
    }

    pub fn range_f64(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn draw(&mut self, p: &ParameterSet) -> f64 {
        dist::quantile(p, self.uniform()).unwrap()
    }

    /// Random right censoring: each unit is censored with probability
    /// `fraction`, at a time drawn below its lifetime. Resamples until at
    /// least `min_observed` units are uncensored.
    pub fn censored_sample(
        &mut self,
        p: &ParameterSet,
        n: usize,
        fraction: f64,
        min_observed: usize,
    ) -> CensoredSample {
        let scale = p.reported()[p.reported().len() - 1];
        loop {
            let mut units = Vec::with_capacity(n);
            for _ in 0..n {
                let x = self.draw(p);
                if self.uniform() < fraction {
                    let gap = -scale * self.uniform().ln();
                    let r = match p {
                        ParameterSet::Rayleigh { .. } => x * self.uniform(),
                        _ => x - gap,
                    };
                    units.push(Unit::censored(r));
                } else {
                    units.push(Unit::observed(x));
                }
            }
            let s = CensoredSample::new(units);
            if s.m() >= min_observed {
                return s;
            }
        }
    }
}
