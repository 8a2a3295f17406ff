use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use censored_em::{
    fit, observed_loglik, Algorithm, CensoredSample, Family, FitConfig, FitTrace, McemStopping,
    ParameterSet,
};

use crate::FitArgs;

pub type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Done,
    NotConverged,
}

/// Parses comma-separated parameter values in the family's layout.
pub fn parse_params(family: Family, text: &str) -> CliResult<ParameterSet> {
    let values = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| format!("parameters {text:?}: {e}"))?;
    let expected = family.param_names().join(",");
    if values.len() != family.param_names().len() {
        return Err(format!(
            "{family} takes {} value(s) ({expected}), got {}",
            family.param_names().len(),
            values.len()
        )
        .into());
    }
    Ok(ParameterSet::from_values(family, &values)?)
}

fn build_config(args: &FitArgs, sample: &CensoredSample) -> CliResult<FitConfig> {
    let algorithm = args
        .algorithm
        .unwrap_or_else(|| Algorithm::default_for(args.family));
    let mut config = FitConfig::new(algorithm, args.family)
        .with_mc_size(args.k)
        .with_tol(args.tol)
        .with_seed(args.seed)
        .with_workers(args.workers);
    if let Some(max_iter) = args.max_iter {
        config = config.with_max_iter(max_iter);
    }
    config.mc_growth = args.k_growth;
    if let Some(needed) = args.stop_after_small {
        config.stopping = McemStopping::ConsecutiveSmallChanges(needed);
    }
    config.validate()?;
    let start = match &args.start {
        Some(text) => parse_params(args.family, text)?,
        None => config.start_for(sample)?,
    };
    Ok(config.with_start(start))
}

/// Command line that reproduces the run, with the start made explicit.
fn echo(args: &FitArgs, config: &FitConfig) -> String {
    let start = config
        .start
        .map(|p| {
            p.values()
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(",")
        })
        .unwrap_or_default();
    let mut line = format!(
        "fit --family {} --algorithm {} --data {} --start {start} --max-iter {} --tol {:e} --seed {}",
        config.family,
        config.algorithm,
        args.data.display(),
        config.max_iter,
        config.tol,
        config.seed,
    );
    if config.algorithm == Algorithm::Mcem {
        let _ = write!(line, " --k {}", config.mc_size);
        if let Some(g) = config.mc_growth {
            let _ = write!(line, " --k-growth {g:?}");
        }
        if let McemStopping::ConsecutiveSmallChanges(n) = config.stopping {
            let _ = write!(line, " --stop-after-small {n}");
        }
    }
    line
}

fn display_names(family: Family) -> &'static [&'static str] {
    match family {
        Family::Normal | Family::Laplace => &["mu", "sigma"],
        Family::Rayleigh => &["beta"],
    }
}

/// Iteration table with parameters at 4 decimals.
pub fn summary_table(trace: &FitTrace) -> String {
    let names = display_names(trace.family);
    let mut out = format!("{:>4}", "s");
    for name in names {
        let _ = write!(out, "  {name:>10}");
    }
    let _ = writeln!(out, "  {:>14}", "loglik");
    for row in &trace.rows {
        let _ = write!(out, "{:>4}", row.s);
        for v in row.params.reported() {
            let _ = write!(out, "  {v:>10.4}");
        }
        let _ = writeln!(out, "  {:>14.6}", row.loglik);
    }
    out
}

pub fn run(args: &FitArgs) -> CliResult<Status> {
    let sample = CensoredSample::read_csv_path(&args.data)?;
    sample.check_fittable(args.family)?;
    let config = build_config(args, &sample)?;

    let timer = Instant::now();
    let trace = fit(&sample, &config)?;
    let elapsed = timer.elapsed();

    if let Some(path) = &args.trace {
        let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
        trace.write_csv(BufWriter::new(file))?;
    }

    let final_params = trace.final_params;
    let loglik = observed_loglik(&sample, &final_params)?;
    println!("config: {}", echo(args, &config));
    println!(
        "data: n = {}, uncensored = {}, censored = {}",
        sample.n(),
        sample.m(),
        sample.n() - sample.m()
    );
    println!();
    print!("{}", summary_table(&trace));
    println!();
    let estimates = display_names(trace.family)
        .iter()
        .zip(final_params.reported())
        .map(|(name, v)| format!("{name} = {v:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    println!("estimates: {estimates}");
    println!("loglik: {loglik:?}");
    println!(
        "converged: {} after {} iteration(s)",
        if trace.converged { "yes" } else { "no" },
        trace.iterations()
    );
    println!("elapsed: {:.6} s", elapsed.as_secs_f64());
    if let Some(path) = &args.trace {
        println!("trace: {}", path.display());
    }
    Ok(if trace.converged {
        Status::Done
    } else {
        Status::NotConverged
    })
}
