use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use censored_em::dist::{self, Family};
use censored_em::rng::{uniform_at, StreamKey};
use censored_em::{CensoredSample, Unit};

use crate::fit::{parse_params, CliResult};
use crate::{ConvertArgs, SimulateArgs};

fn write_sample(sample: &CensoredSample, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => {
            let file = File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
            sample.write_csv(BufWriter::new(file))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            sample.write_csv(&mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// Reads one value per line; blank lines are skipped.
pub fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            line.trim()
                .parse::<f64>()
                .map_err(|e| format!("{}:{}: {line:?}: {e}", path.display(), i + 1).into())
        })
        .collect()
}

pub fn convert_type2(args: &ConvertArgs) -> CliResult<()> {
    let values = read_values(&args.values)?;
    let sample = CensoredSample::from_type2(&values, args.total_n)?;
    write_sample(&sample, args.output.as_deref())
}

/// Lifetime `i` is the quantile of uniform `(seed, 0, i, 0)`, so a sample is
/// fixed by its seed and does not depend on the censoring scheme.
pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let params = parse_params(args.family, &args.params)?;
    if args.n == 0 {
        return Err("--n must be at least 1".into());
    }
    let lifetimes = (0..args.n)
        .map(|i| {
            dist::quantile(
                &params,
                uniform_at(args.seed, StreamKey::new(0, i as u64, 0)),
            )
        })
        .collect::<Result<Vec<f64>, _>>()?;
    let sample = match (args.type2_r, args.censor_time) {
        (Some(r), _) => {
            if r == 0 {
                return Err("--type2-r must be at least 1".into());
            }
            if r > args.n {
                return Err(format!("--type2-r {r} exceeds --n {}", args.n).into());
            }
            let mut sorted = lifetimes;
            sorted.sort_by(f64::total_cmp);
            sorted.truncate(r);
            CensoredSample::from_type2(&sorted, args.n)?
        }
        (None, Some(t)) => {
            if t.is_nan() || (args.family == Family::Rayleigh && t <= 0.0) {
                return Err(format!("censoring time {t} is outside the support").into());
            }
            CensoredSample::new(
                lifetimes
                    .into_iter()
                    .map(|x| {
                        if x <= t {
                            Unit::observed(x)
                        } else {
                            Unit::censored(t)
                        }
                    })
                    .collect(),
            )
        }
        (None, None) => return Err("one of --type2-r or --censor-time is required".into()),
    };
    write_sample(&sample, args.output.as_deref())
}
