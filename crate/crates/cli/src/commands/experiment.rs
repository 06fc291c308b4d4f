use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use corrfit_core::experiments::{census_ti, distance_distribution, mc_discriminant_probability};

use crate::error::{CliError, CliResult};
use crate::io::{emit, fmt_float};

#[derive(Subcommand, Debug)]
pub enum ExperimentCommand {
    /// Entropy critical points of the full 3 x 3 model at S = tI.
    CensusTi(CensusArgs),
    /// Probability that sample moments give a single entropy critical point.
    McProb(SamplingArgs),
    /// Distance of the sample moments (b, a) from (rho, 1), one per replicate.
    Distances(SamplingArgs),
}

#[derive(Args, Debug)]
pub struct CensusArgs {
    #[arg(long, conflicts_with = "sweep", required_unless_present = "sweep")]
    pub t: Option<f64>,
    /// "lo:hi:steps": evenly spaced t values including both ends.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SamplingArgs {
    #[arg(long)]
    pub n: usize,
    /// Population equicorrelation.
    #[arg(long, allow_hyphen_values = true)]
    pub rho: f64,
    /// Observations per replicate.
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub reps: usize,
    #[arg(long, env = "CORRFIT_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_sweep(arg: &str) -> CliResult<Vec<f64>> {
    let bad = || CliError::BadFlags(format!("--sweep expects lo:hi:steps, got {arg:?}"));
    let parts: Vec<&str> = arg.split(':').map(str::trim).collect();
    let [lo, hi, steps] = parts[..] else {
        return Err(bad());
    };
    let lo: f64 = lo.parse().map_err(|_| bad())?;
    let hi: f64 = hi.parse().map_err(|_| bad())?;
    let steps: usize = steps.parse().map_err(|_| bad())?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) || steps == 0 || (steps == 1 && lo != hi) {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|i| if i + 1 == steps { hi } else { lo + i as f64 * (hi - lo) / (steps - 1) as f64 })
        .collect())
}

pub fn census_csv(ts: &[f64]) -> CliResult<String> {
    let mut out = String::from("t,pd_count,group_a,group_b,group_c,group_d\n");
    for &t in ts {
        let c = census_ti(t).map_err(CliError::from_param)?;
        let g = c.groups;
        writeln!(out, "{},{},{},{},{},{}", fmt_float(t), c.pd_count, g.a, g.b, g.c, g.d).expect("writing to a String");
    }
    Ok(out)
}

pub fn run(cmd: &ExperimentCommand) -> CliResult<()> {
    match cmd {
        ExperimentCommand::CensusTi(args) => {
            let ts = match (&args.sweep, args.t) {
                (Some(arg), _) => parse_sweep(arg)?,
                (None, Some(t)) => vec![t],
                (None, None) => return Err(CliError::BadFlags("give --t or --sweep".into())),
            };
            emit(args.out.as_deref(), &census_csv(&ts)?)
        }
        ExperimentCommand::McProb(a) => {
            let r = mc_discriminant_probability(a.n, a.rho, a.samples, a.reps, a.seed).map_err(CliError::from_param)?;
            let text = format!(
                "n,rho,samples,prob,stderr\n{},{},{},{},{}\n",
                r.n,
                fmt_float(r.rho_star),
                r.sample_size,
                fmt_float(r.prob_single_critical),
                fmt_float(r.stderr)
            );
            emit(a.out.as_deref(), &text)
        }
        ExperimentCommand::Distances(a) => {
            let d = distance_distribution(a.n, a.rho, a.samples, a.reps, a.seed).map_err(CliError::from_param)?;
            let mut text = String::from("distance\n");
            for v in d {
                text.push_str(&fmt_float(v));
                text.push('\n');
            }
            emit(a.out.as_deref(), &text)
        }
    }
}
