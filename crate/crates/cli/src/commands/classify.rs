use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use corrfit_core::equicorr::classify_equicorr;
use corrfit_core::symcore::moment_pair;
use corrfit_core::MomentPair;

use crate::error::{CliError, CliResult};
use crate::io::{emit, fmt_float, read_matrix};
use crate::report::{to_json, GeometryJson};

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Data matrix; its mean off-diagonal and diagonal entries give (b, a).
    #[arg(long, conflicts_with_all = ["b", "a"])]
    pub input: Option<PathBuf>,
    /// Mean off-diagonal entry, instead of --input.
    #[arg(long, allow_hyphen_values = true, requires = "a")]
    pub b: Option<f64>,
    /// Mean diagonal entry, instead of --input.
    #[arg(long, allow_hyphen_values = true, requires = "b")]
    pub a: Option<f64>,
    /// Dimension of the equicorrelation reduction. Defaults to the size of
    /// --input, or 2.
    #[arg(long)]
    pub n: Option<usize>,
    /// "bmin:bmax:amin:amax:steps": classify the centres of a steps x steps
    /// grid of cells and emit CSV.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "input")]
    pub grid: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub b_range: (f64, f64),
    pub a_range: (f64, f64),
    pub steps: usize,
}

impl Grid {
    pub fn parse(arg: &str) -> CliResult<Self> {
        let bad = || CliError::BadFlags(format!("--grid expects bmin:bmax:amin:amax:steps, got {arg:?}"));
        let parts: Vec<&str> = arg.split(':').map(str::trim).collect();
        let [bmin, bmax, amin, amax, steps] = parts[..] else {
            return Err(bad());
        };
        let num = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
        let grid = Self {
            b_range: (num(bmin)?, num(bmax)?),
            a_range: (num(amin)?, num(amax)?),
            steps: steps.parse().map_err(|_| bad())?,
        };
        if grid.steps == 0 || grid.b_range.0 >= grid.b_range.1 || grid.a_range.0 >= grid.a_range.1 {
            return Err(bad());
        }
        Ok(grid)
    }

    /// Cell centres, `b` varying slowest.
    pub fn cells(&self) -> impl Iterator<Item = MomentPair> + '_ {
        let centre = |(lo, hi): (f64, f64), i: usize| lo + (i as f64 + 0.5) * (hi - lo) / self.steps as f64;
        (0..self.steps)
            .flat_map(move |i| (0..self.steps).map(move |j| MomentPair::new(centre(self.b_range, i), centre(self.a_range, j))))
    }
}

/// CSV over the positive definite cells of `grid`; the others are skipped.
pub fn grid_csv(n: usize, grid: &Grid) -> CliResult<String> {
    let mut out = String::from("b,a,delta_f,delta_g,region,pd_count\n");
    for pair in grid.cells().filter(|p| p.is_positive_definite(n)) {
        let g = classify_equicorr(n, pair).map_err(CliError::from_data)?;
        let delta_g = g.delta_g.map(fmt_float).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_float(pair.b),
            fmt_float(pair.a),
            fmt_float(g.delta_f),
            delta_g,
            g.region.name(),
            g.pd_critical_count
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn run(args: &ClassifyArgs) -> CliResult<()> {
    let (n, pair) = match (&args.input, args.b.zip(args.a)) {
        (Some(path), _) => {
            let s = read_matrix(path)?.matrix;
            if args.n.is_some_and(|n| n != s.n()) {
                return Err(CliError::BadFlags(format!("--n disagrees with the {0} x {0} input", s.n())));
            }
            (s.n(), Some(moment_pair(&s).map_err(CliError::from_data)?))
        }
        (None, pair) => (args.n.unwrap_or(2), pair.map(|(b, a)| MomentPair::new(b, a))),
    };
    if n < 2 {
        return Err(CliError::BadFlags(format!("--n must be at least 2, got {n}")));
    }
    let text = match (&args.grid, pair) {
        (Some(arg), None) => grid_csv(n, &Grid::parse(arg)?)?,
        (Some(_), Some(_)) => return Err(CliError::BadFlags("--grid cannot be combined with --b/--a".into())),
        (None, None) => return Err(CliError::BadFlags("give --input, --b and --a, or --grid".into())),
        (None, Some(pair)) => {
            if !pair.b.is_finite() || !pair.a.is_finite() {
                return Err(CliError::BadInput("moment pair is not finite".into()));
            }
            let g = classify_equicorr(n, pair).map_err(CliError::from_data)?;
            to_json(&GeometryJson::from(&g))
        }
    };
    emit(args.out.as_deref(), &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = Grid::parse("-6:6:0:6:4").unwrap();
        assert_eq!(g.b_range, (-6.0, 6.0));
        assert_eq!(g.cells().count(), 16);
        assert_eq!(g.cells().next().unwrap(), MomentPair::new(-4.5, 0.75));
        for bad in ["1:0:0:1:3", "0:1:0:1:0", "0:1:0:1", "0:1:x:1:2", "0:1:0:inf:2"] {
            assert!(Grid::parse(bad).is_err(), "{bad}");
        }
    }
}
