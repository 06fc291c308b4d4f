use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use corrfit_core::bivariate::mle_bivariate_for;
use corrfit_core::equicorr::{classify_equicorr, dual_mle_fit, mle_equicorr_fit, ssl_equicorr_fit};
use corrfit_core::losses::critical_residual;
use corrfit_core::optimize::{solve_entropy, solve_ssl, solve_stein_model, solve_stein_unrestricted, SolveTrace, SolverConfig};
use corrfit_core::symcore::{inverse, is_positive_definite, moment_pair};
use corrfit_core::tridiag::dual_mle_tridiag;
use corrfit_core::{CorrelationModel, CriticalPoint, LossKind, ModelKind, SymMatrix};

use crate::error::{CliError, CliResult};
use crate::io::{emit, matrix_csv, matrix_json, read_matrix, read_model};
use crate::report::{to_json, FitReport, GeometryJson, PointReport, TraceReport};

/// Residuals above this always fail the fit, whatever `--tol` says.
pub const RESIDUAL_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Entropy,
    Stein,
    Ssl,
}

impl LossArg {
    fn name(self) -> &'static str {
        match self {
            LossArg::Entropy => "entropy",
            LossArg::Stein => "stein",
            LossArg::Ssl => "ssl",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModelArg {
    Full,
    Equi,
    Tridiag,
    Custom(PathBuf),
}

impl FromStr for ModelArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(ModelArg::Full),
            "equi" => Ok(ModelArg::Equi),
            "tridiag" => Ok(ModelArg::Tridiag),
            _ => match s.strip_prefix("custom:") {
                Some(p) if !p.is_empty() => Ok(ModelArg::Custom(PathBuf::from(p))),
                _ => Err(format!("unknown model {s:?}; expected full, equi, tridiag or custom:PATH")),
            },
        }
    }
}

impl ModelArg {
    fn label(&self) -> String {
        match self {
            ModelArg::Full => "full".into(),
            ModelArg::Equi => "equi".into(),
            ModelArg::Tridiag => "tridiag".into(),
            ModelArg::Custom(p) => format!("custom:{}", p.display()),
        }
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Data matrix S (CSV or JSON).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub loss: LossArg,
    /// full, equi, tridiag or custom:PATH
    #[arg(long)]
    pub model: ModelArg,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the estimate as a matrix file (JSON if the name ends in .json).
    #[arg(long)]
    pub sigma_out: Option<PathBuf>,
    #[arg(long, env = "CORRFIT_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Gradient tolerance of the numeric solvers; the reported residual must
    /// not exceed max(tol, 1e-8).
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Random starts for the entropy critical point search.
    #[arg(long, default_value_t = 32)]
    pub starts: usize,
    /// Entropy only: report every positive definite critical point found.
    #[arg(long)]
    pub all_critical: bool,
    /// Use the numeric solvers even when a closed form exists.
    #[arg(long)]
    pub force_numeric: bool,
}

struct Outcome {
    /// Sorted best first.
    points: Vec<CriticalPoint>,
    path: &'static str,
    solver: &'static str,
    trace: Option<SolveTrace>,
}

impl Outcome {
    fn closed(points: Vec<CriticalPoint>, solver: &'static str) -> Self {
        Self {
            points,
            path: "closed-form",
            solver,
            trace: None,
        }
    }

    fn numeric(point: CriticalPoint, solver: &'static str, trace: SolveTrace) -> Self {
        Self {
            points: vec![point],
            path: "numeric",
            solver,
            trace: Some(trace),
        }
    }
}

fn data_err(e: corrfit_core::Error) -> CliError {
    CliError::from_data(e)
}

fn check_converged(trace: &SolveTrace) -> CliResult<()> {
    if trace.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "stopped after {} iterations with gradient norm {:e}",
            trace.iterations, trace.final_grad_norm
        )))
    }
}

fn solve(args: &FitArgs, s: &SymMatrix, model: &CorrelationModel, cfg: &SolverConfig) -> CliResult<Outcome> {
    let n = s.n();
    let closed = !args.force_numeric;
    let kind = model.kind();
    let residual_of = |sigma: &SymMatrix, loss: LossKind| critical_residual(loss, sigma, s, model).map_err(data_err);
    match args.loss {
        LossArg::Stein => match kind {
            ModelKind::Equicorrelation if closed => {
                Ok(Outcome::closed(vec![dual_mle_fit(s).map_err(data_err)?.point], "equicorrelation-dual-quadratic"))
            }
            ModelKind::TridiagEquicorrelation if closed => {
                let w = inverse(s).map_err(data_err)?;
                Ok(Outcome::closed(vec![dual_mle_tridiag(&w).map_err(data_err)?.point], "tridiagonal-dual-polynomial"))
            }
            ModelKind::Unrestricted => {
                let sol = solve_stein_unrestricted(s, cfg).map_err(data_err)?;
                check_converged(&sol.trace)?;
                Ok(Outcome::numeric(residual_of(&sol.sigma, LossKind::Stein)?, "stein-dual-newton", sol.trace))
            }
            _ => {
                let sol = solve_stein_model(s, model, cfg).map_err(data_err)?;
                Ok(Outcome::numeric(residual_of(&sol.sigma, LossKind::Stein)?, "model-newton", sol.trace))
            }
        },
        LossArg::Ssl => match kind {
            ModelKind::Equicorrelation if closed => {
                Ok(Outcome::closed(vec![ssl_equicorr_fit(s).map_err(data_err)?.point], "equicorrelation-ssl-quartic"))
            }
            _ => {
                let sol = solve_ssl(s, model, cfg).map_err(data_err)?;
                Ok(Outcome::numeric(
                    residual_of(&sol.sigma, LossKind::SymmetrizedStein)?,
                    "model-newton",
                    sol.trace,
                ))
            }
        },
        LossArg::Entropy => {
            let (points, path, solver) = match kind {
                ModelKind::Equicorrelation if closed => {
                    (mle_equicorr_fit(s).map_err(data_err)?, "closed-form", "equicorrelation-ml-cubic")
                }
                ModelKind::Unrestricted if closed && n == 2 => {
                    (mle_bivariate_for(s).map_err(data_err)?, "closed-form", "bivariate-ml-cubic")
                }
                _ => (solve_entropy(s, model, cfg).map_err(data_err)?, "numeric", "multistart-critical-search"),
            };
            let points: Vec<_> = points.into_iter().filter(|p| p.pd).collect();
            if points.is_empty() {
                return Err(CliError::NotConverged("no positive definite critical point found".into()));
            }
            Ok(Outcome {
                points,
                path,
                solver,
                trace: None,
            })
        }
    }
}

fn build_model(arg: &ModelArg, n: usize) -> CliResult<CorrelationModel> {
    if n < 2 {
        return Err(CliError::BadInput(format!("need at least 2 variables, got {n}")));
    }
    Ok(match arg {
        ModelArg::Full => CorrelationModel::unrestricted(n),
        ModelArg::Equi => CorrelationModel::equicorrelation(n),
        ModelArg::Tridiag => CorrelationModel::tridiag_equicorrelation(n),
        ModelArg::Custom(path) => read_model(path, n)?,
    })
}

fn rho_of(model: &CorrelationModel, sigma: &SymMatrix) -> Option<f64> {
    match model.kind() {
        _ if model.dim() != 1 => None,
        ModelKind::Custom => model.coordinates(sigma).ok().map(|p| p.coefficients[0]),
        _ => Some(sigma.get(0, 1)),
    }
}

fn write_sigma(path: &Path, sigma: &SymMatrix) -> CliResult<()> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    emit(Some(path), &if is_json { matrix_json(sigma) } else { matrix_csv(sigma) })
}

pub fn build_report(args: &FitArgs) -> CliResult<FitReport> {
    if args.all_critical && args.loss != LossArg::Entropy {
        return Err(CliError::BadFlags("--all-critical applies to the entropy loss only".into()));
    }
    let cfg = SolverConfig {
        max_iters: args.max_iters,
        grad_tol: args.tol,
        multistart_count: args.starts,
        seed: args.seed,
        ..SolverConfig::default()
    };
    cfg.validate().map_err(CliError::from_param)?;

    let file = read_matrix(&args.input)?;
    let s = file.matrix;
    if !is_positive_definite(&s).map_err(data_err)? {
        return Err(CliError::BadInput(format!("{}: matrix is not positive definite", file.path.display())));
    }
    let model = build_model(&args.model, s.n())?;
    let outcome = solve(args, &s, &model, &cfg)?;

    let gate = args.tol.max(RESIDUAL_FLOOR);
    for p in &outcome.points {
        if !p.pd || !(p.residual <= gate) {
            return Err(CliError::NotConverged(format!(
                "critical residual {:e} exceeds {gate:e} (positive definite: {})",
                p.residual, p.pd
            )));
        }
    }

    let geometry = match model.kind() {
        ModelKind::Equicorrelation => Some(classify_equicorr(s.n(), moment_pair(&s).map_err(data_err)?).map_err(data_err)?),
        ModelKind::Unrestricted if s.n() == 2 => Some(classify_equicorr(2, moment_pair(&s).map_err(data_err)?).map_err(data_err)?),
        _ => None,
    };
    let best = &outcome.points[0];
    if let Some(path) = &args.sigma_out {
        write_sigma(path, &best.sigma)?;
    }
    let point_report = |p: &CriticalPoint| PointReport::new(p, rho_of(&model, &p.sigma));
    Ok(FitReport {
        model: args.model.label(),
        loss: args.loss.name(),
        n: s.n(),
        input_format: file.format.name(),
        path: outcome.path,
        solver: outcome.solver,
        estimate: point_report(best),
        critical_points: args.all_critical.then(|| outcome.points.iter().map(point_report).collect()),
        geometry: geometry.as_ref().map(GeometryJson::from),
        trace: outcome.trace.as_ref().map(TraceReport::from),
    })
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let report = build_report(args)?;
    emit(args.out.as_deref(), &to_json(&report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_flag_parsing() {
        assert_eq!("equi".parse::<ModelArg>().unwrap(), ModelArg::Equi);
        assert_eq!("custom:m.json".parse::<ModelArg>().unwrap(), ModelArg::Custom("m.json".into()));
        assert!("custom:".parse::<ModelArg>().is_err());
        assert!("diag".parse::<ModelArg>().is_err());
    }
}
