//! Algebraic degrees of the critical equations that this crate can certify
//! in closed form, with the generating polynomials in `ρ`.
//!
//! Symbolic coefficients use `b` and `a` for the mean off-diagonal and
//! diagonal entries of `S`, and `dbar` for the mean off-diagonal entry of
//! `S⁻¹`. The tridiagonal polynomial is `s·P(ρ) + Q(ρ)` with
//! `s = Σ_i (S⁻¹)_{i,i+1}`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use corrfit_core::equicorr::{dual_quadratic, ml_cubic, ssl_quartic, EquicorrData};
use corrfit_core::symcore::inverse;
use corrfit_core::tridiag::{binomial, tridiag_dual_polynomial};
use corrfit_core::SymMatrix;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{emit, read_matrix};
use crate::report::{nums, to_json, Num};

/// Largest tridiagonal `n` handled; the polynomial degree stays at most 64.
pub const MAX_TRIDIAG_N: usize = 65;

/// Reference degrees of the unrestricted model for `n = 3..=9`, computed
/// elsewhere by numerical algebraic geometry and not re-derived here:
/// `(n, ML, dual, SSL)`.
const FULL_MODEL_REFERENCE: [(usize, Option<u64>, u64, Option<u64>); 7] = [
    (3, Some(15), 5, Some(28)),
    (4, Some(109), 14, Some(292)),
    (5, Some(1077), 43, None),
    (6, Some(13695), 144, None),
    (7, None, 522, None),
    (8, None, 2028, None),
    (9, None, 8357, None),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DegreeModel {
    Equi,
    Tridiag,
    Full,
}

#[derive(Args, Debug)]
pub struct DegreesArgs {
    #[arg(long, value_enum)]
    pub model: DegreeModel,
    /// Dimension; defaults to the size of --input.
    #[arg(long)]
    pub n: Option<usize>,
    /// Data matrix at which to evaluate the polynomial coefficients.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct EquiPolynomials {
    variable: &'static str,
    order: &'static str,
    dual: Vec<String>,
    ml: Vec<String>,
    ssl: Vec<String>,
}

#[derive(Serialize)]
struct EquiNumeric {
    dual: Vec<Num>,
    ml: Vec<Num>,
    ssl: Vec<Num>,
}

#[derive(Serialize)]
struct EquiDegrees {
    model: &'static str,
    n: usize,
    dual_degree: usize,
    ml_degree: usize,
    ssl_degree: usize,
    polynomials: EquiPolynomials,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric: Option<EquiNumeric>,
}

#[derive(Serialize)]
struct TridiagPolynomial {
    variable: &'static str,
    order: &'static str,
    /// Coefficients of `P`, multiplied by `s`.
    s_coefficients: Vec<i128>,
    /// Coefficients of `Q`.
    rho_coefficients: Vec<i128>,
}

#[derive(Serialize)]
struct TridiagDegrees {
    model: &'static str,
    n: usize,
    dual_degree: usize,
    polynomial: TridiagPolynomial,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric: Option<Vec<Num>>,
}

/// Renders `Σ cᵢ·vᵢ` with integer coefficients; an empty name is the
/// constant term.
fn linear(terms: &[(i64, &str)]) -> String {
    let mut out = String::new();
    for &(c, var) in terms.iter().filter(|t| t.0 != 0) {
        let sign = if c < 0 { "-" } else { "+" };
        if out.is_empty() {
            if c < 0 {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        let m = c.unsigned_abs();
        match (m, var) {
            (_, "") => out.push_str(&m.to_string()),
            (1, v) => out.push_str(v),
            (m, v) => out.push_str(&format!("{m}*{v}")),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn equi_symbolic(n: usize) -> EquiPolynomials {
    let n = n as i64;
    EquiPolynomials {
        variable: "rho",
        order: "ascending",
        dual: vec![
            linear(&[(-1, "dbar")]),
            linear(&[(-(n - 2), "dbar"), (-1, "")]),
            linear(&[(n - 1, "dbar")]),
        ],
        ml: vec![
            linear(&[(-1, "b")]),
            linear(&[(2, "a"), (-1, "")]),
            linear(&[(n - 2, "a"), (-(n - 1), "b"), (-(n - 2), "")]),
            linear(&[(n - 1, "")]),
        ],
        ssl: vec![
            linear(&[(1, "dbar"), (-1, "b")]),
            linear(&[(2, "a"), (2 * (n - 2), "dbar")]),
            linear(&[(n * n - 6 * n + 6, "dbar"), (n - 2, "a"), (-(n - 1), "b")]),
            linear(&[(-2 * (n * n - 3 * n + 2), "dbar")]),
            linear(&[((n - 1) * (n - 1), "dbar")]),
        ],
    }
}

fn equi_numeric(s: &SymMatrix) -> CliResult<EquiNumeric> {
    let data = EquicorrData::from_matrix(s).map_err(CliError::from_data)?;
    let n = data.n;
    Ok(EquiNumeric {
        dual: nums(dual_quadratic(n, data.dbar).coeffs()),
        ml: nums(ml_cubic(n, data.pair).map_err(CliError::from_data)?.coeffs()),
        ssl: nums(ssl_quartic(n, &data).coeffs()),
    })
}

/// Exact coefficients of `δ_k(ρ) = Σ_i (−1)^i C(k − i, i) ρ^{2i}`.
fn delta_exact(k: usize) -> Vec<i128> {
    let mut c = vec![0i128; 2 * (k / 2) + 1];
    for i in 0..=k / 2 {
        let v = binomial((k - i) as u64, i as u64) as i128;
        c[2 * i] = if i % 2 == 0 { v } else { -v };
    }
    c
}

fn mul_exact(p: &[i128], q: &[i128]) -> Vec<i128> {
    let mut r = vec![0i128; p.len() + q.len() - 1];
    for (i, &x) in p.iter().enumerate() {
        for (j, &y) in q.iter().enumerate() {
            r[i + j] += x * y;
        }
    }
    r
}

/// `(P, Q)` with the dual polynomial equal to `s·P + Q`.
fn tridiag_exact(n: usize) -> (Vec<i128>, Vec<i128>) {
    let mut q = vec![0i128; n + 1];
    for i in 1..n {
        for (k, c) in mul_exact(&delta_exact(i - 1), &delta_exact(n - i - 1)).into_iter().enumerate() {
            q[k + 1] += c;
        }
    }
    while q.len() > 1 && q.last() == Some(&0) {
        q.pop();
    }
    (delta_exact(n), q)
}

fn full_refusal(n: usize) -> CliError {
    let reference = FULL_MODEL_REFERENCE.iter().find(|r| r.0 == n).map_or_else(
        || "no reference values are available".to_string(),
        |&(_, ml, dual, ssl)| {
            let show = |v: Option<u64>| v.map_or("unknown".to_string(), |v| v.to_string());
            format!("uncertified reference values for n = {n}: ML {}, dual {dual}, SSL {}", show(ml), show(ssl))
        },
    );
    CliError::NotCertifiable(format!(
        "degrees of the unrestricted model with n = {n} are not certifiable at desk scale; {reference}"
    ))
}

pub fn build(args: &DegreesArgs) -> CliResult<String> {
    let data = args.input.as_deref().map(read_matrix).transpose()?.map(|f| f.matrix);
    let n = match (args.n, &data) {
        (Some(n), Some(s)) if n != s.n() => {
            return Err(CliError::BadFlags(format!("--n = {n} disagrees with the {0} x {0} input", s.n())))
        }
        (Some(n), _) => n,
        (None, Some(s)) => s.n(),
        (None, None) => return Err(CliError::BadFlags("give --n or --input".into())),
    };
    if n < 2 {
        return Err(CliError::BadFlags(format!("--n must be at least 2, got {n}")));
    }
    match args.model {
        DegreeModel::Full if n > 2 => Err(full_refusal(n)),
        DegreeModel::Equi | DegreeModel::Full => Ok(to_json(&EquiDegrees {
            model: if args.model == DegreeModel::Equi { "equi" } else { "full" },
            n,
            dual_degree: 2,
            ml_degree: 3,
            ssl_degree: 4,
            polynomials: equi_symbolic(n),
            numeric: data.as_ref().map(equi_numeric).transpose()?,
        })),
        DegreeModel::Tridiag => {
            if n > MAX_TRIDIAG_N {
                return Err(CliError::BadFlags(format!("tridiagonal degrees are limited to n <= {MAX_TRIDIAG_N}")));
            }
            let (s_coefficients, rho_coefficients) = tridiag_exact(n);
            let numeric = match &data {
                Some(s) => {
                    let w = inverse(s).map_err(CliError::from_data)?;
                    let sum: f64 = (0..n - 1).map(|i| w.get(i, i + 1)).sum();
                    Some(nums(tridiag_dual_polynomial(n, sum).map_err(CliError::from_data)?.coeffs()))
                }
                None => None,
            };
            Ok(to_json(&TridiagDegrees {
                model: "tridiag",
                n,
                dual_degree: 2 * (n / 2),
                polynomial: TridiagPolynomial {
                    variable: "rho",
                    order: "ascending",
                    s_coefficients,
                    rho_coefficients,
                },
                numeric,
            }))
        }
    }
}

pub fn run(args: &DegreesArgs) -> CliResult<()> {
    let text = build(args)?;
    emit(args.out.as_deref(), &text)
}
