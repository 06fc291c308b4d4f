//! JSON documents written by the subcommands. Field order in each struct
//! is the key order in the output.

use corrfit_core::equicorr::GeometryReport;
use corrfit_core::optimize::SolveTrace;
use corrfit_core::{CriticalPoint, SymMatrix};
use serde::ser::Serializer;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::io::fmt_float;

/// A float serialized with 17 significant digits; non-finite values are
/// written as `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return serializer.serialize_none();
        }
        let raw = RawValue::from_string(fmt_float(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(serializer)
    }
}

pub fn nums(values: &[f64]) -> Vec<Num> {
    values.iter().copied().map(Num).collect()
}

pub fn matrix_rows(m: &SymMatrix) -> Vec<Vec<Num>> {
    m.rows().iter().map(|r| nums(r)).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
pub struct PointReport {
    pub sigma: Vec<Vec<Num>>,
    /// Present for one-parameter models.
    pub rho: Option<Num>,
    pub loss_value: Num,
    pub residual: Num,
    pub positive_definite: bool,
}

impl PointReport {
    pub fn new(p: &CriticalPoint, rho: Option<f64>) -> Self {
        Self {
            sigma: matrix_rows(&p.sigma),
            rho: rho.map(Num),
            loss_value: Num(p.loss_value),
            residual: Num(p.residual),
            positive_definite: p.pd,
        }
    }
}

#[derive(Serialize)]
pub struct GeometryJson {
    pub n: usize,
    pub b: Num,
    pub a: Num,
    pub region: &'static str,
    pub delta_f: Num,
    pub delta_g: Option<Num>,
    pub real_critical_count: usize,
    pub pd_critical_count: usize,
    pub entropy_convex: bool,
    pub convexity_band: bool,
    pub convexity_verdict: &'static str,
}

impl From<&GeometryReport> for GeometryJson {
    fn from(g: &GeometryReport) -> Self {
        Self {
            n: g.n,
            b: Num(g.pair.b),
            a: Num(g.pair.a),
            region: g.region.name(),
            delta_f: Num(g.delta_f),
            delta_g: g.delta_g.map(Num),
            real_critical_count: g.real_critical_count,
            pd_critical_count: g.pd_critical_count,
            entropy_convex: g.entropy_convex,
            convexity_band: g.convexity_band,
            convexity_verdict: if g.entropy_convex { "convex" } else { "non-convex" },
        }
    }
}

#[derive(Serialize)]
pub struct MethodSwitch {
    pub iteration: usize,
    pub method: String,
}

#[derive(Serialize)]
pub struct TraceReport {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: Num,
    pub final_grad_norm: Num,
    pub newton_iterations: usize,
    pub method_switches: Vec<MethodSwitch>,
}

impl From<&SolveTrace> for TraceReport {
    fn from(t: &SolveTrace) -> Self {
        Self {
            iterations: t.iterations,
            converged: t.converged,
            final_objective: Num(t.final_objective),
            final_grad_norm: Num(t.final_grad_norm),
            newton_iterations: t.newton_iterations(),
            method_switches: t
                .method_switches
                .iter()
                .map(|&(iteration, m)| MethodSwitch {
                    iteration,
                    method: m.to_string(),
                })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct FitReport {
    pub model: String,
    pub loss: &'static str,
    pub n: usize,
    pub input_format: &'static str,
    /// `closed-form` or `numeric`.
    pub path: &'static str,
    pub solver: &'static str,
    pub estimate: PointReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_points: Option<Vec<PointReport>>,
    pub geometry: Option<GeometryJson>,
    pub trace: Option<TraceReport>,
}
