//! CSV rows and JSON summaries.

use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// One trial. Column order is part of the output format.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub trial: usize,
    pub instance: String,
    pub seed: u64,
    pub d: usize,
    pub n: usize,
    #[serde(rename = "U")]
    pub u: i64,
    pub rho0: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub status: String,
    pub violated_strict: usize,
    pub violated_slack: usize,
    pub epochs: usize,
    pub eps_total: f64,
    pub delta_total: f64,
    pub wall_ms: u64,
    /// High-probability violation allowance for the run.
    pub bound: f64,
}

impl TrialRow {
    pub fn within_bound(&self) -> bool {
        self.status != "Bottom" && self.violated_strict as f64 <= self.bound
    }
}

/// `#schema_version=1` followed by a header and one line per row.
pub fn csv_bytes(rows: &[TrialRow]) -> Vec<u8> {
    let mut out = format!("#schema_version={SCHEMA_VERSION}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    for r in rows {
        w.serialize(r).expect("writing to memory cannot fail");
    }
    w.flush().expect("writing to memory cannot fail");
    drop(w);
    if rows.is_empty() {
        out.extend_from_slice(b"trial,instance,seed,d,n,U,rho0,epsilon,delta,beta,status,violated_strict,violated_slack,epochs,eps_total,delta_total,wall_ms,bound\n");
    }
    out
}

/// Nearest-rank percentiles of `v`.
pub fn percentiles(mut v: Vec<f64>) -> Value {
    if v.is_empty() {
        return Value::Null;
    }
    v.sort_by(f64::total_cmp);
    let at = |p: f64| v[(((p / 100.0) * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
    json!({ "p50": at(50.0), "p90": at(90.0), "p99": at(99.0), "max": v[v.len() - 1] })
}

pub fn summary(command: &str, rows: &[TrialRow]) -> Value {
    let non_bottom = rows.iter().filter(|r| r.status != "Bottom").count();
    let within = rows.iter().filter(|r| r.within_bound()).count();
    let frac = |k: usize| if rows.is_empty() { 0.0 } else { k as f64 / rows.len() as f64 };
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "trials": rows.len(),
        "non_bottom": non_bottom,
        "non_bottom_rate": frac(non_bottom),
        "within_bound": within,
        "within_bound_rate": frac(within),
        "violated_strict": percentiles(rows.iter().map(|r| r.violated_strict as f64).collect()),
        "violated_slack": percentiles(rows.iter().map(|r| r.violated_slack as f64).collect()),
        "epochs": percentiles(rows.iter().map(|r| r.epochs as f64).collect()),
        "eps_total": percentiles(rows.iter().map(|r| r.eps_total).collect()),
        "delta_total": percentiles(rows.iter().map(|r| r.delta_total).collect()),
        "wall_ms": percentiles(rows.iter().map(|r| r.wall_ms as f64).collect()),
    })
}
