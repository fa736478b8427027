use std::fmt::Write as _;

use super::{EnsembleResult, SimulationSpec};

/// Prefix of the header line holding the simulation spec as JSON.
pub const CSV_META_PREFIX: &str = "#meta ";

/// CSV with one row per recorded point. Level labels in column names are
/// 1-based (`re_rho_12` is the coherence between the first two levels).
pub fn to_csv(spec: &SimulationSpec, result: &EnsembleResult) -> String {
    let mut out = String::new();
    let meta = serde_json::to_string(spec).expect("spec serializes");
    let _ = writeln!(out, "{CSV_META_PREFIX}{meta}");
    let mut cols = vec!["time_us".to_string()];
    for c in &result.coherences {
        let (i, j) = (c.pair.0 + 1, c.pair.1 + 1);
        cols.push(format!("re_rho_{i}{j}"));
        cols.push(format!("im_rho_{i}{j}"));
        cols.push(format!("abs_rho_{i}{j}"));
        cols.push(format!("stderr_{i}{j}"));
    }
    for m in 0..result.dim {
        cols.push(format!("pop_{}", m + 1));
    }
    let _ = writeln!(out, "{}", cols.join(","));
    for (k, t) in result.times.iter().enumerate() {
        let _ = write!(out, "{t:.12e}");
        for c in &result.coherences {
            let z = c.values[k];
            let _ = write!(out, ",{:.12e},{:.12e},{:.12e},{:.12e}", z.re, z.im, z.norm(), c.stderr[k]);
        }
        for pop in &result.populations {
            let _ = write!(out, ",{:.12e}", pop[k]);
        }
        out.push('\n');
    }
    out
}

/// The same content as [`to_csv`], structured.
pub fn to_json(spec: &SimulationSpec, result: &EnsembleResult) -> String {
    serde_json::to_string_pretty(&serde_json::json!({ "spec": spec, "result": result })).expect("result serializes")
}
