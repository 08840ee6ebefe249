//! Machine-readable run artifacts: per-generation CSV and result JSON.

use serde::Serialize;
use serde_json::json;

use crate::engine::{GenerationStats, RunResult};
use crate::error::Result;
use crate::model::ProblemInstance;

pub const RESULT_SCHEMA: &str = "dwsc-result/1";

/// Column order is part of the file contract.
pub const GENERATIONS_HEADER: [&str; 8] = [
    "generation",
    "best_f",
    "mean_f",
    "std_f",
    "elapsed_ms",
    "ls_t1_improved",
    "ls_t2_improved",
    "ls_none",
];

#[derive(Serialize)]
struct GenerationRow {
    generation: usize,
    best_f: f64,
    mean_f: f64,
    std_f: f64,
    elapsed_ms: u64,
    ls_t1_improved: usize,
    ls_t2_improved: usize,
    ls_none: usize,
}

/// Per-generation statistics as CSV. With `wall_clock` off the
/// `elapsed_ms` column is written as 0 so the file depends only on the
/// seed and configuration.
pub fn generations_csv(rows: &[GenerationStats], wall_clock: bool) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(GenerationRow {
            generation: r.generation,
            best_f: r.best_f,
            mean_f: r.mean_f,
            std_f: r.std_f,
            elapsed_ms: if wall_clock { r.elapsed_ms } else { 0 },
            ls_t1_improved: r.ls_t1_improved,
            ls_t2_improved: r.ls_t2_improved,
            ls_none: r.ls_none,
        })
        .map_err(|e| crate::DwscError::Parse(e.to_string()))?;
    }
    if rows.is_empty() {
        w.write_record(GENERATIONS_HEADER)
            .map_err(|e| crate::DwscError::Parse(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::DwscError::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn result_json(result: &RunResult, instance: &ProblemInstance) -> serde_json::Value {
    let best = &result.best;
    let dag = best.dag().expect("best genome is decoded");
    let (t1, t2, none) = result.ls_totals();
    json!({
        "schema": RESULT_SCHEMA,
        "instance_digest": result.instance_digest,
        "config": result.config,
        "evaluation": instance.options(),
        "bounds": instance.bounds(),
        "best": {
            "fitness": best.breakdown(),
            "sequence": instance.names(best.sequence()),
            "services": instance.names(dag.services()),
            "edges": dag.edges().len(),
        },
        "local_search": {
            "type1_improved": t1,
            "type2_improved": t2,
            "no_improvement": none,
        },
        "generations": result.generations.len().saturating_sub(1),
        "clamped_evaluations": result.clamped_evaluations,
        "elapsed_ms": result.elapsed_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(g: usize) -> GenerationStats {
        GenerationStats {
            generation: g,
            best_f: 0.25,
            mean_f: 0.5,
            std_f: 0.125,
            elapsed_ms: 17,
            ls_t1_improved: 1,
            ls_t2_improved: 2,
            ls_none: 3,
        }
    }

    #[test]
    fn header_and_timing_switch() {
        let csv = generations_csv(&[row(0), row(1)], true).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), GENERATIONS_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "0,0.25,0.5,0.125,17,1,2,3");
        let quiet = generations_csv(&[row(0)], false).unwrap();
        assert_eq!(quiet.lines().nth(1).unwrap(), "0,0.25,0.5,0.125,0,1,2,3");
        let empty = generations_csv(&[], true).unwrap();
        assert_eq!(empty.trim_end(), GENERATIONS_HEADER.join(","));
    }
}
