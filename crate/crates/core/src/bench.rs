//! Repeated-run experiments and their aggregate tables.

use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{evolve, Ablation, RunConfig, RunResult};
use crate::error::Result;
use crate::model::ProblemInstance;

/// One (instance, variant, run) cell of an experiment grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Job {
    pub instance: usize,
    pub variant: Ablation,
    pub run: usize,
    pub seed: u64,
}

/// Jobs in a fixed order: instance-major, then variant, then run. Run `r`
/// uses seed `base_seed + r` for every variant so variants see the same
/// initial randomness.
pub fn plan(n_instances: usize, variants: &[Ablation], runs: usize, base_seed: u64) -> Vec<Job> {
    let mut jobs = Vec::with_capacity(n_instances * variants.len() * runs);
    for instance in 0..n_instances {
        for &variant in variants {
            for run in 0..runs {
                jobs.push(Job {
                    instance,
                    variant,
                    run,
                    seed: base_seed.wrapping_add(run as u64),
                });
            }
        }
    }
    jobs
}

/// Runs every job, in parallel across jobs. `on_done` sees each finished
/// job; results come back in plan order.
pub fn execute<F>(
    instances: &[&ProblemInstance],
    base: &RunConfig,
    jobs: &[Job],
    on_done: F,
) -> Result<Vec<RunResult>>
where
    F: Fn(&Job, &RunResult) -> Result<()> + Sync,
{
    base.validate()?;
    jobs.par_iter()
        .map(|job| {
            let config = RunConfig {
                seed: job.seed,
                ablation: job.variant,
                ..base.clone()
            };
            let result = evolve(instances[job.instance], &config)?;
            on_done(job, &result)?;
            Ok(result)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub instance: String,
    pub variant: String,
    pub runs: usize,
    pub mean_f: f64,
    pub std_f: f64,
    pub mean_ms: f64,
    pub std_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImprovementRow {
    pub instance: String,
    pub variant: String,
    pub pct_type1: f64,
    pub pct_type2: f64,
    pub pct_none: f64,
}

/// Mean and sample standard deviation; the deviation is 0 below two values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn summarize(instance: &str, variant: Ablation, results: &[&RunResult]) -> SummaryRow {
    let f: Vec<f64> = results.iter().map(|r| r.best.fitness()).collect();
    let ms: Vec<f64> = results.iter().map(|r| r.elapsed_ms as f64).collect();
    let (mean_f, std_f) = mean_std(&f);
    let (mean_ms, std_ms) = mean_std(&ms);
    SummaryRow {
        instance: instance.to_string(),
        variant: variant.name().to_string(),
        runs: results.len(),
        mean_f,
        std_f,
        mean_ms,
        std_ms,
    }
}

/// Share of local-search invocations by outcome, pooled over all runs.
/// A variant that never ran local search reports 100% no improvement.
pub fn improvements(instance: &str, variant: Ablation, results: &[&RunResult]) -> ImprovementRow {
    let (mut t1, mut t2, mut none) = (0usize, 0usize, 0usize);
    for r in results {
        let (a, b, c) = r.ls_totals();
        t1 += a;
        t2 += b;
        none += c;
    }
    let total = (t1 + t2 + none) as f64;
    let pct = |x: usize| if total > 0.0 { 100.0 * x as f64 / total } else { 0.0 };
    ImprovementRow {
        instance: instance.to_string(),
        variant: variant.name().to_string(),
        pct_type1: pct(t1),
        pct_type2: pct(t2),
        pct_none: if total > 0.0 { pct(none) } else { 100.0 },
    }
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| crate::DwscError::Parse(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| crate::DwscError::Parse(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
