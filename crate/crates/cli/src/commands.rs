use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dwsc_core::bench::{self, ImprovementRow, SummaryRow};
use dwsc_core::decoder::{decode_backward, forward_feasible};
use dwsc_core::ingest::{
    augment_repository, parse_coordinates_csv, parse_wsc, synthetic_bundle, AugmentationParams,
    CoordinateSource, SyntheticParams,
};
use dwsc_core::model::Weights;
use dwsc_core::report::{generations_csv, result_json};
use dwsc_core::{
    evolve, Ablation, DwscError, EvalOptions, InstanceBundle, ProblemInstance, RunResult,
};

use crate::args::{
    AugmentArgs, AugmentationFlags, BenchArgs, Command, GenArgs, RunArgs, SourceArgs, TimingArg,
    ValidateArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(DwscError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(DwscError::Infeasible) => 3,
            CliError::Core(e) if e.is_parse_error() => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<DwscError> for CliError {
    fn from(e: DwscError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

pub fn dispatch(command: Command) -> CliResult {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn augmentation(flags: &AugmentationFlags, coords: Option<&Path>) -> CliResult<AugmentationParams> {
    let coordinates = match coords {
        Some(p) => CoordinateSource::Rows(parse_coordinates_csv(&read(p)?)?),
        None => CoordinateSource::SyntheticUniform,
    };
    Ok(AugmentationParams {
        seed: flags.augment_seed,
        data_size: flags.data_size,
        bandwidth_mean: flags.bandwidth_mean,
        bandwidth_std: flags.bandwidth_std,
        items_per_service: (flags.items_min, flags.items_max),
        coordinates,
        propagation_factor: flags.propagation_factor,
        comm_cost_factor: flags.comm_cost_factor,
    })
}

fn bundle_from_xml(
    services: &Path,
    taxonomy: &Path,
    problem: &Path,
    coords: Option<&Path>,
    flags: &AugmentationFlags,
) -> CliResult<InstanceBundle> {
    let repo = parse_wsc(&read(services)?, &read(taxonomy)?, &read(problem)?)?;
    let params = augmentation(flags, coords)?;
    Ok(augment_repository(repo, &params, Weights::default(), flags.matching.into())?)
}

fn load_bundle(source: &SourceArgs) -> CliResult<InstanceBundle> {
    match (&source.instance, &source.services, &source.taxonomy, &source.problem) {
        (Some(path), ..) => Ok(InstanceBundle::from_json(&read(path)?)?),
        (None, Some(s), Some(t), Some(p)) => {
            bundle_from_xml(s, t, p, source.coords.as_deref(), &source.aug)
        }
        _ => Err(CliError::Usage(
            "either --instance or --services/--taxonomy/--problem is required".into(),
        )),
    }
}

fn load_instance(bundle: &InstanceBundle, options: EvalOptions) -> CliResult<ProblemInstance> {
    let instance = bundle.to_instance(options)?;
    if !instance.is_feasible() {
        return Err(DwscError::Infeasible.into());
    }
    Ok(instance)
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let bundle = synthetic_bundle(SyntheticParams {
        n_services: a.n_services,
        n_concepts: a.n_concepts,
        layers: a.layers,
        items_per_service: a.items_per_service,
        seed: a.seed,
    })?;
    write(&a.out, &bundle.to_json())?;
    println!(
        "wrote {} ({} services, {} concepts, {} data items)",
        a.out.display(),
        bundle.services.len(),
        bundle.concepts.len(),
        bundle.data_items.len()
    );
    Ok(())
}

fn cmd_augment(a: AugmentArgs) -> CliResult {
    let bundle = bundle_from_xml(
        &a.xml.services,
        &a.xml.taxonomy,
        &a.xml.problem,
        a.coords.as_deref(),
        &a.aug,
    )?;
    write(&a.out, &bundle.to_json())?;
    println!(
        "wrote {} ({} services, {} data items)",
        a.out.display(),
        bundle.services.len(),
        bundle.data_items.len()
    );
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> CliResult {
    let bundle = load_bundle(&a.source)?;
    let instance = bundle.to_instance(a.eval.options())?;
    let repository: Vec<_> = instance.service_ids().collect();
    println!(
        "{} services, {} concepts, {} data items",
        instance.len(),
        instance.taxonomy().len(),
        instance.data_items().len()
    );
    println!("digest {}", bundle.digest());
    let feasible = forward_feasible(
        instance.services(),
        instance.task(),
        instance.taxonomy(),
        instance.matching(),
    );
    if !feasible {
        println!("feasible: no");
        return Err(DwscError::Infeasible.into());
    }
    println!("feasible: yes");
    let bounds = instance.bounds();
    println!("bounds: T_max = {}, C_max = {}", bounds.time_max, bounds.cost_max);
    let dag = decode_backward(&repository, &instance).ok_or_else(|| {
        DwscError::InvalidInstance("repository order failed to decode".into())
    })?;
    dag.validate(&instance).map_err(|v| {
        DwscError::InvalidInstance(format!("decoded composition is invalid: {v}"))
    })?;
    println!(
        "repository-order decode: {} services, {} edges, valid",
        dag.services().len(),
        dag.edges().len()
    );
    Ok(())
}

fn write_run(dir: &Path, result: &RunResult, instance: &ProblemInstance, timing: TimingArg) -> CliResult {
    fs::create_dir_all(dir)?;
    let wall = timing == TimingArg::Wall;
    let mut json = result_json(result, instance);
    if !wall {
        json["elapsed_ms"] = 0.into();
    }
    let text = serde_json::to_string_pretty(&json).map_err(DwscError::from)? + "\n";
    fs::write(dir.join("result.json"), text)?;
    fs::write(dir.join("generations.csv"), generations_csv(&result.generations, wall)?)?;
    let dag = result.best.dag().expect("best genome is decoded");
    fs::write(dir.join("best.dot"), dag.to_dot(instance))?;
    Ok(())
}

fn cmd_run(a: RunArgs) -> CliResult {
    let bundle = load_bundle(&a.source)?;
    let instance = load_instance(&bundle, a.eval.options())?;
    let config = a.config.config(a.ablation.into());
    let started = Instant::now();
    let result = evolve(&instance, &config)?;
    let elapsed = started.elapsed();
    write_run(&a.out, &result, &instance, a.config.timing)?;
    let best = result.best_breakdown();
    println!(
        "best F = {:.6} (T = {:.4}, C = {:.4}, {} services)",
        best.fitness,
        best.total_time,
        best.total_cost,
        result.best.dag().map_or(0, |d| d.services().len())
    );
    println!("wall-clock {:.3} s; artifacts in {}", elapsed.as_secs_f64(), a.out.display());
    if result.clamped_evaluations > 0 {
        println!("warning: {} evaluations were clamped to 1", result.clamped_evaluations);
    }
    Ok(())
}

/// File stems, made unique by suffixing repeats with their position.
fn instance_names(paths: &[PathBuf]) -> Vec<String> {
    let mut seen = HashSet::new();
    paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let stem = p
                .file_stem()
                .map_or_else(|| format!("instance{i}"), |s| s.to_string_lossy().into_owned());
            if seen.insert(stem.clone()) {
                stem
            } else {
                format!("{stem}-{i}")
            }
        })
        .collect()
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    if a.runs == 0 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let names = instance_names(&a.instances);
    let instances = a
        .instances
        .iter()
        .map(|p| load_instance(&InstanceBundle::from_json(&read(p)?)?, a.eval.options()))
        .collect::<CliResult<Vec<_>>>()?;
    let refs: Vec<&ProblemInstance> = instances.iter().collect();
    let variants: Vec<Ablation> = a.variants.iter().map(|&v| v.into()).collect();
    let base = a.config.config(Ablation::Full);
    let jobs = bench::plan(instances.len(), &variants, a.runs, base.seed);
    let timing = a.config.timing;

    let results = bench::execute(&refs, &base, &jobs, |job, result| {
        let dir = a
            .out
            .join(&names[job.instance])
            .join(job.variant.name())
            .join(format!("run{:03}", job.run));
        write_run(&dir, result, refs[job.instance], timing).map_err(|e| match e {
            CliError::Core(e) => e,
            CliError::Usage(m) => DwscError::InvalidConfig(m),
        })
    })?;

    let mut summary: Vec<SummaryRow> = Vec::new();
    let mut improvements: Vec<ImprovementRow> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        for &variant in &variants {
            let group: Vec<&RunResult> = jobs
                .iter()
                .zip(&results)
                .filter(|(j, _)| j.instance == i && j.variant == variant)
                .map(|(_, r)| r)
                .collect();
            let mut row = bench::summarize(name, variant, &group);
            if timing == TimingArg::Off {
                row.mean_ms = 0.0;
                row.std_ms = 0.0;
            }
            println!(
                "{name:>20} {:>16}  F = {:.6} ± {:.6}  time = {:.0} ± {:.0} ms",
                row.variant, row.mean_f, row.std_f, row.mean_ms, row.std_ms
            );
            summary.push(row);
            improvements.push(bench::improvements(name, variant, &group));
        }
    }
    write(&a.out.join("summary.csv"), &bench::to_csv(&summary)?)?;
    write(&a.out.join("improvements.csv"), &bench::to_csv(&improvements)?)?;
    println!("tables in {}", a.out.display());
    Ok(())
}
