//! Python bindings: load or generate instances, evaluate sequences and run
//! the memetic algorithm.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dwsc_core::decoder::forward_feasible;
use dwsc_core::engine::LsGranularity;
use dwsc_core::ingest::{self, AugmentationParams, SyntheticParams};
use dwsc_core::model::Weights;
use dwsc_core::report::{generations_csv, result_json};
use dwsc_core::{
    operators, Ablation, DwscError, EqInterpretation, EvalOptions, Genome, InstanceBundle,
    ProblemInstance, ProviderChoice, RunConfig,
};

fn py_err(e: DwscError) -> PyErr {
    if e.is_parse_error() || matches!(e, DwscError::InvalidConfig(_)) {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn options(eq_interpretation: &str, provider_choice: &str) -> PyResult<EvalOptions> {
    let eq_interpretation = match eq_interpretation {
        "once" => EqInterpretation::Once,
        "literal" => EqInterpretation::Literal,
        other => return Err(PyValueError::new_err(format!("unknown eq_interpretation: {other}"))),
    };
    let provider_choice = match provider_choice {
        "earliest" => ProviderChoice::Earliest,
        "nearest" => ProviderChoice::Nearest,
        other => return Err(PyValueError::new_err(format!("unknown provider_choice: {other}"))),
    };
    Ok(EvalOptions {
        eq_interpretation,
        provider_choice,
    })
}

/// A loaded composition problem.
#[pyclass(frozen, module = "dwsc")]
pub struct Instance {
    bundle: InstanceBundle,
    inner: ProblemInstance,
}

impl Instance {
    fn build(bundle: InstanceBundle, eq_interpretation: &str, provider_choice: &str) -> PyResult<Self> {
        let inner = bundle
            .to_instance(options(eq_interpretation, provider_choice)?)
            .map_err(py_err)?;
        Ok(Instance { bundle, inner })
    }

    fn resolve(&self, names: &[String]) -> PyResult<Vec<dwsc_core::ServiceId>> {
        names
            .iter()
            .map(|n| {
                self.inner
                    .service_id(n)
                    .ok_or_else(|| PyValueError::new_err(format!("unknown service: {n}")))
            })
            .collect()
    }
}

#[pymethods]
impl Instance {
    #[staticmethod]
    #[pyo3(signature = (path, eq_interpretation = "once", provider_choice = "earliest"))]
    fn load(path: &str, eq_interpretation: &str, provider_choice: &str) -> PyResult<Self> {
        let bundle = InstanceBundle::load(path).map_err(py_err)?;
        Instance::build(bundle, eq_interpretation, provider_choice)
    }

    #[staticmethod]
    #[pyo3(signature = (text, eq_interpretation = "once", provider_choice = "earliest"))]
    fn from_json(text: &str, eq_interpretation: &str, provider_choice: &str) -> PyResult<Self> {
        let bundle = InstanceBundle::from_json(text).map_err(py_err)?;
        Instance::build(bundle, eq_interpretation, provider_choice)
    }

    #[staticmethod]
    #[pyo3(signature = (n_services, n_concepts, layers, items_per_service = 1, seed = 0))]
    fn synthetic(
        n_services: usize,
        n_concepts: usize,
        layers: usize,
        items_per_service: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let bundle = ingest::synthetic_bundle(SyntheticParams {
            n_services,
            n_concepts,
            layers,
            items_per_service,
            seed,
        })
        .map_err(py_err)?;
        Instance::build(bundle, "once", "earliest")
    }

    /// Builds an instance from the text of a WSC services, taxonomy and
    /// problem document, with a seeded random network.
    #[staticmethod]
    #[pyo3(signature = (services, taxonomy, problem, seed = 0))]
    fn from_wsc(services: &str, taxonomy: &str, problem: &str, seed: u64) -> PyResult<Self> {
        let repo = ingest::parse_wsc(services, taxonomy, problem).map_err(py_err)?;
        let params = AugmentationParams {
            seed,
            ..AugmentationParams::default()
        };
        let bundle = ingest::augment_repository(repo, &params, Weights::default(), Default::default())
            .map_err(py_err)?;
        Instance::build(bundle, "once", "earliest")
    }

    fn to_json(&self) -> String {
        self.bundle.to_json()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.bundle.save(path).map_err(py_err)
    }

    #[getter]
    fn digest(&self) -> String {
        self.bundle.digest()
    }

    #[getter]
    fn services(&self) -> Vec<String> {
        self.inner.services().iter().map(|s| s.id.clone()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(time_max, cost_max)` used for normalization.
    #[getter]
    fn bounds(&self) -> (f64, f64) {
        let b = self.inner.bounds();
        (b.time_max, b.cost_max)
    }

    fn is_feasible(&self) -> bool {
        forward_feasible(
            self.inner.services(),
            self.inner.task(),
            self.inner.taxonomy(),
            self.inner.matching(),
        )
    }

    /// Decodes a sequence of service names. Returns `None` when the
    /// sequence cannot satisfy the task, otherwise a dict with the fitness
    /// breakdown and the composition.
    fn evaluate<'py>(&self, py: Python<'py>, sequence: Vec<String>) -> PyResult<Option<Bound<'py, PyAny>>> {
        let seq = self.resolve(&sequence)?;
        let Some(genome) = Genome::decode(&seq, &self.inner) else {
            return Ok(None);
        };
        let dag = genome.dag().expect("decoded");
        let b = genome.breakdown().expect("evaluated");
        let edges: Vec<(String, String)> = dag
            .edges()
            .iter()
            .map(|e| (node_name(&self.inner, e.from), node_name(&self.inner, e.to)))
            .collect();
        let dict = pyo3::types::PyDict::new(py);
        dict.set_item("fitness", b.fitness)?;
        dict.set_item("total_time", b.total_time)?;
        dict.set_item("total_cost", b.total_cost)?;
        dict.set_item("norm_time", b.norm_time)?;
        dict.set_item("norm_cost", b.norm_cost)?;
        dict.set_item("services", self.inner.names(dag.services()))?;
        dict.set_item("edges", edges)?;
        dict.set_item("dot", dag.to_dot(&self.inner))?;
        Ok(Some(dict.into_any()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(services={}, data_items={})",
            self.inner.len(),
            self.inner.data_items().len()
        )
    }
}

fn node_name(instance: &ProblemInstance, node: dwsc_core::Node) -> String {
    match node {
        dwsc_core::Node::Start => "start".into(),
        dwsc_core::Node::End => "end".into(),
        dwsc_core::Node::Service(s) => instance.service_name(s).to_string(),
    }
}

/// Outcome of one run.
#[pyclass(frozen, module = "dwsc")]
pub struct RunResult {
    result_json: String,
    generations_csv: String,
    #[pyo3(get)]
    best_fitness: f64,
    #[pyo3(get)]
    best_sequence: Vec<String>,
    #[pyo3(get)]
    best_services: Vec<String>,
    #[pyo3(get)]
    best_f: Vec<f64>,
    /// `(type1_improved, type2_improved, no_improvement)` over the run.
    #[pyo3(get)]
    ls_totals: (usize, usize, usize),
}

#[pymethods]
impl RunResult {
    fn to_json(&self) -> String {
        self.result_json.clone()
    }

    fn generations_csv(&self) -> String {
        self.generations_csv.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(best_fitness={}, services={})",
            self.best_fitness,
            self.best_services.len()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (
    instance, *, population_size = 100, generations = 100, p_crossover = 0.95,
    p_mutation = 0.05, p_local_search = 0.05, n_l = 20, elitism = 2, tournament_k = 2,
    seed = 0, ablation = "full", ls_granularity = "per_individual",
))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    py: Python<'_>,
    instance: &Instance,
    population_size: usize,
    generations: usize,
    p_crossover: f64,
    p_mutation: f64,
    p_local_search: f64,
    n_l: usize,
    elitism: usize,
    tournament_k: usize,
    seed: u64,
    ablation: &str,
    ls_granularity: &str,
) -> PyResult<RunResult> {
    let ablation: Ablation = ablation.parse().map_err(py_err)?;
    let ls_granularity = match ls_granularity {
        "per_individual" => LsGranularity::PerIndividual,
        "per_generation" => LsGranularity::PerGeneration,
        other => return Err(PyValueError::new_err(format!("unknown ls_granularity: {other}"))),
    };
    let config = RunConfig {
        population_size,
        generations,
        p_crossover,
        p_mutation,
        p_local_search,
        n_l,
        elitism,
        tournament_k,
        seed,
        ablation,
        ls_granularity,
    };
    let inner = &instance.inner;
    let result = py
        .detach(|| dwsc_core::evolve(inner, &config))
        .map_err(py_err)?;
    let dag = result.best.dag().expect("decoded");
    Ok(RunResult {
        result_json: serde_json::to_string_pretty(&result_json(&result, inner))
            .expect("result serializes"),
        generations_csv: generations_csv(&result.generations, true).map_err(py_err)?,
        best_fitness: result.best.fitness(),
        best_sequence: inner.names(result.best.sequence()),
        best_services: inner.names(dag.services()),
        best_f: result.generations.iter().map(|g| g.best_f).collect(),
        ls_totals: result.ls_totals(),
    })
}

/// Longest common subsequence of two integer sequences.
#[pyfunction]
fn lcs(a: Vec<i64>, b: Vec<i64>) -> Vec<i64> {
    operators::lcs(&a, &b)
}

#[pymodule]
fn dwsc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<RunResult>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(lcs, m)?)?;
    Ok(())
}
