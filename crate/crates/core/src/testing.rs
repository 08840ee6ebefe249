//! Small hand-built fixtures shared by unit and integration tests.

use crate::bundle::{ConceptRecord, InstanceBundle, NetworkRecord, ServiceRecord, TaskRecord, SCHEMA};
use crate::model::{EvalOptions, MatchMode, Point, ProblemInstance, Weights};

pub fn concept(id: &str, parent: Option<&str>) -> ConceptRecord {
    ConceptRecord {
        id: id.to_string(),
        parent: parent.map(str::to_string),
    }
}

/// A service without data items.
pub fn service(
    id: &str,
    inputs: &[&str],
    outputs: &[&str],
    time: f64,
    cost: f64,
    at: (f64, f64),
) -> ServiceRecord {
    ServiceRecord {
        id: id.to_string(),
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
        proc_time: time,
        service_cost: cost,
        location: Point::new(at.0, at.1),
        data_items: Vec::new(),
    }
}

pub fn bundle(
    concepts: Vec<ConceptRecord>,
    services: Vec<ServiceRecord>,
    provided: &[&str],
    wanted: &[&str],
) -> InstanceBundle {
    InstanceBundle {
        schema: SCHEMA.to_string(),
        matching: MatchMode::Subsumption,
        weights: Weights::default(),
        concepts,
        services,
        data_items: Vec::new(),
        task: TaskRecord {
            provided: provided.iter().map(|s| s.to_string()).collect(),
            wanted: wanted.iter().map(|s| s.to_string()).collect(),
        },
        network: NetworkRecord::default(),
        augmentation: None,
    }
}

/// Concepts a, b, c, d; `S1: a -> b`, `S2: b -> d`, `S3: a -> d`,
/// `S4: c -> d`; task `{a} -> {d}`.
pub fn toy_bundle() -> InstanceBundle {
    bundle(
        ["a", "b", "c", "d"].iter().map(|c| concept(c, None)).collect(),
        vec![
            service("S1", &["a"], &["b"], 0.2, 0.3, (0.0, 0.0)),
            service("S2", &["b"], &["d"], 0.4, 0.2, (3.0, 0.0)),
            service("S3", &["a"], &["d"], 0.9, 0.8, (0.0, 4.0)),
            service("S4", &["c"], &["d"], 0.1, 0.1, (3.0, 4.0)),
        ],
        &["a"],
        &["d"],
    )
}

pub fn toy_instance() -> ProblemInstance {
    toy_bundle()
        .to_instance(EvalOptions::default())
        .expect("toy fixture is valid")
}
