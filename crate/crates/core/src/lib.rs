//! Memetic search for QoS-aware, network-aware composition of distributed
//! data-intensive web services.
//!
//! Solutions are encoded as service sequences and turned into workflow DAGs
//! by a backward decoder. Fitness combines the composition's critical-path
//! time and total cost, both of which include communication between
//! services and data hosts.

pub mod bench;
pub mod bundle;
pub mod dag;
pub mod decoder;
pub mod error;
pub mod engine;
pub mod evaluator;
pub mod genome;
pub mod ingest;
pub mod model;
pub mod operators;
pub mod report;
#[doc(hidden)]
pub mod testing;

pub use bundle::InstanceBundle;
pub use dag::{Edge, Node, WorkflowDag};
pub use engine::{evolve, Ablation, RunConfig, RunResult};
pub use error::{DwscError, Result};
pub use genome::Genome;
pub use model::{
    Bounds, ConceptId, EqInterpretation, EvalOptions, FitnessBreakdown, MatchMode,
    ProblemInstance, ProviderChoice, ServiceId, Taxonomy,
};
