use rand::seq::SliceRandom;
use rand::Rng;

use crate::dag::WorkflowDag;
use crate::decoder::{decode_backward, dedup, strip_redundant};
use crate::evaluator;
use crate::model::{FitnessBreakdown, ProblemInstance, ServiceId};

/// Variable-length sequence of distinct services, with its decoded
/// composition and fitness cached once evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct Genome {
    sequence: Vec<ServiceId>,
    dag: Option<WorkflowDag>,
    fitness: Option<FitnessBreakdown>,
}

impl Genome {
    /// Unevaluated genome; duplicates are dropped.
    pub fn new(sequence: &[ServiceId]) -> Self {
        Genome {
            sequence: dedup(sequence),
            dag: None,
            fitness: None,
        }
    }

    /// Decodes, strips unused services and evaluates. `None` if the
    /// sequence cannot be decoded.
    pub fn decode(sequence: &[ServiceId], instance: &ProblemInstance) -> Option<Self> {
        let sequence = dedup(sequence);
        let dag = decode_backward(&sequence, instance)?;
        let fitness = evaluator::fitness(&dag, instance);
        Some(Genome {
            sequence: strip_redundant(&sequence, &dag),
            dag: Some(dag),
            fitness: Some(fitness),
        })
    }

    /// Like [`Genome::decode`], but an undecodable sequence is first
    /// extended with a random order of every service it lacks. On a feasible
    /// instance the result always decodes.
    pub fn decode_or_repair<R: Rng + ?Sized>(
        sequence: &[ServiceId],
        instance: &ProblemInstance,
        rng: &mut R,
    ) -> Option<Self> {
        if let Some(g) = Genome::decode(sequence, instance) {
            return Some(g);
        }
        let mut extended = dedup(sequence);
        let mut present = vec![false; instance.len()];
        for s in &extended {
            present[s.index()] = true;
        }
        let mut missing: Vec<ServiceId> = instance.service_ids().filter(|s| !present[s.index()]).collect();
        missing.shuffle(rng);
        extended.extend(missing);
        Genome::decode(&extended, instance)
    }

    pub fn sequence(&self) -> &[ServiceId] {
        &self.sequence
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn dag(&self) -> Option<&WorkflowDag> {
        self.dag.as_ref()
    }

    pub fn breakdown(&self) -> Option<&FitnessBreakdown> {
        self.fitness.as_ref()
    }

    /// Scalar fitness. Panics on an unevaluated genome.
    pub fn fitness(&self) -> f64 {
        self.fitness
            .as_ref()
            .expect("genome has not been evaluated")
            .fitness
    }

    pub fn is_evaluated(&self) -> bool {
        self.fitness.is_some()
    }
}
