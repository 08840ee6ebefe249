//! Backward decoding of service sequences into feasible compositions.
//!
//! The decoder starts from the task's wanted concepts and scans the sequence
//! repeatedly, selecting any not-yet-selected service that can provide one of
//! the still-open concepts. A selected service's own inputs become open in
//! turn, unless the task inputs already cover them. Passes repeat while they
//! make progress.
//!
//! A service may only feed a consumer whose forward-chaining level is
//! strictly higher than its own. Edges therefore always point from a lower
//! level to a higher one, which keeps the graph acyclic, and every open need
//! always has some provider on a lower level. Decoding a permutation of the
//! whole repository can thus never get stuck on a feasible instance.

use std::collections::{HashMap, HashSet};

use fixedbitset::FixedBitSet;

use crate::dag::{Edge, Node, WorkflowDag};
use crate::model::{
    ConceptId, MatchMode, ProblemInstance, ProviderChoice, Service, ServiceId, Task, Taxonomy,
};

/// Keeps the first occurrence of every service, preserving order.
pub fn dedup(sequence: &[ServiceId]) -> Vec<ServiceId> {
    let mut seen = HashSet::with_capacity(sequence.len());
    sequence.iter().copied().filter(|s| seen.insert(*s)).collect()
}

/// Forward-chaining closure check: can the wanted concepts be produced from
/// the provided ones with the services in `repository`?
pub fn forward_feasible(
    repository: &[Service],
    task: &Task,
    taxonomy: &Taxonomy,
    mode: MatchMode,
) -> bool {
    let mut available = taxonomy.satisfiable_set(mode, task.provided.iter().copied());
    let mut fired = vec![false; repository.len()];
    loop {
        let mut progress = false;
        for (i, s) in repository.iter().enumerate() {
            if !fired[i] && s.inputs.iter().all(|c| available.contains(c.index())) {
                fired[i] = true;
                progress = true;
                available.union_with(&taxonomy.satisfiable_set(mode, s.outputs.iter().copied()));
            }
        }
        if !progress {
            break;
        }
    }
    task.wanted.iter().all(|c| available.contains(c.index()))
}

const END_LEVEL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Need {
    concept: ConceptId,
    level: u32,
}

struct Decoding<'a> {
    instance: &'a ProblemInstance,
    selected: Vec<ServiceId>,
    is_selected: FixedBitSet,
    open: Vec<Need>,
    open_concepts: FixedBitSet,
}

impl<'a> Decoding<'a> {
    fn new(instance: &'a ProblemInstance) -> Self {
        Decoding {
            instance,
            selected: Vec::new(),
            is_selected: FixedBitSet::with_capacity(instance.len()),
            open: Vec::new(),
            open_concepts: FixedBitSet::with_capacity(instance.taxonomy().len()),
        }
    }

    fn eligible(&self, provider: ServiceId, need: &Need) -> bool {
        self.instance
            .level(provider)
            .is_some_and(|l| l < need.level)
            && self.instance.can_provide(provider, need.concept)
    }

    /// Opens every wanted concept not already covered by the task inputs
    /// or by an eligible service selected earlier.
    fn open_needs(&mut self, wanted: &[ConceptId], level: u32) {
        for &concept in wanted {
            if self.instance.start_provides(concept) {
                continue;
            }
            let need = Need { concept, level };
            if self.selected.iter().any(|p| self.eligible(*p, &need)) {
                continue;
            }
            if self
                .open
                .iter()
                .any(|n| n.concept == concept && n.level == level)
            {
                continue;
            }
            self.open.push(need);
            self.open_concepts.insert(concept.index());
        }
    }

    fn try_select(&mut self, s: ServiceId) -> bool {
        if self.is_selected.contains(s.index()) {
            return false;
        }
        let Some(level) = self.instance.level(s) else {
            return false;
        };
        if self.instance.satisfies(s).is_disjoint(&self.open_concepts) {
            return false;
        }
        let before = self.open.len();
        let instance = self.instance;
        self.open
            .retain(|n| !(level < n.level && instance.can_provide(s, n.concept)));
        if self.open.len() == before {
            return false;
        }
        self.open_concepts.clear();
        for n in &self.open {
            self.open_concepts.insert(n.concept.index());
        }
        self.selected.push(s);
        self.is_selected.insert(s.index());
        self.open_needs(&instance.service(s).inputs, level);
        true
    }
}

/// Decodes `sequence` (which must be duplicate-free) into a composition, or
/// `None` when a full pass makes no progress while concepts remain open.
pub fn decode_backward(sequence: &[ServiceId], instance: &ProblemInstance) -> Option<WorkflowDag> {
    let mut dec = Decoding::new(instance);
    dec.open_needs(&instance.task().wanted, END_LEVEL);
    while !dec.open.is_empty() {
        let mut progress = false;
        for &s in sequence {
            if dec.open.is_empty() {
                break;
            }
            progress |= dec.try_select(s);
        }
        if !progress {
            return None;
        }
    }
    Some(materialize(dec.selected, instance))
}

fn materialize(selected: Vec<ServiceId>, instance: &ProblemInstance) -> WorkflowDag {
    let choice = instance.options().provider_choice;
    let mut edges: Vec<Edge> = Vec::new();
    let mut slots: HashMap<(Node, Node), usize> = HashMap::new();
    let mut add = |from: Node, to: Node, concept: Option<ConceptId>| {
        let slot = *slots.entry((from, to)).or_insert_with(|| {
            edges.push(Edge {
                from,
                to,
                concepts: Vec::new(),
            });
            edges.len() - 1
        });
        if let Some(c) = concept {
            if !edges[slot].concepts.contains(&c) {
                edges[slot].concepts.push(c);
            }
        }
    };

    let consumers = std::iter::once((Node::End, END_LEVEL, &instance.task().wanted)).chain(
        selected.iter().map(|s| {
            (
                Node::Service(*s),
                instance.level(*s).unwrap_or(0),
                &instance.service(*s).inputs,
            )
        }),
    );
    for (consumer, level, wanted) in consumers {
        if wanted.is_empty() {
            add(Node::Start, consumer, None);
        }
        for &c in wanted {
            if instance.start_provides(c) {
                add(Node::Start, consumer, Some(c));
                continue;
            }
            let mut candidates = selected.iter().copied().filter(|p| {
                instance.level(*p).is_some_and(|l| l < level) && instance.can_provide(*p, c)
            });
            let provider = match (choice, consumer) {
                (ProviderChoice::Nearest, Node::Service(to)) => {
                    let mut best: Option<(f64, ServiceId)> = None;
                    for p in candidates {
                        let d = instance.distance(p, to);
                        if best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, p));
                        }
                    }
                    best.map(|(_, p)| p)
                }
                _ => candidates.next(),
            };
            let provider = provider.expect("every open need was resolved during decoding");
            add(Node::Service(provider), consumer, Some(c));
        }
    }

    let mut services = selected;
    // Nearest-provider wiring can leave a selected service without consumers.
    loop {
        let dead: Vec<ServiceId> = services
            .iter()
            .copied()
            .filter(|s| !edges.iter().any(|e| e.from == Node::Service(*s)))
            .collect();
        if dead.is_empty() {
            break;
        }
        services.retain(|s| !dead.contains(s));
        edges.retain(|e| !dead.iter().any(|d| e.to == Node::Service(*d)));
    }
    WorkflowDag::from_parts(services, edges)
}

/// The subsequence of `sequence` made of the services used by `dag`.
pub fn strip_redundant(sequence: &[ServiceId], dag: &WorkflowDag) -> Vec<ServiceId> {
    let used: HashSet<ServiceId> = dag.services().iter().copied().collect();
    sequence
        .iter()
        .copied()
        .filter(|s| used.contains(s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::toy_instance;

    fn ids(inst: &ProblemInstance, names: &[&str]) -> Vec<ServiceId> {
        names.iter().map(|n| inst.service_id(n).unwrap()).collect()
    }

    #[test]
    fn dedup_keeps_first_occurrence() {
        let s = |i| ServiceId(i);
        assert_eq!(dedup(&[s(1), s(2), s(1), s(3)]), vec![s(1), s(2), s(3)]);
        assert_eq!(dedup(&[s(1), s(2), s(3)]), vec![s(1), s(2), s(3)]);
        assert_eq!(dedup(&[s(1), s(1), s(1)]), vec![s(1)]);
    }

    #[test]
    fn forward_closure_examples() {
        let inst = toy_instance();
        let tax = inst.taxonomy();
        let repo: Vec<Service> = ["S1", "S2"]
            .iter()
            .map(|n| inst.service(inst.service_id(n).unwrap()).clone())
            .collect();
        assert!(forward_feasible(&repo, inst.task(), tax, MatchMode::Subsumption));

        let only_s4 = vec![inst.service(inst.service_id("S4").unwrap()).clone()];
        assert!(!forward_feasible(&only_s4, inst.task(), tax, MatchMode::Subsumption));

        let trivial = Task {
            provided: vec![tax.require("a").unwrap(), tax.require("d").unwrap()],
            wanted: vec![tax.require("d").unwrap()],
        };
        assert!(forward_feasible(&[], &trivial, tax, MatchMode::Subsumption));
    }

    #[test]
    fn backward_decode_skips_unusable_service() {
        let inst = toy_instance();
        let seq = ids(&inst, &["S4", "S1", "S2"]);
        let dag = decode_backward(&seq, &inst).unwrap();
        dag.validate(&inst).unwrap();
        let mut used = inst.names(dag.services());
        used.sort();
        assert_eq!(used, ["S1", "S2"]);
        let (s1, s2) = (inst.service_id("S1").unwrap(), inst.service_id("S2").unwrap());
        let pairs: Vec<(Node, Node)> = dag.edges().iter().map(|e| (e.from, e.to)).collect();
        assert!(pairs.contains(&(Node::Start, Node::Service(s1))));
        assert!(pairs.contains(&(Node::Service(s1), Node::Service(s2))));
        assert!(pairs.contains(&(Node::Service(s2), Node::End)));
        assert_eq!(pairs.len(), 3);

        assert_eq!(strip_redundant(&seq, &dag), ids(&inst, &["S1", "S2"]));
    }

    #[test]
    fn direct_match_and_dead_end() {
        let inst = toy_instance();
        let dag = decode_backward(&ids(&inst, &["S3"]), &inst).unwrap();
        assert_eq!(inst.names(dag.services()), ["S3"]);
        dag.validate(&inst).unwrap();
        assert!(decode_backward(&ids(&inst, &["S4"]), &inst).is_none());
    }

    #[test]
    fn stripped_sequence_redecodes_to_same_nodes() {
        let inst = toy_instance();
        let seq = ids(&inst, &["S4", "S1", "S2"]);
        let dag = decode_backward(&seq, &inst).unwrap();
        let stripped = strip_redundant(&seq, &dag);
        let again = decode_backward(&stripped, &inst).unwrap();
        assert_eq!(again.services(), dag.services());
    }

    #[test]
    fn strip_is_identity_when_everything_is_used() {
        let inst = toy_instance();
        let seq = ids(&inst, &["S1", "S2"]);
        let dag = decode_backward(&seq, &inst).unwrap();
        assert_eq!(strip_redundant(&seq, &dag), seq);
    }
}
