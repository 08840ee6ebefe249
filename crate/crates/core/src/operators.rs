//! Selection, distance-guided LCS crossover, mutation and the two
//! bottleneck-driven local-search neighbourhoods.

use std::collections::{HashMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dag::{Node, WorkflowDag};
use crate::error::{DwscError, Result};
use crate::genome::Genome;
use crate::model::{ProblemInstance, ServiceId};

/// Samples `k` distinct individuals and returns the index of the fittest.
/// Ties go to the lowest population index.
pub fn tournament_select<R: Rng + ?Sized>(population: &[Genome], k: usize, rng: &mut R) -> Result<usize> {
    if k == 0 || population.len() < k {
        return Err(DwscError::InvalidConfig(format!(
            "tournament of size {k} over a population of {}",
            population.len()
        )));
    }
    let mut best: Option<usize> = None;
    for i in index::sample(rng, population.len(), k) {
        best = match best {
            Some(b) if (population[b].fitness(), b) <= (population[i].fitness(), i) => Some(b),
            _ => Some(i),
        };
    }
    Ok(best.expect("k >= 1"))
}

/// Longest common subsequence by dynamic programming.
///
/// The backtrace starts at the ends of both sequences and takes a match
/// whenever the current elements are equal; otherwise it steps back in
/// `a` when that keeps the optimum. Among equally long answers this picks
/// matches as close to the sequence ends as possible.
pub fn lcs<T: PartialEq + Clone>(a: &[T], b: &[T]) -> Vec<T> {
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    let mut table = vec![0u32; (n + 1) * width];
    for i in 1..=n {
        for j in 1..=m {
            table[i * width + j] = if a[i - 1] == b[j - 1] {
                table[(i - 1) * width + j - 1] + 1
            } else {
                table[(i - 1) * width + j].max(table[i * width + j - 1])
            };
        }
    }
    let mut out = Vec::with_capacity(table[n * width + m] as usize);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        if a[i - 1] == b[j - 1] {
            out.push(a[i - 1].clone());
            i -= 1;
            j -= 1;
        } else if table[(i - 1) * width + j] >= table[i * width + j - 1] {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}

/// Longest service-to-service link leaving each service of `dag`.
fn longest_outgoing(dag: &WorkflowDag, instance: &ProblemInstance) -> HashMap<ServiceId, f64> {
    let mut out: HashMap<ServiceId, f64> = HashMap::new();
    for (a, b) in dag.service_edges() {
        let d = instance.distance(a, b);
        let e = out.entry(a).or_insert(d);
        *e = e.max(d);
    }
    out
}

/// Position after which `parent` is cut: right after the service with the
/// longest outgoing link, unless that cut would split the common
/// subsequence's span, in which case the next-longest link is tried. With
/// no admissible link the cut goes right after the common subsequence, or
/// at the end of the parent if there is none.
pub fn crossover_cut(parent: &Genome, common: &[ServiceId], instance: &ProblemInstance) -> usize {
    let seq = parent.sequence();
    let pos: HashMap<ServiceId, usize> = seq.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let span = match (common.first(), common.last()) {
        (Some(f), Some(l)) => Some((pos[f], pos[l])),
        _ => None,
    };
    let inside = |i: usize| span.is_some_and(|(first, last)| first <= i && i < last);

    let mut candidates: Vec<(f64, usize)> = parent
        .dag()
        .map(|d| longest_outgoing(d, instance))
        .unwrap_or_default()
        .into_iter()
        .filter_map(|(s, d)| pos.get(&s).map(|p| (d, *p)))
        .collect();
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    candidates
        .into_iter()
        .map(|(_, p)| p)
        .find(|p| !inside(*p))
        .unwrap_or_else(|| span.map_or(seq.len().saturating_sub(1), |(_, last)| last))
}

/// Distance-guided LCS crossover: each parent is cut independently and the
/// tails are exchanged. Children are deduplicated, decoded and evaluated.
pub fn crossover<R: Rng + ?Sized>(
    parent1: &Genome,
    parent2: &Genome,
    instance: &ProblemInstance,
    rng: &mut R,
) -> (Genome, Genome) {
    let degenerate = |g: &Genome| g.dag().is_none_or(|d| d.services().is_empty());
    if degenerate(parent1) || degenerate(parent2) {
        return (parent1.clone(), parent2.clone());
    }
    let (s1, s2) = (parent1.sequence(), parent2.sequence());
    let common = lcs(s1, s2);
    let cut1 = crossover_cut(parent1, &common, instance);
    let cut2 = crossover_cut(parent2, &common, instance);
    let child1: Vec<ServiceId> = s1[..=cut1].iter().chain(&s2[cut2 + 1..]).copied().collect();
    let child2: Vec<ServiceId> = s2[..=cut2].iter().chain(&s1[cut1 + 1..]).copied().collect();
    let make = |seq: &[ServiceId], fallback: &Genome, rng: &mut R| {
        Genome::decode_or_repair(seq, instance, rng).unwrap_or_else(|| fallback.clone())
    };
    let c1 = make(&child1, parent1, rng);
    let c2 = make(&child2, parent2, rng);
    (c1, c2)
}

/// Keeps a uniformly drawn prefix `[0, p)` and replaces the rest with a
/// random order of every repository service outside the prefix. `p` equal
/// to the length leaves the sequence unchanged.
pub fn mutate<R: Rng + ?Sized>(sequence: &[ServiceId], n_services: usize, rng: &mut R) -> Vec<ServiceId> {
    let p = rng.random_range(0..=sequence.len());
    mutate_at(sequence, n_services, p, rng)
}

pub fn mutate_at<R: Rng + ?Sized>(
    sequence: &[ServiceId],
    n_services: usize,
    p: usize,
    rng: &mut R,
) -> Vec<ServiceId> {
    if p >= sequence.len() {
        return sequence.to_vec();
    }
    let mut out = sequence[..p].to_vec();
    let mut kept = vec![false; n_services];
    for s in &out {
        kept[s.index()] = true;
    }
    let mut rest: Vec<ServiceId> = (0..n_services as u32)
        .map(ServiceId)
        .filter(|s| !kept[s.index()])
        .collect();
    rest.shuffle(rng);
    out.extend(rest);
    out
}

/// The longest service-to-service link of a composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bottleneck {
    /// `c` in the link `c -> a`.
    pub producer: ServiceId,
    pub consumer: ServiceId,
    pub distance: f64,
}

/// Ties are broken by the lexicographically smaller (producer, consumer)
/// id pair. `None` when there is no service-to-service link.
pub fn find_bottleneck(dag: &WorkflowDag, instance: &ProblemInstance) -> Option<Bottleneck> {
    let mut best: Option<Bottleneck> = None;
    for (c, a) in dag.service_edges() {
        let d = instance.distance(c, a);
        let better = match &best {
            None => true,
            Some(b) => {
                d > b.distance
                    || (d == b.distance
                        && (instance.service_name(c), instance.service_name(a))
                            < (instance.service_name(b.producer), instance.service_name(b.consumer)))
            }
        };
        if better {
            best = Some(Bottleneck {
                producer: c,
                consumer: a,
                distance: d,
            });
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NeighborKind {
    /// Replace the bottleneck's consumer.
    TypeI,
    /// Replace the bottleneck's producer and consumer.
    TypeII,
}

/// Where a neighbourhood's candidate block goes and which services it holds.
#[derive(Debug, Clone, PartialEq)]
pub struct InsertionPlan {
    /// Block is inserted right after this service; `None` means right
    /// before `before`.
    pub anchor: Option<ServiceId>,
    pub before: ServiceId,
    pub candidates: Vec<ServiceId>,
}

/// The predecessor of `c` on the time-critical path into it. `None` when
/// that predecessor is the start node.
fn critical_predecessor(dag: &WorkflowDag, c: ServiceId, instance: &ProblemInstance) -> Option<ServiceId> {
    let order = dag.topological_order()?;
    let mut finish: HashMap<Node, f64> = HashMap::new();
    let arrival = |p: Node, n: Node, finish: &HashMap<Node, f64>| {
        let link = match (p, n) {
            (Node::Service(x), Node::Service(y)) => instance
                .network()
                .propagation(instance.service(x).location, instance.service(y).location),
            _ => 0.0,
        };
        finish.get(&p).copied().unwrap_or(0.0) + link
    };
    for n in order {
        let start = dag
            .predecessors(n)
            .map(|p| arrival(p, n, &finish))
            .fold(0.0f64, f64::max);
        let own = n.service().map_or(0.0, |s| instance.service_time(s));
        finish.insert(n, start + own);
    }
    let target = Node::Service(c);
    let mut best: Option<(f64, Node)> = None;
    for p in dag.predecessors(target) {
        let t = arrival(p, target, &finish);
        let key_name = |n: Node| n.service().map_or("", |s| instance.service_name(s));
        best = match best {
            Some((bt, bn)) if bt > t || (bt == t && key_name(bn) <= key_name(p)) => Some((bt, bn)),
            _ => Some((t, p)),
        };
    }
    best.and_then(|(_, n)| n.service())
}

/// Candidate services for one neighbourhood kind around `bottleneck`.
pub fn insertion_plan(
    dag: &WorkflowDag,
    bottleneck: &Bottleneck,
    kind: NeighborKind,
    instance: &ProblemInstance,
) -> InsertionPlan {
    let (c, a) = (bottleneck.producer, bottleneck.consumer);
    let (anchor, excluded): (Option<ServiceId>, Vec<ServiceId>) = match kind {
        NeighborKind::TypeI => (Some(c), vec![a, c]),
        NeighborKind::TypeII => {
            let f = critical_predecessor(dag, c, instance);
            (f, [Some(a), Some(c), f].into_iter().flatten().collect())
        }
    };
    let feeds = match anchor {
        Some(s) => instance.satisfies(s),
        None => instance.provided_set(),
    };
    let candidates = instance
        .service_ids()
        .filter(|s| !excluded.contains(s))
        .filter(|s| instance.service(*s).inputs.iter().any(|i| feeds.contains(i.index())))
        .collect();
    InsertionPlan {
        anchor,
        before: c,
        candidates,
    }
}

/// Builds one neighbour sequence from a plan: the candidate block in random
/// order is inserted at the anchor (earlier copies of its members are
/// dropped), and a random prefix of up to n/10 absent services is prepended.
pub fn build_neighbor<R: Rng + ?Sized>(
    sequence: &[ServiceId],
    plan: &InsertionPlan,
    instance: &ProblemInstance,
    rng: &mut R,
) -> Vec<ServiceId> {
    let mut block = plan.candidates.clone();
    block.shuffle(rng);
    let in_block: HashSet<ServiceId> = block.iter().copied().collect();
    let base: Vec<ServiceId> = sequence
        .iter()
        .copied()
        .filter(|s| !in_block.contains(s))
        .collect();
    let at = match plan.anchor {
        Some(anchor) => base.iter().position(|s| *s == anchor).map(|p| p + 1),
        None => base.iter().position(|s| *s == plan.before),
    }
    .unwrap_or(0);

    let present: HashSet<ServiceId> = base.iter().chain(&block).copied().collect();
    let mut absent: Vec<ServiceId> = instance.service_ids().filter(|s| !present.contains(s)).collect();
    let prefix_len = rng.random_range(0..=instance.len() / 10).min(absent.len());
    let (prefix, _) = absent.partial_shuffle(rng, prefix_len);

    let mut out = Vec::with_capacity(prefix.len() + base.len() + block.len());
    out.extend_from_slice(prefix);
    out.extend_from_slice(&base[..at]);
    out.extend_from_slice(&block);
    out.extend_from_slice(&base[at..]);
    out
}

/// `count` neighbour sequences of one kind. Empty when the kind has no
/// candidates.
pub fn make_neighbors<R: Rng + ?Sized>(
    genome: &Genome,
    bottleneck: &Bottleneck,
    kind: NeighborKind,
    instance: &ProblemInstance,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<ServiceId>> {
    let Some(dag) = genome.dag() else {
        return Vec::new();
    };
    let plan = insertion_plan(dag, bottleneck, kind, instance);
    if plan.candidates.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|_| build_neighbor(genome.sequence(), &plan, instance, rng))
        .collect()
}

/// Which neighbourhoods local search draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchKinds {
    #[default]
    Both,
    TypeIOnly,
    TypeIIOnly,
}

/// What a local-search call achieved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LsOutcome {
    ImprovedByTypeI,
    ImprovedByTypeII,
    NoImprovement,
}

/// Generates `n_l` neighbours around the bottleneck (half of each kind for
/// [`SearchKinds::Both`]), evaluates them and returns the best one if it is
/// strictly fitter than `genome`.
///
/// Neighbour sequences and their repair seeds are drawn before evaluation,
/// so the result does not depend on how evaluation is scheduled.
pub fn local_search<R: Rng + ?Sized>(
    genome: &Genome,
    instance: &ProblemInstance,
    n_l: usize,
    kinds: SearchKinds,
    rng: &mut R,
) -> (Genome, LsOutcome) {
    let unchanged = || (genome.clone(), LsOutcome::NoImprovement);
    let Some(dag) = genome.dag() else {
        return unchanged();
    };
    let Some(bottleneck) = find_bottleneck(dag, instance) else {
        return unchanged();
    };
    let (n1, n2) = match kinds {
        SearchKinds::Both => (n_l / 2, n_l - n_l / 2),
        SearchKinds::TypeIOnly => (n_l, 0),
        SearchKinds::TypeIIOnly => (0, n_l),
    };
    let mut jobs: Vec<(NeighborKind, Vec<ServiceId>, u64)> = Vec::with_capacity(n_l);
    for (kind, count) in [(NeighborKind::TypeI, n1), (NeighborKind::TypeII, n2)] {
        if count == 0 {
            continue;
        }
        for seq in make_neighbors(genome, &bottleneck, kind, instance, count, rng) {
            jobs.push((kind, seq, rng.next_u64()));
        }
    }
    let evaluated: Vec<Option<Genome>> = jobs
        .par_iter()
        .map(|(_, seq, seed)| {
            Genome::decode_or_repair(seq, instance, &mut ChaCha8Rng::seed_from_u64(*seed))
        })
        .collect();
    let best = evaluated
        .iter()
        .enumerate()
        .filter_map(|(i, g)| g.as_ref().map(|g| (i, g)))
        .min_by(|(i, x), (j, y)| x.fitness().total_cmp(&y.fitness()).then(i.cmp(j)));
    match best {
        Some((i, g)) if g.fitness() < genome.fitness() => {
            let outcome = match jobs[i].0 {
                NeighborKind::TypeI => LsOutcome::ImprovedByTypeI,
                NeighborKind::TypeII => LsOutcome::ImprovedByTypeII,
            };
            (g.clone(), outcome)
        }
        _ => unchanged(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{bundle, concept, service, toy_instance};
    use crate::EvalOptions;

    fn seeded(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn with_fitness(inst: &ProblemInstance, names: &[&str]) -> Genome {
        let seq: Vec<ServiceId> = names.iter().map(|n| inst.service_id(n).unwrap()).collect();
        Genome::decode(&seq, inst).unwrap()
    }

    #[test]
    fn tournament_picks_fitter_and_breaks_ties_by_index() {
        let inst = toy_instance();
        let s12 = with_fitness(&inst, &["S1", "S2"]);
        let s3 = with_fitness(&inst, &["S3"]);
        assert!(s3.fitness() < s12.fitness());
        let pop = vec![s12.clone(), s3.clone()];
        for seed in 0..10 {
            assert_eq!(tournament_select(&pop, 2, &mut seeded(seed)).unwrap(), 1);
        }
        let tied = vec![s12.clone(), s12.clone()];
        for seed in 0..10 {
            assert_eq!(tournament_select(&tied, 2, &mut seeded(seed)).unwrap(), 0);
        }
        assert_eq!(tournament_select(&pop[..1], 1, &mut seeded(0)).unwrap(), 0);
        assert!(tournament_select(&pop[..1], 2, &mut seeded(0)).is_err());
    }

    #[test]
    fn lcs_examples() {
        assert_eq!(lcs(&[1, 2, 3], &[1, 2, 3]), vec![1, 2, 3]);
        assert!(lcs(&[1, 2, 3], &[4, 5, 6]).is_empty());
        let l = lcs(&[1, 3, 2, 4], &[1, 2, 3, 4]);
        assert_eq!(l.len(), 3);
        assert!(l == vec![1, 2, 4] || l == vec![1, 3, 4]);
    }

    #[test]
    fn mutation_boundaries() {
        let seq: Vec<ServiceId> = [3, 1, 4].map(ServiceId).to_vec();
        let mut rng = seeded(5);
        assert_eq!(mutate_at(&seq, 6, 3, &mut rng), seq);
        let mut full = mutate_at(&seq, 6, 0, &mut rng);
        full.sort();
        assert_eq!(full, (0..6).map(ServiceId).collect::<Vec<_>>());
        let partial = mutate_at(&seq, 6, 1, &mut rng);
        assert_eq!(partial[0], ServiceId(3));
        assert_eq!(partial.len(), 6);
    }

    /// Chain `a -> b -> d` where S1 is far from S2, plus alternatives.
    fn bottleneck_fixture() -> ProblemInstance {
        bundle(
            ["a", "b", "d"].iter().map(|c| concept(c, None)).collect(),
            vec![
                service("S1", &["a"], &["b"], 0.1, 0.1, (0.0, 0.0)),
                service("S2", &["b"], &["d"], 0.1, 0.1, (10.0, 0.0)),
                service("S5", &["b"], &["d"], 0.1, 0.1, (1.0, 0.0)),
                service("S6", &["b"], &["d"], 0.1, 0.1, (2.0, 0.0)),
                service("S7", &["a"], &["b"], 0.1, 0.1, (9.0, 0.0)),
            ],
            &["a"],
            &["d"],
        )
        .to_instance(EvalOptions::default())
        .unwrap()
    }

    #[test]
    fn bottleneck_is_longest_link() {
        let inst = bottleneck_fixture();
        let g = with_fitness(&inst, &["S1", "S2"]);
        let b = find_bottleneck(g.dag().unwrap(), &inst).unwrap();
        assert_eq!(inst.service_name(b.producer), "S1");
        assert_eq!(inst.service_name(b.consumer), "S2");
        assert!((b.distance - 1.0).abs() < 1e-12);

        let single = with_fitness(&toy_instance(), &["S3"]);
        assert!(find_bottleneck(single.dag().unwrap(), &toy_instance()).is_none());
    }

    #[test]
    fn type_one_block_holds_consumers_of_producer_outputs() {
        let inst = bottleneck_fixture();
        let g = with_fitness(&inst, &["S1", "S2"]);
        let b = find_bottleneck(g.dag().unwrap(), &inst).unwrap();
        let plan = insertion_plan(g.dag().unwrap(), &b, NeighborKind::TypeI, &inst);
        let mut names = inst.names(&plan.candidates);
        names.sort();
        assert_eq!(names, ["S5", "S6"]);
        assert_eq!(plan.anchor, inst.service_id("S1"));

        let mut rng = seeded(1);
        let ns = make_neighbors(&g, &b, NeighborKind::TypeI, &inst, 3, &mut rng);
        assert_eq!(ns.len(), 3);
        for n in &ns {
            let s1 = n.iter().position(|s| *s == inst.service_id("S1").unwrap()).unwrap();
            let block: HashSet<_> = n[s1 + 1..s1 + 3].iter().copied().collect();
            assert_eq!(block, plan.candidates.iter().copied().collect());
        }
    }

    #[test]
    fn type_two_at_start_boundary_matches_task_inputs() {
        let inst = bottleneck_fixture();
        let g = with_fitness(&inst, &["S1", "S2"]);
        let b = find_bottleneck(g.dag().unwrap(), &inst).unwrap();
        let plan = insertion_plan(g.dag().unwrap(), &b, NeighborKind::TypeII, &inst);
        assert_eq!(plan.anchor, None);
        assert_eq!(inst.names(&plan.candidates), ["S7"]);
        let n = build_neighbor(g.sequence(), &plan, &inst, &mut seeded(2));
        let s7 = n.iter().position(|s| inst.service_name(*s) == "S7").unwrap();
        let s1 = n.iter().position(|s| inst.service_name(*s) == "S1").unwrap();
        assert!(s7 < s1);
    }

    #[test]
    fn local_search_bypasses_the_long_link() {
        let inst = bottleneck_fixture();
        let g = with_fitness(&inst, &["S1", "S2"]);
        let (out, outcome) = local_search(&g, &inst, 2, SearchKinds::Both, &mut seeded(3));
        assert!(out.fitness() < g.fitness());
        assert_ne!(outcome, LsOutcome::NoImprovement);
        assert!(!out.dag().unwrap().contains(inst.service_id("S2").unwrap()));
    }

    #[test]
    fn local_search_without_bottleneck_is_identity() {
        let inst = toy_instance();
        let g = with_fitness(&inst, &["S3"]);
        let (out, outcome) = local_search(&g, &inst, 20, SearchKinds::Both, &mut seeded(0));
        assert_eq!(out, g);
        assert_eq!(outcome, LsOutcome::NoImprovement);
    }

    #[test]
    fn crossover_of_identical_parents_is_a_fixed_point() {
        let inst = bottleneck_fixture();
        let g = with_fitness(&inst, &["S1", "S2"]);
        let (c1, c2) = crossover(&g, &g, &inst, &mut seeded(0));
        assert_eq!(c1.sequence(), g.sequence());
        assert_eq!(c2.sequence(), g.sequence());
    }
}
