//! Domain types shared by the decoder, evaluator, operators and engine.
//!
//! Concepts, services and data items are interned: the string ids found in
//! input documents are kept for output, while every algorithm works on the
//! dense index newtypes below.

use std::collections::HashMap;
use std::fmt;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{DwscError, Result};
use crate::evaluator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConceptId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServiceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataId(pub u32);

impl ConceptId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ServiceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl DataId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// How a provided concept is matched against a wanted one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Provided equals wanted or is a descendant of it.
    #[default]
    Subsumption,
    /// Provided must equal wanted.
    Exact,
}

/// Concept forest. Each concept has at most one parent.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    names: Vec<String>,
    parents: Vec<Option<ConceptId>>,
    index: HashMap<String, ConceptId>,
}

impl Taxonomy {
    /// Builds a taxonomy from `(id, parent)` pairs. Parents may be declared
    /// after their children.
    pub fn new<I, S>(concepts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Option<S>)>,
        S: Into<String>,
    {
        let raw: Vec<(String, Option<String>)> = concepts
            .into_iter()
            .map(|(c, p)| (c.into(), p.map(Into::into)))
            .collect();
        let mut index = HashMap::with_capacity(raw.len());
        let mut names = Vec::with_capacity(raw.len());
        for (name, _) in &raw {
            let id = ConceptId(names.len() as u32);
            if index.insert(name.clone(), id).is_some() {
                return Err(DwscError::DuplicateId(name.clone()));
            }
            names.push(name.clone());
        }
        let mut parents = Vec::with_capacity(raw.len());
        for (_, parent) in &raw {
            let parent = match parent {
                Some(p) => Some(
                    *index
                        .get(p)
                        .ok_or_else(|| DwscError::UnknownConcept(p.clone()))?,
                ),
                None => None,
            };
            parents.push(parent);
        }
        let taxonomy = Taxonomy {
            names,
            parents,
            index,
        };
        taxonomy.check_acyclic()?;
        Ok(taxonomy)
    }

    fn check_acyclic(&self) -> Result<()> {
        // 0 = unvisited, 1 = on the current chain, 2 = known to reach a root
        let mut state = vec![0u8; self.len()];
        for start in 0..self.len() {
            let mut chain = Vec::new();
            let mut cur = Some(start);
            while let Some(c) = cur {
                match state[c] {
                    2 => break,
                    1 => return Err(DwscError::TaxonomyCycle(self.names[c].clone())),
                    _ => {}
                }
                state[c] = 1;
                chain.push(c);
                cur = self.parents[c].map(ConceptId::index);
            }
            for c in chain {
                state[c] = 2;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Option<ConceptId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<ConceptId> {
        self.id(name)
            .ok_or_else(|| DwscError::UnknownConcept(name.to_string()))
    }

    pub fn name(&self, id: ConceptId) -> &str {
        &self.names[id.index()]
    }

    pub fn parent(&self, id: ConceptId) -> Option<ConceptId> {
        self.parents[id.index()]
    }

    /// The concept itself followed by its parent chain up to the root.
    pub fn ancestors_or_self(&self, id: ConceptId) -> impl Iterator<Item = ConceptId> + '_ {
        std::iter::successors(Some(id), move |c| self.parent(*c))
    }

    /// True iff `provided` equals `wanted` or lies below it.
    pub fn subsumes(&self, provided: ConceptId, wanted: ConceptId) -> bool {
        self.ancestors_or_self(provided).any(|c| c == wanted)
    }

    pub fn subsumes_by_name(&self, provided: &str, wanted: &str) -> Result<bool> {
        Ok(self.subsumes(self.require(provided)?, self.require(wanted)?))
    }

    pub fn matches(&self, mode: MatchMode, provided: ConceptId, wanted: ConceptId) -> bool {
        match mode {
            MatchMode::Subsumption => self.subsumes(provided, wanted),
            MatchMode::Exact => provided == wanted,
        }
    }

    /// Every wanted concept that some concept in `provided` can satisfy.
    pub fn satisfiable_set(
        &self,
        mode: MatchMode,
        provided: impl IntoIterator<Item = ConceptId>,
    ) -> FixedBitSet {
        let mut set = FixedBitSet::with_capacity(self.len());
        for p in provided {
            match mode {
                MatchMode::Subsumption => {
                    for a in self.ancestors_or_self(p) {
                        set.insert(a.index());
                    }
                }
                MatchMode::Exact => set.insert(p.index()),
            }
        }
        set
    }

    pub fn iter(&self) -> impl Iterator<Item = (ConceptId, &str, Option<ConceptId>)> + '_ {
        self.names
            .iter()
            .zip(&self.parents)
            .enumerate()
            .map(|(i, (n, p))| (ConceptId(i as u32), n.as_str(), *p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn euclidean(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataItem {
    pub id: String,
    /// Cprov
    pub provision_cost: f64,
    pub size: f64,
    pub location: Point,
    /// Tsal
    pub access_latency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Service {
    pub id: String,
    pub inputs: Vec<ConceptId>,
    pub outputs: Vec<ConceptId>,
    /// Tproc, normalized to [0, 1].
    pub proc_time: f64,
    /// Cs, normalized to [0, 1].
    pub service_cost: f64,
    pub data_items: Vec<DataId>,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub provided: Vec<ConceptId>,
    pub wanted: Vec<ConceptId>,
}

/// Anything that has a location in the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entity {
    Service(ServiceId),
    Data(DataId),
}

/// Link between two entities, with its bandwidth in (0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub a: Entity,
    pub b: Entity,
    pub bandwidth: f64,
}

/// Distances, bandwidths and the two unit factors that turn distance into
/// propagation delay and communication cost.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    scale: f64,
    links: Vec<Link>,
    bandwidth: HashMap<(Entity, Entity), f64>,
    pub propagation_factor: f64,
    pub comm_cost_factor: f64,
}

fn unordered(a: Entity, b: Entity) -> (Entity, Entity) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl NetworkModel {
    /// `locations` must cover every located entity of the instance; the
    /// largest pairwise distance among them becomes distance 1.
    pub fn new(
        locations: &[Point],
        links: Vec<Link>,
        propagation_factor: f64,
        comm_cost_factor: f64,
    ) -> Result<Self> {
        if !(propagation_factor > 0.0 && comm_cost_factor > 0.0) {
            return Err(DwscError::InvalidInstance(
                "propagation and communication cost factors must be positive".into(),
            ));
        }
        let mut bandwidth = HashMap::with_capacity(links.len());
        for link in &links {
            if !(link.bandwidth > 0.0 && link.bandwidth <= 1.0) {
                return Err(DwscError::InvalidInstance(format!(
                    "bandwidth {} outside (0, 1]",
                    link.bandwidth
                )));
            }
            bandwidth.insert(unordered(link.a, link.b), link.bandwidth);
        }
        Ok(NetworkModel {
            scale: max_pairwise_distance(locations),
            links,
            bandwidth,
            propagation_factor,
            comm_cost_factor,
        })
    }

    /// Normalized distance in [0, 1].
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        if self.scale <= 0.0 {
            return 0.0;
        }
        (a.euclidean(b) / self.scale).min(1.0)
    }

    /// Largest raw Euclidean distance, i.e. the normalization constant.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Tp between two locations.
    pub fn propagation(&self, a: Point, b: Point) -> f64 {
        self.propagation_factor * self.distance(a, b)
    }

    /// Cc between two locations.
    pub fn comm_cost(&self, a: Point, b: Point) -> f64 {
        self.comm_cost_factor * self.distance(a, b)
    }

    pub fn bandwidth(&self, a: Entity, b: Entity) -> Option<f64> {
        self.bandwidth.get(&unordered(a, b)).copied()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }
}

fn max_pairwise_distance(points: &[Point]) -> f64 {
    let mut best = 0.0f64;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.max(p.euclidean(*q));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub time: f64,
    pub cost: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            time: 0.5,
            cost: 0.5,
        }
    }
}

impl Weights {
    pub fn new(time: f64, cost: f64) -> Result<Self> {
        if time < 0.0 || cost < 0.0 || ((time + cost) - 1.0).abs() > 1e-9 {
            return Err(DwscError::InvalidInstance(format!(
                "weights must be nonnegative and sum to 1, got ({time}, {cost})"
            )));
        }
        Ok(Weights { time, cost })
    }
}

/// Reading of the per-service time and cost sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqInterpretation {
    /// Processing time and service cost are charged once per service.
    #[default]
    Once,
    /// Processing time and service cost are charged once per data item.
    Literal,
}

/// Which selected service feeds a consumer when several could.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderChoice {
    #[default]
    Earliest,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalOptions {
    pub eq_interpretation: EqInterpretation,
    pub provider_choice: ProviderChoice,
}

/// Normalization upper bounds for total time and total cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub time_max: f64,
    pub cost_max: f64,
}

/// Everything needed to build a [`ProblemInstance`].
#[derive(Debug, Clone)]
pub struct InstanceParts {
    pub taxonomy: Taxonomy,
    pub matching: MatchMode,
    pub services: Vec<Service>,
    pub data_items: Vec<DataItem>,
    pub task: Task,
    pub network: NetworkModel,
    pub weights: Weights,
}

/// A fully loaded problem plus the lookup tables derived from it. Immutable
/// once built.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    parts: InstanceParts,
    options: EvalOptions,
    service_index: HashMap<String, ServiceId>,
    /// Per service, the concepts its outputs can satisfy.
    satisfies: Vec<FixedBitSet>,
    /// Concepts the task inputs can satisfy.
    provided: FixedBitSet,
    /// Forward-chaining round in which each service first becomes
    /// executable; `None` if it never does.
    levels: Vec<Option<u32>>,
    feasible: bool,
    service_time: Vec<f64>,
    service_cost: Vec<f64>,
    bounds: Bounds,
}

impl ProblemInstance {
    pub fn new(parts: InstanceParts, options: EvalOptions) -> Result<Self> {
        validate_parts(&parts)?;
        let mut service_index = HashMap::with_capacity(parts.services.len());
        for (i, s) in parts.services.iter().enumerate() {
            if service_index
                .insert(s.id.clone(), ServiceId(i as u32))
                .is_some()
            {
                return Err(DwscError::DuplicateId(s.id.clone()));
            }
        }
        let tax = &parts.taxonomy;
        let satisfies: Vec<FixedBitSet> = parts
            .services
            .iter()
            .map(|s| tax.satisfiable_set(parts.matching, s.outputs.iter().copied()))
            .collect();
        let provided = tax.satisfiable_set(parts.matching, parts.task.provided.iter().copied());
        let (levels, reachable) = forward_levels(&parts.services, &satisfies, &provided);
        let feasible = parts
            .task
            .wanted
            .iter()
            .all(|w| reachable.contains(w.index()));

        let mut service_time = Vec::with_capacity(parts.services.len());
        let mut service_cost = Vec::with_capacity(parts.services.len());
        for (i, s) in parts.services.iter().enumerate() {
            let id = ServiceId(i as u32);
            service_time.push(evaluator::service_time(
                id,
                s,
                &parts.data_items,
                &parts.network,
                options.eq_interpretation,
            )?);
            service_cost.push(evaluator::service_cost(
                id,
                s,
                &parts.data_items,
                &parts.network,
                options.eq_interpretation,
            )?);
        }
        let bounds = evaluator::bounds_from(&parts, &service_time, &service_cost);

        Ok(ProblemInstance {
            parts,
            options,
            service_index,
            satisfies,
            provided,
            levels,
            feasible,
            service_time,
            service_cost,
            bounds,
        })
    }

    /// Rebuilds the derived tables under different evaluation options.
    pub fn with_options(&self, options: EvalOptions) -> Result<Self> {
        ProblemInstance::new(self.parts.clone(), options)
    }

    pub fn parts(&self) -> &InstanceParts {
        &self.parts
    }

    pub fn options(&self) -> EvalOptions {
        self.options
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.parts.taxonomy
    }

    pub fn matching(&self) -> MatchMode {
        self.parts.matching
    }

    pub fn services(&self) -> &[Service] {
        &self.parts.services
    }

    pub fn service(&self, id: ServiceId) -> &Service {
        &self.parts.services[id.index()]
    }

    pub fn service_id(&self, name: &str) -> Option<ServiceId> {
        self.service_index.get(name).copied()
    }

    pub fn service_ids(&self) -> impl ExactSizeIterator<Item = ServiceId> {
        (0..self.parts.services.len() as u32).map(ServiceId)
    }

    pub fn len(&self) -> usize {
        self.parts.services.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.services.is_empty()
    }

    pub fn data_items(&self) -> &[DataItem] {
        &self.parts.data_items
    }

    pub fn task(&self) -> &Task {
        &self.parts.task
    }

    pub fn network(&self) -> &NetworkModel {
        &self.parts.network
    }

    pub fn weights(&self) -> Weights {
        self.parts.weights
    }

    pub fn satisfies(&self, id: ServiceId) -> &FixedBitSet {
        &self.satisfies[id.index()]
    }

    /// Whether service `id` can provide wanted concept `c`.
    pub fn can_provide(&self, id: ServiceId, c: ConceptId) -> bool {
        self.satisfies[id.index()].contains(c.index())
    }

    pub fn provided_set(&self) -> &FixedBitSet {
        &self.provided
    }

    pub fn start_provides(&self, c: ConceptId) -> bool {
        self.provided.contains(c.index())
    }

    pub fn level(&self, id: ServiceId) -> Option<u32> {
        self.levels[id.index()]
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    /// T_i of a service.
    pub fn service_time(&self, id: ServiceId) -> f64 {
        self.service_time[id.index()]
    }

    /// C_i of a service.
    pub fn service_cost(&self, id: ServiceId) -> f64 {
        self.service_cost[id.index()]
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn distance(&self, a: ServiceId, b: ServiceId) -> f64 {
        self.parts
            .network
            .distance(self.service(a).location, self.service(b).location)
    }

    pub fn service_name(&self, id: ServiceId) -> &str {
        &self.service(id).id
    }

    pub fn names(&self, seq: &[ServiceId]) -> Vec<String> {
        seq.iter().map(|s| self.service_name(*s).to_string()).collect()
    }
}

fn validate_parts(parts: &InstanceParts) -> Result<()> {
    let n_concepts = parts.taxonomy.len() as u32;
    let check = |c: &ConceptId| {
        if c.0 < n_concepts {
            Ok(())
        } else {
            Err(DwscError::UnknownConcept(format!("#{}", c.0)))
        }
    };
    for s in &parts.services {
        s.inputs.iter().try_for_each(check)?;
        s.outputs.iter().try_for_each(check)?;
        for d in &s.data_items {
            if d.index() >= parts.data_items.len() {
                return Err(DwscError::UnknownDataItem(format!("#{}", d.0)));
            }
        }
    }
    parts.task.provided.iter().try_for_each(check)?;
    parts.task.wanted.iter().try_for_each(check)?;
    if parts.task.provided.is_empty() || parts.task.wanted.is_empty() {
        return Err(DwscError::InvalidInstance(
            "task must provide and want at least one concept".into(),
        ));
    }
    Ok(())
}

/// Layered forward chaining from the task inputs. Returns each service's
/// level and the final set of satisfiable concepts.
fn forward_levels(
    services: &[Service],
    satisfies: &[FixedBitSet],
    provided: &FixedBitSet,
) -> (Vec<Option<u32>>, FixedBitSet) {
    let mut levels = vec![None; services.len()];
    let mut available = provided.clone();
    let mut round = 1;
    loop {
        let fired: Vec<usize> = services
            .iter()
            .enumerate()
            .filter(|(i, s)| {
                levels[*i].is_none() && s.inputs.iter().all(|c| available.contains(c.index()))
            })
            .map(|(i, _)| i)
            .collect();
        if fired.is_empty() {
            break;
        }
        for i in fired {
            levels[i] = Some(round);
            available.union_with(&satisfies[i]);
        }
        round += 1;
    }
    (levels, available)
}

/// Scalar fitness and its components. Lower is better.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitnessBreakdown {
    pub total_time: f64,
    pub total_cost: f64,
    pub norm_time: f64,
    pub norm_cost: f64,
    pub fitness: f64,
    /// A total exceeded its normalization bound and was clamped.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub clamped: bool,
}

impl fmt::Display for FitnessBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "F={:.6} (T={:.4}, C={:.4})",
            self.fitness, self.total_time, self.total_cost
        )
    }
}
