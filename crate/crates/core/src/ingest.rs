//! Loading WSC-challenge repositories, augmenting them with network geometry
//! and data items, and generating layered synthetic instances.

use std::collections::{BTreeSet, HashMap};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::bundle::InstanceBundle;
use crate::error::{DwscError, Result};
use crate::model::{
    ConceptId, DataId, DataItem, Entity, EvalOptions, InstanceParts, Link, MatchMode,
    NetworkModel, Point, ProblemInstance, Service, ServiceId, Task, Taxonomy, Weights,
};

/// Where service and data-host coordinates come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateSource {
    /// Points drawn uniformly from the unit square.
    #[default]
    SyntheticUniform,
    /// Rows of a coordinates file. Services take rows in order; data hosts
    /// take uniformly drawn rows.
    Rows(Vec<Point>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationParams {
    pub seed: u64,
    pub data_size: f64,
    pub bandwidth_mean: f64,
    pub bandwidth_std: f64,
    /// Inclusive range of data items attached to each service.
    pub items_per_service: (usize, usize),
    #[serde(skip)]
    pub coordinates: CoordinateSource,
    pub propagation_factor: f64,
    pub comm_cost_factor: f64,
}

impl Default for AugmentationParams {
    fn default() -> Self {
        AugmentationParams {
            seed: 0,
            data_size: 3.0,
            bandwidth_mean: 0.5,
            bandwidth_std: 0.15,
            items_per_service: (1, 1),
            coordinates: CoordinateSource::SyntheticUniform,
            propagation_factor: 1.0,
            comm_cost_factor: 1.0,
        }
    }
}

impl AugmentationParams {
    fn validate(&self) -> Result<()> {
        if self.data_size.is_nan() || self.data_size <= 0.0 {
            return Err(DwscError::InvalidConfig("data size must be positive".into()));
        }
        if !(self.bandwidth_std > 0.0 && self.bandwidth_mean > 0.0 && self.bandwidth_mean <= 1.0) {
            return Err(DwscError::InvalidConfig(
                "bandwidth mean must lie in (0, 1] and its stddev must be positive".into(),
            ));
        }
        if self.items_per_service.0 > self.items_per_service.1 {
            return Err(DwscError::InvalidConfig(
                "items per service range is empty".into(),
            ));
        }
        Ok(())
    }
}

/// A repository as read from WSC-challenge documents, before augmentation.
#[derive(Debug, Clone)]
pub struct WscRepository {
    pub taxonomy: Taxonomy,
    pub services: Vec<Service>,
    pub task: Task,
}

fn local_name<'a>(node: &roxmltree::Node<'a, '_>) -> String {
    node.tag_name().name().to_ascii_lowercase()
}

fn attr_ci<'a>(node: &roxmltree::Node<'a, '_>, names: &[&str]) -> Option<&'a str> {
    node.attributes()
        .find(|a| names.iter().any(|n| a.name().eq_ignore_ascii_case(n)))
        .map(|a| a.value())
}

fn name_attr<'a>(node: &roxmltree::Node<'a, '_>) -> Result<&'a str> {
    attr_ci(node, &["name", "id"]).ok_or_else(|| {
        DwscError::Parse(format!(
            "<{}> element without a name attribute",
            node.tag_name().name()
        ))
    })
}

const TIME_ATTRS: &[&str] = &["res", "responsetime", "response_time", "time", "tproc"];
const COST_ATTRS: &[&str] = &["cost", "price", "cs"];

/// Taxonomy document: nested `<concept name>` elements with `<instance
/// name>` leaves. Returns the taxonomy and the instance-to-concept map.
fn parse_taxonomy(doc: &str) -> Result<(Taxonomy, HashMap<String, String>)> {
    let doc = roxmltree::Document::parse(doc)?;
    let mut concepts: Vec<(String, Option<String>)> = Vec::new();
    let mut instances = HashMap::new();
    for node in doc.descendants().filter(|n| n.is_element()) {
        match local_name(&node).as_str() {
            "concept" => {
                let parent = node
                    .ancestors()
                    .skip(1)
                    .find(|a| a.is_element() && local_name(a) == "concept")
                    .map(|a| name_attr(&a).map(str::to_string))
                    .transpose()?;
                concepts.push((name_attr(&node)?.to_string(), parent));
            }
            "instance" => {
                let owner = node
                    .ancestors()
                    .skip(1)
                    .find(|a| a.is_element() && local_name(a) == "concept")
                    .ok_or_else(|| {
                        DwscError::Parse("instance declared outside any concept".into())
                    })?;
                instances.insert(name_attr(&node)?.to_string(), name_attr(&owner)?.to_string());
            }
            _ => {}
        }
    }
    Ok((Taxonomy::new(concepts)?, instances))
}

struct Resolver<'a> {
    taxonomy: &'a Taxonomy,
    instances: &'a HashMap<String, String>,
}

impl Resolver<'_> {
    /// Instance names resolve through the instance map; bare concept names
    /// are accepted as-is.
    fn concept(&self, name: &str) -> Result<ConceptId> {
        if let Some(c) = self.instances.get(name) {
            return self.taxonomy.require(c);
        }
        self.taxonomy
            .id(name)
            .ok_or_else(|| DwscError::UnknownInstance(name.to_string()))
    }

    fn children(&self, node: &roxmltree::Node<'_, '_>, group: &[&str]) -> Result<Vec<ConceptId>> {
        let mut out = BTreeSet::new();
        for g in node
            .children()
            .filter(|n| n.is_element() && group.contains(&local_name(n).as_str()))
        {
            for inst in g.descendants().filter(|n| n.is_element()) {
                if matches!(local_name(&inst).as_str(), "instance" | "concept") {
                    out.insert(self.concept(name_attr(&inst)?)?);
                }
            }
        }
        Ok(out.into_iter().collect())
    }
}

fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    values
        .iter()
        .map(|v| if range > 0.0 { (v - lo) / range } else { 0.0 })
        .collect()
}

/// Parses a services / taxonomy / problem document triplet.
///
/// Each `<service>` must carry a response-time attribute (`Res`,
/// `ResponseTime`, `time`) and a cost attribute (`Cost`, `Price`), either on
/// the element itself or on a nested `<qos>` element. Raw values are min-max
/// normalized across the repository.
pub fn parse_wsc(services_doc: &str, taxonomy_doc: &str, problem_doc: &str) -> Result<WscRepository> {
    let (taxonomy, instances) = parse_taxonomy(taxonomy_doc)?;
    let resolver = Resolver {
        taxonomy: &taxonomy,
        instances: &instances,
    };

    let doc = roxmltree::Document::parse(services_doc)?;
    let mut services = Vec::new();
    let mut raw_time = Vec::new();
    let mut raw_cost = Vec::new();
    let mut missing = Vec::new();
    for node in doc
        .descendants()
        .filter(|n| n.is_element() && local_name(n) == "service")
    {
        let id = name_attr(&node)?.to_string();
        let qos_nodes: Vec<_> = std::iter::once(node)
            .chain(node.children().filter(|c| c.is_element() && local_name(c) == "qos"))
            .collect();
        let find = |names: &[&str]| -> Option<f64> {
            qos_nodes
                .iter()
                .find_map(|n| attr_ci(n, names))
                .and_then(|v| v.trim().parse::<f64>().ok())
        };
        match (find(TIME_ATTRS), find(COST_ATTRS)) {
            (Some(t), Some(c)) => {
                raw_time.push(t);
                raw_cost.push(c);
            }
            _ => {
                missing.push(id.clone());
                raw_time.push(0.0);
                raw_cost.push(0.0);
            }
        }
        services.push(Service {
            inputs: resolver.children(&node, &["inputs", "input"])?,
            outputs: resolver.children(&node, &["outputs", "output"])?,
            id,
            proc_time: 0.0,
            service_cost: 0.0,
            data_items: Vec::new(),
            location: Point::default(),
        });
    }
    if services.is_empty() {
        return Err(DwscError::EmptyRepository);
    }
    if !missing.is_empty() {
        return Err(DwscError::MissingQos(missing));
    }
    for ((s, t), c) in services
        .iter_mut()
        .zip(min_max_normalize(&raw_time))
        .zip(min_max_normalize(&raw_cost))
    {
        s.proc_time = t;
        s.service_cost = c;
    }

    let doc = roxmltree::Document::parse(problem_doc)?;
    let routine = doc
        .descendants()
        .find(|n| {
            n.is_element()
                && n.children().any(|c| {
                    c.is_element() && matches!(local_name(&c).as_str(), "provided" | "inputs")
                })
        })
        .ok_or_else(|| DwscError::Parse("problem document has no <provided> element".into()))?;
    let task = Task {
        provided: resolver.children(&routine, &["provided", "inputs"])?,
        wanted: resolver.children(&routine, &["wanted", "resultant", "required", "outputs"])?,
    };
    if task.provided.is_empty() || task.wanted.is_empty() {
        return Err(DwscError::Parse(
            "task must list provided and wanted instances".into(),
        ));
    }

    Ok(WscRepository {
        taxonomy,
        services,
        task,
    })
}

/// Reads `id,lat,lon` rows. A header row is skipped when its coordinates do
/// not parse.
pub fn parse_coordinates_csv(text: &str) -> Result<Vec<Point>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DwscError::Parse(format!("coordinates: {e}")))?;
        if record.len() < 3 {
            return Err(DwscError::Parse(format!(
                "coordinates row {} needs id,lat,lon",
                row + 1
            )));
        }
        match (record[1].parse::<f64>(), record[2].parse::<f64>()) {
            (Ok(lat), Ok(lon)) => points.push(Point::new(lon, lat)),
            _ if row == 0 => continue,
            _ => {
                return Err(DwscError::Parse(format!(
                    "coordinates row {} is not numeric",
                    row + 1
                )))
            }
        }
    }
    Ok(points)
}

/// Uniform draw from (0, 1].
fn unit_open_low(rng: &mut impl Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Normal draw resampled until it lands in (0, 1].
fn bandwidth_draw(rng: &mut impl Rng, normal: &Normal<f64>) -> f64 {
    loop {
        let b = normal.sample(rng);
        if b > 0.0 && b <= 1.0 {
            return b;
        }
    }
}

/// Result of network augmentation.
#[derive(Debug, Clone)]
pub struct Augmented {
    pub services: Vec<Service>,
    pub data_items: Vec<DataItem>,
    pub network: NetworkModel,
}

/// Places services and data hosts, attaches data items and draws
/// bandwidths. Inputs, outputs and the taxonomy are left untouched.
///
/// Draw order: all service coordinates first (synthetic mode), then per
/// service in repository order its item count followed by, per item, the
/// host coordinate, access latency, provision cost and link bandwidth.
pub fn augment(mut services: Vec<Service>, params: &AugmentationParams) -> Result<Augmented> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let normal = Normal::new(params.bandwidth_mean, params.bandwidth_std)
        .map_err(|e| DwscError::InvalidConfig(e.to_string()))?;

    match &params.coordinates {
        CoordinateSource::SyntheticUniform => {
            for s in services.iter_mut() {
                s.location = Point::new(rng.random(), rng.random());
            }
        }
        CoordinateSource::Rows(rows) => {
            if rows.len() < services.len() {
                return Err(DwscError::NotEnoughCoordinates {
                    needed: services.len(),
                    found: rows.len(),
                });
            }
            for (s, p) in services.iter_mut().zip(rows) {
                s.location = *p;
            }
        }
    }

    let mut data_items = Vec::new();
    let mut links = Vec::new();
    let (lo, hi) = params.items_per_service;
    for (i, s) in services.iter_mut().enumerate() {
        let m = rng.random_range(lo..=hi);
        s.data_items.clear();
        for j in 0..m {
            let location = match &params.coordinates {
                CoordinateSource::SyntheticUniform => Point::new(rng.random(), rng.random()),
                CoordinateSource::Rows(rows) => rows[rng.random_range(0..rows.len())],
            };
            let access_latency = unit_open_low(&mut rng);
            let provision_cost = unit_open_low(&mut rng);
            let bandwidth = bandwidth_draw(&mut rng, &normal);
            let id = DataId(data_items.len() as u32);
            data_items.push(DataItem {
                id: format!("{}#d{j}", s.id),
                provision_cost,
                size: params.data_size,
                location,
                access_latency,
            });
            links.push(Link {
                a: Entity::Data(id),
                b: Entity::Service(ServiceId(i as u32)),
                bandwidth,
            });
            s.data_items.push(id);
        }
    }

    let locations: Vec<Point> = services
        .iter()
        .map(|s| s.location)
        .chain(data_items.iter().map(|d| d.location))
        .collect();
    let network = NetworkModel::new(
        &locations,
        links,
        params.propagation_factor,
        params.comm_cost_factor,
    )?;
    Ok(Augmented {
        services,
        data_items,
        network,
    })
}

/// Augments a parsed WSC repository into a full instance bundle.
pub fn augment_repository(
    repo: WscRepository,
    params: &AugmentationParams,
    weights: Weights,
    matching: MatchMode,
) -> Result<InstanceBundle> {
    let aug = augment(repo.services, params)?;
    let parts = InstanceParts {
        taxonomy: repo.taxonomy,
        matching,
        services: aug.services,
        data_items: aug.data_items,
        task: repo.task,
        network: aug.network,
        weights,
    };
    let mut bundle = InstanceBundle::from_parts(&parts);
    bundle.augmentation = Some(serde_json::to_value(params)?);
    Ok(bundle)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_services: usize,
    pub n_concepts: usize,
    pub layers: usize,
    pub items_per_service: usize,
    pub seed: u64,
}

/// Builds a layered instance that is feasible by construction.
///
/// Concepts are split into one group per layer plus the task-input group,
/// with an extra unreachable group when there is room. Every layer-k
/// service consumes concepts produced by layer k-1 (sometimes a more
/// general ancestor, or an extra concept from an earlier layer) and
/// produces concepts of group k. The task asks for concepts produced by
/// the last layer. Some services also need an unreachable concept and act
/// as distractors.
pub fn synthetic_bundle(p: SyntheticParams) -> Result<InstanceBundle> {
    if p.n_services == 0 || p.layers == 0 {
        return Err(DwscError::InvalidConfig(
            "need at least one service and one layer".into(),
        ));
    }
    if p.n_concepts < p.layers + 1 {
        return Err(DwscError::InvalidConfig(format!(
            "{} concepts cannot host {} layers plus task inputs",
            p.n_concepts, p.layers
        )));
    }
    if p.n_services < p.layers {
        return Err(DwscError::InvalidConfig(format!(
            "{} services cannot cover {} layers",
            p.n_services, p.layers
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let dead_count = if p.n_concepts >= 2 * (p.layers + 1) {
        (p.n_concepts / (p.layers + 2)).max(1)
    } else {
        0
    };
    let live = p.n_concepts - dead_count;
    let groups_n = p.layers + 1;
    let mut concepts: Vec<(String, Option<String>)> = Vec::with_capacity(p.n_concepts);
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(groups_n);
    for g in 0..groups_n {
        let size = live / groups_n + usize::from(g < live % groups_n);
        let mut members = Vec::with_capacity(size);
        for k in 0..size {
            let parent = if k > 0 && rng.random_bool(0.5) {
                let pk = rng.random_range(0..k);
                Some(format!("c{g}_{pk}"))
            } else {
                None
            };
            members.push(concepts.len());
            concepts.push((format!("c{g}_{k}"), parent));
        }
        groups.push(members);
    }
    let dead: Vec<usize> = (0..dead_count)
        .map(|k| {
            concepts.push((format!("x_{k}"), None));
            concepts.len() - 1
        })
        .collect();
    let taxonomy = Taxonomy::new(concepts.clone())?;
    let parent_of = |c: usize| -> Vec<usize> {
        taxonomy
            .ancestors_or_self(ConceptId(c as u32))
            .map(ConceptId::index)
            .collect()
    };

    let mut layer_of: Vec<usize> = (1..=p.layers).collect();
    layer_of.extend((p.layers..p.n_services).map(|_| rng.random_range(1..=p.layers)));
    layer_of.sort_unstable();

    // Group 0 is provided by the task.
    let mut produced: Vec<Vec<usize>> = vec![Vec::new(); groups_n];
    produced[0] = groups[0].clone();
    let distractor_rate = if dead.is_empty() { 0.0 } else { 0.15 };
    let mut specs: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(p.n_services);
    let mut made: BTreeSet<usize> = BTreeSet::new();
    for (k, &layer) in layer_of.iter().enumerate() {
        let first_of_layer = k == 0 || layer_of[k - 1] != layer;
        let source = &produced[layer - 1];
        let n_in = rng.random_range(1..=source.len().min(3));
        let mut inputs: BTreeSet<usize> = BTreeSet::new();
        for &c in source.choose_multiple(&mut rng, n_in) {
            let chain = parent_of(c);
            inputs.insert(*chain.choose(&mut rng).expect("chain contains the concept"));
        }
        if layer >= 2 && rng.random_bool(0.3) {
            let earlier = rng.random_range(0..layer - 1);
            if let Some(&c) = produced[earlier].choose(&mut rng) {
                inputs.insert(c);
            }
        }
        let target = &groups[layer];
        let n_out = rng.random_range(1..=target.len().min(3));
        let outputs: BTreeSet<usize> = target.choose_multiple(&mut rng, n_out).copied().collect();
        // The first service of every layer keeps the chain feasible.
        if !first_of_layer && rng.random_bool(distractor_rate) {
            inputs.insert(*dead.choose(&mut rng).expect("dead group is non-empty"));
        } else {
            made.extend(outputs.iter().copied());
        }
        specs.push((inputs.into_iter().collect(), outputs.into_iter().collect()));
        // Layers are generated in order, so a layer's outputs become usable
        // once it is complete.
        if k + 1 == layer_of.len() || layer_of[k + 1] != layer {
            produced[layer] = std::mem::take(&mut made).into_iter().collect();
        }
    }

    let mut order: Vec<usize> = (0..specs.len()).collect();
    order.shuffle(&mut rng);
    let mut services = Vec::with_capacity(specs.len());
    let mut raw_time = Vec::with_capacity(specs.len());
    let mut raw_cost = Vec::with_capacity(specs.len());
    for (i, &k) in order.iter().enumerate() {
        let (inputs, outputs) = &specs[k];
        raw_time.push(rng.random::<f64>());
        raw_cost.push(rng.random::<f64>());
        services.push(Service {
            id: format!("s{i}"),
            inputs: inputs.iter().map(|c| ConceptId(*c as u32)).collect(),
            outputs: outputs.iter().map(|c| ConceptId(*c as u32)).collect(),
            proc_time: 0.0,
            service_cost: 0.0,
            data_items: Vec::new(),
            location: Point::default(),
        });
    }
    for ((s, t), c) in services
        .iter_mut()
        .zip(min_max_normalize(&raw_time))
        .zip(min_max_normalize(&raw_cost))
    {
        s.proc_time = t;
        s.service_cost = c;
    }

    let last = &produced[p.layers];
    let n_wanted = rng.random_range(1..=last.len().min(2));
    let wanted: BTreeSet<ConceptId> = last
        .choose_multiple(&mut rng, n_wanted)
        .map(|c| ConceptId(*c as u32))
        .collect();
    let task = Task {
        provided: groups[0].iter().map(|c| ConceptId(*c as u32)).collect(),
        wanted: wanted.into_iter().collect(),
    };

    let params = AugmentationParams {
        seed: p.seed.wrapping_add(0x9E37_79B9_7F4A_7C15),
        items_per_service: (p.items_per_service, p.items_per_service),
        ..AugmentationParams::default()
    };
    let aug = augment(services, &params)?;
    let parts = InstanceParts {
        taxonomy,
        matching: MatchMode::Subsumption,
        services: aug.services,
        data_items: aug.data_items,
        task,
        network: aug.network,
        weights: Weights::default(),
    };
    let mut bundle = InstanceBundle::from_parts(&parts);
    bundle.augmentation = Some(serde_json::json!({
        "synthetic": p,
        "network": params,
    }));
    Ok(bundle)
}

pub fn generate_synthetic(p: SyntheticParams, options: EvalOptions) -> Result<ProblemInstance> {
    synthetic_bundle(p)?.to_instance(options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::forward_feasible;

    const TAXONOMY: &str = r#"<taxonomy>
        <concept name="thing">
            <instance name="inst_thing"/>
            <concept name="a"><instance name="inst_a"/></concept>
            <concept name="b"><instance name="inst_b"/></concept>
        </concept>
    </taxonomy>"#;

    const PROBLEM: &str = r#"<WSChallenge><CompositionRoutine name="t1">
        <Provided><instance name="inst_a"/></Provided>
        <Resultant><instance name="inst_b"/></Resultant>
    </CompositionRoutine></WSChallenge>"#;

    #[test]
    fn parses_single_service() {
        let services = r#"<services>
            <service name="s1" Res="120" Cost="4">
                <inputs><instance name="inst_a"/></inputs>
                <outputs><instance name="inst_b"/></outputs>
            </service>
        </services>"#;
        let repo = parse_wsc(services, TAXONOMY, PROBLEM).unwrap();
        assert_eq!(repo.services.len(), 1);
        let s = &repo.services[0];
        assert_eq!(s.id, "s1");
        assert_eq!(repo.taxonomy.name(s.inputs[0]), "a");
        assert_eq!(repo.taxonomy.name(s.outputs[0]), "b");
        assert_eq!(repo.taxonomy.parent(s.inputs[0]), repo.taxonomy.id("thing"));
        // A single value has zero range.
        assert_eq!(s.proc_time, 0.0);
        assert_eq!(s.service_cost, 0.0);
    }

    #[test]
    fn dangling_instance_is_named() {
        let services = r#"<services><service name="s1" Res="1" Cost="1">
            <inputs><instance name="ghost"/></inputs>
            <outputs><instance name="inst_b"/></outputs>
        </service></services>"#;
        let err = parse_wsc(services, TAXONOMY, PROBLEM).unwrap_err();
        assert_eq!(err.to_string(), "unknown instance: ghost");
    }

    #[test]
    fn identical_raw_qos_normalizes_to_zero() {
        let services = r#"<services>
            <service name="s1" Res="7" Cost="1"><inputs><instance name="inst_a"/></inputs><outputs><instance name="inst_b"/></outputs></service>
            <service name="s2" Res="7" Cost="3"><inputs><instance name="inst_a"/></inputs><outputs><instance name="inst_b"/></outputs></service>
        </services>"#;
        let repo = parse_wsc(services, TAXONOMY, PROBLEM).unwrap();
        assert!(repo.services.iter().all(|s| s.proc_time == 0.0));
        assert_eq!(repo.services[0].service_cost, 0.0);
        assert_eq!(repo.services[1].service_cost, 1.0);
    }

    #[test]
    fn missing_qos_and_empty_repository() {
        let services = r#"<services>
            <service name="s1" Cost="1"><inputs><instance name="inst_a"/></inputs><outputs><instance name="inst_b"/></outputs></service>
            <service name="s2"><inputs><instance name="inst_a"/></inputs><outputs><instance name="inst_b"/></outputs></service>
        </services>"#;
        match parse_wsc(services, TAXONOMY, PROBLEM) {
            Err(DwscError::MissingQos(ids)) => assert_eq!(ids, ["s1", "s2"]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_wsc("<services/>", TAXONOMY, PROBLEM),
            Err(DwscError::EmptyRepository)
        ));
    }

    #[test]
    fn coordinates_csv_skips_header() {
        let pts = parse_coordinates_csv("id,lat,lon\n1, 10.5, 20\n2,-3,4\n").unwrap();
        assert_eq!(pts, vec![Point::new(20.0, 10.5), Point::new(4.0, -3.0)]);
        assert!(parse_coordinates_csv("1,2\n").is_err());
    }

    fn two_services() -> Vec<Service> {
        (0..2)
            .map(|i| Service {
                id: format!("s{i}"),
                inputs: vec![ConceptId(0)],
                outputs: vec![ConceptId(1)],
                proc_time: 0.5,
                service_cost: 0.5,
                data_items: vec![],
                location: Point::default(),
            })
            .collect()
    }

    #[test]
    fn augmentation_is_seeded_and_in_range() {
        let params = AugmentationParams {
            seed: 11,
            items_per_service: (1, 3),
            ..Default::default()
        };
        let a = augment(two_services(), &params).unwrap();
        let b = augment(two_services(), &params).unwrap();
        assert_eq!(a.services, b.services);
        assert_eq!(a.data_items, b.data_items);
        assert_eq!(a.network.links(), b.network.links());
        for l in a.network.links() {
            assert!(l.bandwidth > 0.0 && l.bandwidth <= 1.0);
        }
        for d in &a.data_items {
            assert!(d.access_latency > 0.0 && d.access_latency <= 1.0);
            assert!(d.provision_cost > 0.0 && d.provision_cost <= 1.0);
            assert_eq!(d.size, 3.0);
        }
        for (s, orig) in a.services.iter().zip(two_services()) {
            assert_eq!(s.inputs, orig.inputs);
            assert_eq!(s.outputs, orig.outputs);
        }
    }

    #[test]
    fn coincident_rows_give_zero_distance() {
        let p = Point::new(5.0, 5.0);
        let params = AugmentationParams {
            coordinates: CoordinateSource::Rows(vec![p, p, Point::new(0.0, 0.0)]),
            ..Default::default()
        };
        let a = augment(two_services(), &params).unwrap();
        assert_eq!(a.network.distance(a.services[0].location, a.services[1].location), 0.0);
    }

    #[test]
    fn too_few_coordinate_rows() {
        let params = AugmentationParams {
            coordinates: CoordinateSource::Rows(vec![Point::default()]),
            ..Default::default()
        };
        assert!(matches!(
            augment(two_services(), &params),
            Err(DwscError::NotEnoughCoordinates { needed: 2, found: 1 })
        ));
    }

    #[test]
    fn synthetic_instances_are_feasible_and_seeded() {
        let p = SyntheticParams {
            n_services: 10,
            n_concepts: 8,
            layers: 3,
            items_per_service: 1,
            seed: 42,
        };
        let inst = generate_synthetic(p, EvalOptions::default()).unwrap();
        assert!(inst.is_feasible());
        assert!(forward_feasible(
            inst.services(),
            inst.task(),
            inst.taxonomy(),
            inst.matching()
        ));
        assert_eq!(synthetic_bundle(p).unwrap(), synthetic_bundle(p).unwrap());
    }

    #[test]
    fn minimal_synthetic_instance() {
        let p = SyntheticParams {
            n_services: 1,
            n_concepts: 4,
            layers: 1,
            items_per_service: 1,
            seed: 3,
        };
        let inst = generate_synthetic(p, EvalOptions::default()).unwrap();
        let s = ServiceId(0);
        assert!(inst.service(s).inputs.iter().all(|c| inst.start_provides(*c)));
        assert!(inst.task().wanted.iter().all(|c| inst.can_provide(s, *c)));
    }

    #[test]
    fn impossible_synthetic_parameters() {
        let p = SyntheticParams {
            n_services: 2,
            n_concepts: 2,
            layers: 3,
            items_per_service: 1,
            seed: 0,
        };
        assert!(synthetic_bundle(p).is_err());
        assert!(synthetic_bundle(SyntheticParams { n_concepts: 10, ..p }).is_err());
    }
}
