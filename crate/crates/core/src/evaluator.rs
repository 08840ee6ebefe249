//! Network-aware time and cost of services and compositions, normalization
//! bounds, and the weighted scalar fitness.

use log::warn;

use crate::dag::{Node, WorkflowDag};
use crate::error::{DwscError, Result};
use crate::model::{
    Bounds, DataItem, Entity, EqInterpretation, FitnessBreakdown, InstanceParts, NetworkModel,
    ProblemInstance, Service, ServiceId,
};

/// T_i: data propagation, server access latency, transfer time and
/// processing time of one service.
pub fn service_time(
    id: ServiceId,
    service: &Service,
    data_items: &[DataItem],
    network: &NetworkModel,
    interpretation: EqInterpretation,
) -> Result<f64> {
    let mut total = 0.0;
    for &d in &service.data_items {
        let item = &data_items[d.index()];
        let bandwidth = network
            .bandwidth(Entity::Data(d), Entity::Service(id))
            .ok_or_else(|| DwscError::MissingBandwidth(item.id.clone(), service.id.clone()))?;
        let propagation = network.propagation(item.location, service.location);
        let transfer = item.size / bandwidth;
        total += propagation + item.access_latency + transfer;
        if interpretation == EqInterpretation::Literal {
            total += service.proc_time;
        }
    }
    if interpretation == EqInterpretation::Once {
        total += service.proc_time;
    }
    Ok(total)
}

/// C_i: data communication cost, provision cost and service cost of one
/// service.
pub fn service_cost(
    _id: ServiceId,
    service: &Service,
    data_items: &[DataItem],
    network: &NetworkModel,
    interpretation: EqInterpretation,
) -> Result<f64> {
    let mut total = 0.0;
    for &d in &service.data_items {
        let item = &data_items[d.index()];
        total += network.comm_cost(item.location, service.location) + item.provision_cost;
        if interpretation == EqInterpretation::Literal {
            total += service.service_cost;
        }
    }
    if interpretation == EqInterpretation::Once {
        total += service.service_cost;
    }
    Ok(total)
}

/// Upper bounds used for normalization.
///
/// A path visits each service at most once and has at most n - 1
/// service-to-service links, each no longer than distance 1. A consumer has
/// at most one incoming link per distinct input concept.
pub(crate) fn bounds_from(parts: &InstanceParts, times: &[f64], costs: &[f64]) -> Bounds {
    let n = parts.services.len();
    let links_on_path = n.saturating_sub(1) as f64;
    let max_links: usize = parts
        .services
        .iter()
        .map(|s| {
            let mut inputs = s.inputs.clone();
            inputs.sort_unstable();
            inputs.dedup();
            inputs.len().min(n.saturating_sub(1))
        })
        .sum();
    Bounds {
        time_max: times.iter().sum::<f64>() + links_on_path * parts.network.propagation_factor,
        cost_max: costs.iter().sum::<f64>() + max_links as f64 * parts.network.comm_cost_factor,
    }
}

/// Normalization bounds of an instance. They depend only on the instance,
/// never on a run's seed.
pub fn compute_bounds(instance: &ProblemInstance) -> Bounds {
    instance.bounds()
}

/// C_total: every service's cost plus every service-to-service link's
/// communication cost.
pub fn total_cost(dag: &WorkflowDag, instance: &ProblemInstance) -> f64 {
    let nodes: f64 = dag.services().iter().map(|s| instance.service_cost(*s)).sum();
    let network = instance.network();
    let links: f64 = dag
        .service_edges()
        .map(|(a, b)| network.comm_cost(instance.service(a).location, instance.service(b).location))
        .sum();
    nodes + links
}

/// T_total: the most time-consuming start-to-end path, with service times
/// on nodes and propagation delays on service-to-service links.
pub fn total_time(dag: &WorkflowDag, instance: &ProblemInstance) -> f64 {
    let order = dag
        .topological_order()
        .expect("total_time requires an acyclic composition");
    let network = instance.network();
    let mut finish = std::collections::HashMap::with_capacity(order.len());
    let mut best_end = 0.0f64;
    for node in order {
        let arrival = dag
            .predecessors(node)
            .map(|p| {
                let link = match (p, node) {
                    (Node::Service(a), Node::Service(b)) => {
                        network.propagation(instance.service(a).location, instance.service(b).location)
                    }
                    _ => 0.0,
                };
                finish.get(&p).copied().unwrap_or(0.0) + link
            })
            .fold(0.0f64, f64::max);
        let own = match node {
            Node::Service(s) => instance.service_time(s),
            _ => 0.0,
        };
        finish.insert(node, arrival + own);
        if node == Node::End {
            best_end = arrival;
        }
    }
    best_end
}

/// Weighted, normalized fitness of a decoded composition.
pub fn fitness(dag: &WorkflowDag, instance: &ProblemInstance) -> FitnessBreakdown {
    breakdown(total_time(dag, instance), total_cost(dag, instance), instance)
}

/// Normalizes raw totals against the instance bounds. Values beyond a bound
/// are clamped to 1 with a warning.
pub fn breakdown(total_time: f64, total_cost: f64, instance: &ProblemInstance) -> FitnessBreakdown {
    let bounds = instance.bounds();
    let (norm_time, t_clamped) = normalize(total_time, bounds.time_max);
    let (norm_cost, c_clamped) = normalize(total_cost, bounds.cost_max);
    let clamped = t_clamped || c_clamped;
    if clamped {
        warn!(
            "composition exceeds normalization bounds (T={total_time}, C={total_cost}, bounds={bounds:?}); clamping"
        );
    }
    let w = instance.weights();
    FitnessBreakdown {
        total_time,
        total_cost,
        norm_time,
        norm_cost,
        fitness: w.time * norm_time + w.cost * norm_cost,
        clamped,
    }
}

fn normalize(value: f64, bound: f64) -> (f64, bool) {
    if bound <= 0.0 {
        return (if value > 0.0 { 1.0 } else { 0.0 }, value > 0.0);
    }
    let v = value / bound;
    if v > 1.0 {
        (1.0, true)
    } else {
        (v, false)
    }
}
