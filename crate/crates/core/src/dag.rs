//! Decoded compositions: a DAG between a virtual start node, service nodes
//! and a virtual end node.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{ConceptId, ProblemInstance, ServiceId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Start,
    Service(ServiceId),
    End,
}

impl Node {
    pub fn service(self) -> Option<ServiceId> {
        match self {
            Node::Service(s) => Some(s),
            _ => None,
        }
    }
}

/// Data-flow edge; `concepts` are the consumer's wanted concepts this
/// producer satisfies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: Node,
    pub to: Node,
    pub concepts: Vec<ConceptId>,
}

impl Edge {
    /// Both endpoints are real services.
    pub fn between_services(&self) -> Option<(ServiceId, ServiceId)> {
        Some((self.from.service()?, self.to.service()?))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DagViolation {
    #[error("graph has a cycle")]
    Cycle,
    #[error("edge references a node outside the graph: {0:?}")]
    DanglingEdge(Node),
    #[error("edge enters start or leaves end")]
    BadTerminalEdge,
    #[error("input {concept} of {node} is not satisfied")]
    UnsatisfiedInput { node: String, concept: String },
    #[error("edge from {from} to {to} carries {concept} which the producer cannot provide")]
    UnjustifiedEdge {
        from: String,
        to: String,
        concept: String,
    },
    #[error("{0} is not on a start-to-end path")]
    Unreachable(String),
    #[error("service {0} appears twice")]
    DuplicateNode(String),
}

/// Feasible composition produced by the decoder.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkflowDag {
    services: Vec<ServiceId>,
    edges: Vec<Edge>,
}

impl WorkflowDag {
    /// `services` order is preserved as given; no validation is performed.
    pub fn from_parts(services: Vec<ServiceId>, edges: Vec<Edge>) -> Self {
        WorkflowDag { services, edges }
    }

    pub fn services(&self) -> &[ServiceId] {
        &self.services
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn contains(&self, s: ServiceId) -> bool {
        self.services.contains(&s)
    }

    pub fn service_edges(&self) -> impl Iterator<Item = (ServiceId, ServiceId)> + '_ {
        self.edges.iter().filter_map(Edge::between_services)
    }

    pub fn predecessors(&self, node: Node) -> impl Iterator<Item = Node> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.to == node)
            .map(|e| e.from)
    }

    pub fn successors(&self, node: Node) -> impl Iterator<Item = Node> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.from == node)
            .map(|e| e.to)
    }

    fn nodes(&self) -> Vec<Node> {
        let mut nodes = Vec::with_capacity(self.services.len() + 2);
        nodes.push(Node::Start);
        nodes.extend(self.services.iter().map(|s| Node::Service(*s)));
        nodes.push(Node::End);
        nodes
    }

    fn node_index(&self) -> HashMap<Node, usize> {
        self.nodes()
            .into_iter()
            .enumerate()
            .map(|(i, n)| (n, i))
            .collect()
    }

    /// Kahn ordering of all nodes, `None` if there is a cycle or an edge
    /// to an unknown node.
    pub fn topological_order(&self) -> Option<Vec<Node>> {
        let nodes = self.nodes();
        let index = self.node_index();
        let mut indegree = vec![0usize; nodes.len()];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
        for e in &self.edges {
            let (from, to) = (*index.get(&e.from)?, *index.get(&e.to)?);
            out[from].push(to);
            indegree[to] += 1;
        }
        let mut queue: VecDeque<usize> = (0..nodes.len()).filter(|i| indegree[*i] == 0).collect();
        let mut order = Vec::with_capacity(nodes.len());
        while let Some(i) = queue.pop_front() {
            order.push(nodes[i]);
            for &j in &out[i] {
                indegree[j] -= 1;
                if indegree[j] == 0 {
                    queue.push_back(j);
                }
            }
        }
        (order.len() == nodes.len()).then_some(order)
    }

    /// Checks every structural and functional invariant of a composition
    /// against `instance`.
    pub fn validate(&self, instance: &ProblemInstance) -> Result<(), DagViolation> {
        let index = self.node_index();
        if index.len() != self.services.len() + 2 {
            let mut seen = std::collections::HashSet::new();
            for s in &self.services {
                if !seen.insert(*s) {
                    return Err(DagViolation::DuplicateNode(
                        instance.service_name(*s).to_string(),
                    ));
                }
            }
        }
        for e in &self.edges {
            for n in [e.from, e.to] {
                if !index.contains_key(&n) {
                    return Err(DagViolation::DanglingEdge(n));
                }
            }
            if e.to == Node::Start || e.from == Node::End {
                return Err(DagViolation::BadTerminalEdge);
            }
        }
        if self.topological_order().is_none() {
            return Err(DagViolation::Cycle);
        }

        let name = |n: Node| match n {
            Node::Start => "start".to_string(),
            Node::End => "end".to_string(),
            Node::Service(s) => instance.service_name(s).to_string(),
        };
        let tax = instance.taxonomy();
        for e in &self.edges {
            for &c in &e.concepts {
                let ok = match e.from {
                    Node::Start => instance.start_provides(c),
                    Node::Service(s) => instance.can_provide(s, c),
                    Node::End => false,
                };
                if !ok {
                    return Err(DagViolation::UnjustifiedEdge {
                        from: name(e.from),
                        to: name(e.to),
                        concept: tax.name(c).to_string(),
                    });
                }
            }
        }
        let consumers = self
            .services
            .iter()
            .map(|s| (Node::Service(*s), instance.service(*s).inputs.as_slice()))
            .chain(std::iter::once((Node::End, instance.task().wanted.as_slice())));
        for (node, wanted) in consumers {
            for &c in wanted {
                let covered = self
                    .edges
                    .iter()
                    .any(|e| e.to == node && e.concepts.contains(&c));
                if !covered {
                    return Err(DagViolation::UnsatisfiedInput {
                        node: name(node),
                        concept: tax.name(c).to_string(),
                    });
                }
            }
        }

        let forward = self.reach(Node::Start, false);
        let backward = self.reach(Node::End, true);
        for n in self.nodes() {
            if !(forward.contains(&n) && backward.contains(&n)) {
                return Err(DagViolation::Unreachable(name(n)));
            }
        }
        Ok(())
    }

    fn reach(&self, from: Node, reverse: bool) -> std::collections::HashSet<Node> {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            for e in &self.edges {
                let (a, b) = if reverse { (e.to, e.from) } else { (e.from, e.to) };
                if a == n {
                    stack.push(b);
                }
            }
        }
        seen
    }

    /// Graphviz rendering with service names and concept labels.
    pub fn to_dot(&self, instance: &ProblemInstance) -> String {
        let label = |n: Node| match n {
            Node::Start => "start".to_string(),
            Node::End => "end".to_string(),
            Node::Service(s) => instance.service_name(s).to_string(),
        };
        let tax = instance.taxonomy();
        let mut out = String::from("digraph composition {\n  rankdir=LR;\n");
        out.push_str("  \"start\" [shape=circle];\n  \"end\" [shape=doublecircle];\n");
        for s in &self.services {
            let _ = writeln!(
                out,
                "  \"{}\" [shape=box, label=\"{}\\nT={:.4} C={:.4}\"];",
                label(Node::Service(*s)),
                label(Node::Service(*s)),
                instance.service_time(*s),
                instance.service_cost(*s)
            );
        }
        for e in &self.edges {
            let concepts: Vec<&str> = e.concepts.iter().map(|c| tax.name(*c)).collect();
            let _ = write!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}",
                label(e.from),
                label(e.to),
                concepts.join(",")
            );
            if let Some((a, b)) = e.between_services() {
                let _ = write!(out, " d={:.4}", instance.distance(a, b));
            }
            out.push_str("\"];\n");
        }
        out.push_str("}\n");
        out
    }
}
