//! Self-contained JSON instance bundle: repository, taxonomy, task and
//! network augmentation in one archivable file.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DwscError, Result};
use crate::model::{
    DataId, DataItem, Entity, EvalOptions, InstanceParts, Link, MatchMode, NetworkModel, Point,
    ProblemInstance, Service, ServiceId, Task, Taxonomy, Weights,
};

pub const SCHEMA: &str = "dwsc-instance/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptRecord {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceRecord {
    pub id: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub proc_time: f64,
    pub service_cost: f64,
    pub location: Point,
    #[serde(default)]
    pub data_items: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataItemRecord {
    pub id: String,
    pub provision_cost: f64,
    pub size: f64,
    pub access_latency: f64,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub provided: Vec<String>,
    pub wanted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityRef {
    Service(String),
    Data(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub a: EntityRef,
    pub b: EntityRef,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    #[serde(default = "one")]
    pub propagation_factor: f64,
    #[serde(default = "one")]
    pub comm_cost_factor: f64,
    #[serde(default)]
    pub links: Vec<LinkRecord>,
}

fn one() -> f64 {
    1.0
}

impl Default for NetworkRecord {
    fn default() -> Self {
        NetworkRecord {
            propagation_factor: 1.0,
            comm_cost_factor: 1.0,
            links: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceBundle {
    pub schema: String,
    #[serde(default)]
    pub matching: MatchMode,
    #[serde(default)]
    pub weights: Weights,
    pub concepts: Vec<ConceptRecord>,
    pub services: Vec<ServiceRecord>,
    #[serde(default)]
    pub data_items: Vec<DataItemRecord>,
    pub task: TaskRecord,
    #[serde(default)]
    pub network: NetworkRecord,
    /// Parameters that produced the network augmentation, kept for the record.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<serde_json::Value>,
}

impl InstanceBundle {
    pub fn from_json(text: &str) -> Result<Self> {
        let bundle: InstanceBundle = serde_json::from_str(text)?;
        if bundle.schema != SCHEMA {
            return Err(DwscError::Parse(format!(
                "unsupported schema {:?}, expected {SCHEMA:?}",
                bundle.schema
            )));
        }
        Ok(bundle)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        InstanceBundle::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Resolves string ids and builds the instance.
    pub fn to_parts(&self) -> Result<InstanceParts> {
        let taxonomy = Taxonomy::new(
            self.concepts
                .iter()
                .map(|c| (c.id.clone(), c.parent.clone())),
        )?;
        let mut data_index = HashMap::with_capacity(self.data_items.len());
        for (i, d) in self.data_items.iter().enumerate() {
            if data_index.insert(d.id.as_str(), DataId(i as u32)).is_some() {
                return Err(DwscError::DuplicateId(d.id.clone()));
            }
        }
        let mut service_index = HashMap::with_capacity(self.services.len());
        for (i, s) in self.services.iter().enumerate() {
            if service_index.insert(s.id.as_str(), ServiceId(i as u32)).is_some() {
                return Err(DwscError::DuplicateId(s.id.clone()));
            }
        }
        let concepts = |names: &[String]| -> Result<Vec<_>> {
            names.iter().map(|n| taxonomy.require(n)).collect()
        };

        let mut services = Vec::with_capacity(self.services.len());
        for s in &self.services {
            let data_items = s
                .data_items
                .iter()
                .map(|d| {
                    data_index
                        .get(d.as_str())
                        .copied()
                        .ok_or_else(|| DwscError::UnknownDataItem(d.clone()))
                })
                .collect::<Result<_>>()?;
            services.push(Service {
                id: s.id.clone(),
                inputs: concepts(&s.inputs)?,
                outputs: concepts(&s.outputs)?,
                proc_time: s.proc_time,
                service_cost: s.service_cost,
                data_items,
                location: s.location,
            });
        }
        let data_items: Vec<DataItem> = self
            .data_items
            .iter()
            .map(|d| DataItem {
                id: d.id.clone(),
                provision_cost: d.provision_cost,
                size: d.size,
                location: d.location,
                access_latency: d.access_latency,
            })
            .collect();
        let task = Task {
            provided: concepts(&self.task.provided)?,
            wanted: concepts(&self.task.wanted)?,
        };

        let resolve = |r: &EntityRef| -> Result<Entity> {
            match r {
                EntityRef::Service(id) => service_index
                    .get(id.as_str())
                    .map(|s| Entity::Service(*s))
                    .ok_or_else(|| DwscError::UnknownService(id.clone())),
                EntityRef::Data(id) => data_index
                    .get(id.as_str())
                    .map(|d| Entity::Data(*d))
                    .ok_or_else(|| DwscError::UnknownDataItem(id.clone())),
            }
        };
        let links = self
            .network
            .links
            .iter()
            .map(|l| {
                Ok(Link {
                    a: resolve(&l.a)?,
                    b: resolve(&l.b)?,
                    bandwidth: l.bandwidth,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let locations: Vec<Point> = services
            .iter()
            .map(|s| s.location)
            .chain(data_items.iter().map(|d| d.location))
            .collect();
        let network = NetworkModel::new(
            &locations,
            links,
            self.network.propagation_factor,
            self.network.comm_cost_factor,
        )?;
        let weights = Weights::new(self.weights.time, self.weights.cost)?;
        Ok(InstanceParts {
            taxonomy,
            matching: self.matching,
            services,
            data_items,
            task,
            network,
            weights,
        })
    }

    pub fn to_instance(&self, options: EvalOptions) -> Result<ProblemInstance> {
        ProblemInstance::new(self.to_parts()?, options)
    }

    pub fn from_parts(parts: &InstanceParts) -> Self {
        let tax = &parts.taxonomy;
        let names = |ids: &[crate::model::ConceptId]| -> Vec<String> {
            ids.iter().map(|c| tax.name(*c).to_string()).collect()
        };
        let entity = |e: Entity| match e {
            Entity::Service(s) => EntityRef::Service(parts.services[s.index()].id.clone()),
            Entity::Data(d) => EntityRef::Data(parts.data_items[d.index()].id.clone()),
        };
        InstanceBundle {
            schema: SCHEMA.to_string(),
            matching: parts.matching,
            weights: parts.weights,
            concepts: tax
                .iter()
                .map(|(_, name, parent)| ConceptRecord {
                    id: name.to_string(),
                    parent: parent.map(|p| tax.name(p).to_string()),
                })
                .collect(),
            services: parts
                .services
                .iter()
                .map(|s| ServiceRecord {
                    id: s.id.clone(),
                    inputs: names(&s.inputs),
                    outputs: names(&s.outputs),
                    proc_time: s.proc_time,
                    service_cost: s.service_cost,
                    location: s.location,
                    data_items: s
                        .data_items
                        .iter()
                        .map(|d| parts.data_items[d.index()].id.clone())
                        .collect(),
                })
                .collect(),
            data_items: parts
                .data_items
                .iter()
                .map(|d| DataItemRecord {
                    id: d.id.clone(),
                    provision_cost: d.provision_cost,
                    size: d.size,
                    access_latency: d.access_latency,
                    location: d.location,
                })
                .collect(),
            task: TaskRecord {
                provided: names(&parts.task.provided),
                wanted: names(&parts.task.wanted),
            },
            network: NetworkRecord {
                propagation_factor: parts.network.propagation_factor,
                comm_cost_factor: parts.network.comm_cost_factor,
                links: parts
                    .network
                    .links()
                    .iter()
                    .map(|l| LinkRecord {
                        a: entity(l.a),
                        b: entity(l.b),
                        bandwidth: l.bandwidth,
                    })
                    .collect(),
            },
            augmentation: None,
        }
    }

    /// SHA-256 of the compact JSON serialization, hex encoded. The
    /// augmentation record is provenance only and is left out.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let content = InstanceBundle {
            augmentation: None,
            ..self.clone()
        };
        let bytes = serde_json::to_vec(&content).expect("bundle serializes");
        Sha256::digest(bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
