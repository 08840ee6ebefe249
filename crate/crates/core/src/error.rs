use thiserror::Error;

pub type Result<T, E = DwscError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DwscError {
    #[error("unknown concept: {0}")]
    UnknownConcept(String),

    #[error("unknown instance: {0}")]
    UnknownInstance(String),

    #[error("unknown service: {0}")]
    UnknownService(String),

    #[error("unknown data item: {0}")]
    UnknownDataItem(String),

    #[error("duplicate id: {0}")]
    DuplicateId(String),

    #[error("taxonomy contains a cycle through concept {0}")]
    TaxonomyCycle(String),

    #[error("empty repository")]
    EmptyRepository,

    #[error("missing QoS attributes for services: {}", .0.join(", "))]
    MissingQos(Vec<String>),

    #[error("missing bandwidth between {0} and {1}")]
    MissingBandwidth(String, String),

    #[error("not enough coordinates: need {needed}, found {found}")]
    NotEnoughCoordinates { needed: usize, found: usize },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("instance is infeasible: task outputs are not reachable from task inputs")]
    Infeasible,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Xml(#[from] roxmltree::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DwscError {
    /// Errors that come from malformed input documents rather than from the
    /// problem itself.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            DwscError::UnknownConcept(_)
                | DwscError::UnknownInstance(_)
                | DwscError::UnknownService(_)
                | DwscError::UnknownDataItem(_)
                | DwscError::DuplicateId(_)
                | DwscError::TaxonomyCycle(_)
                | DwscError::EmptyRepository
                | DwscError::MissingQos(_)
                | DwscError::MissingBandwidth(..)
                | DwscError::NotEnoughCoordinates { .. }
                | DwscError::InvalidInstance(_)
                | DwscError::Parse(_)
                | DwscError::Xml(_)
                | DwscError::Json(_)
        )
    }
}
