use thiserror::Error;

/// Errors raised anywhere in the laboratory.
///
/// The variants split into model/validation problems (bad structural model,
/// bad dataset, bad configuration) and estimation problems (singular
/// designs, empty arms). [`LabError::is_validation`] tells them apart, which
/// the CLI uses to choose its exit code.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("node `{node}` references unknown parent `{parent}`")]
    UnknownParent { node: String, parent: String },
    #[error("cycle detected among nodes: {0:?}")]
    Cycle(Vec<String>),
    #[error("node `{node}`: {reason}")]
    KindMismatch { node: String, reason: String },
    #[error("rescale entry names unknown node `{0}`")]
    UnknownRescale(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("standardizing `{node}` needs negative noise variance {variance:.6}")]
    InfeasibleStandardization { node: String, variance: f64 },
    #[error("ground truth needs {0}")]
    GroundTruth(String),

    #[error("dataset is missing column `{0}`")]
    MissingColumn(String),
    #[error("column `{name}` has {got} rows, expected {expected}")]
    RaggedColumn {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("column `{name}` row {row} is not finite")]
    NonFinite { name: String, row: usize },
    #[error("dataset must have at least one row")]
    EmptyDataset,
    #[error("dataset is already in natural units")]
    AlreadyNatural,
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("singular design: term `{term}` is collinear with the others (positivity violation?)")]
    SingularDesign { term: String },
    #[error("need more observations ({n}) than terms ({terms})")]
    TooFewObservations { n: usize, terms: usize },
    #[error("exposure arm `{0}` has no rows")]
    EmptyArm(&'static str),
    #[error("`{0}` has zero variance")]
    ZeroVariance(String),
    #[error("group `{group}` has {n} points, need at least {min}")]
    SmallGroup {
        group: &'static str,
        n: usize,
        min: usize,
    },
    #[error("no estimates to summarize")]
    EmptySummary,
    #[error("unknown approach `{0}`")]
    UnknownApproach(String),
    #[error("replication {rep}: {source}")]
    Replication {
        rep: usize,
        #[source]
        source: Box<LabError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl LabError {
    /// True for errors caused by invalid models, inputs or configuration
    /// rather than by an estimator failing on otherwise valid data.
    pub fn is_validation(&self) -> bool {
        match self {
            LabError::DuplicateNode(_)
            | LabError::UnknownParent { .. }
            | LabError::Cycle(_)
            | LabError::KindMismatch { .. }
            | LabError::UnknownRescale(_)
            | LabError::UnknownNode(_)
            | LabError::InfeasibleStandardization { .. }
            | LabError::GroundTruth(_)
            | LabError::MissingColumn(_)
            | LabError::RaggedColumn { .. }
            | LabError::NonFinite { .. }
            | LabError::EmptyDataset
            | LabError::AlreadyNatural
            | LabError::Config(_)
            | LabError::UnknownApproach(_)
            | LabError::Io(_)
            | LabError::Json(_)
            | LabError::Csv(_) => true,
            LabError::Replication { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
