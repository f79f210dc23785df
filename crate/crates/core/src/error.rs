use thiserror::Error;

/// Failures while reading or validating a trajectory document.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
}

impl TrajectoryError {
    /// Stable machine-readable code used by the CLI and HTTP service.
    pub fn code(&self) -> &'static str {
        match self {
            TrajectoryError::MalformedJson(_) => "malformed_json",
            TrajectoryError::SchemaViolation(_) => "schema_violation",
            TrajectoryError::InvariantViolation(_) => "invariant_violation",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("sample `{0}` has no label")]
    UnlabeledSample(String),
    #[error("class {class} has {count} samples, at least {min} required")]
    ClassTooSmall { class: u8, count: usize, min: usize },
    #[error("duplicate sample id `{0}`")]
    DuplicateId(String),
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    BadRatios((f64, f64, f64)),
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        #[source]
        source: TrajectoryError,
    },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("trajectory has {points} points, at least 10 required")]
    TooShort { points: usize },
    #[error("need at least 2 segments to resample, got {0}")]
    TooFewSegments(usize),
    #[error("zero-magnitude segment vector")]
    DegenerateVector,
    #[error("no samples to compute a standard length from")]
    EmptyInput,
    #[error("sample `{id}`: {source}")]
    Sample {
        id: String,
        #[source]
        source: Box<FeatureError>,
    },
}

impl FeatureError {
    pub fn code(&self) -> &'static str {
        match self {
            FeatureError::TooShort { .. } => "too_short",
            FeatureError::TooFewSegments(_) => "too_few_segments",
            FeatureError::DegenerateVector => "degenerate_vector",
            FeatureError::EmptyInput => "empty_input",
            FeatureError::Sample { source, .. } => source.code(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("input has {got} features per step, model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("empty input sequence")]
    EmptySequence,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("feature matrix shape {got:?} differs from {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("sample at position {0} has no label")]
    Unlabeled(usize),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("unsupported model format `{0}`")]
    UnsupportedVersion(String),
    #[error("model artifact is inconsistent: {0}")]
    Inconsistent(String),
    #[error("model JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("inputs have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 3 observations, got {0}")]
    TooFewObservations(usize),
    #[error("input has zero variance")]
    DegenerateVariance,
    #[error("p-value undefined for |r| = {0} >= 1")]
    DomainError(f64),
    #[error("sample `{0}` is missing the metadata required for this grouping")]
    MissingMetadata(String),
}
