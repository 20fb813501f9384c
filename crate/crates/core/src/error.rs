use thiserror::Error;

/// Every failure the engine can report.
///
/// Variant names double as the stable machine-readable error codes emitted
/// by the CLI (see [`Error::code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} is outside [0, 1] or not finite ({context})")]
    RangeViolation { context: String, value: f64 },

    #[error("ordering violated: {0}")]
    OrderingViolation(String),

    #[error("cannot aggregate an empty multiset")]
    EmptyMultiset,

    #[error("no evidence to aggregate")]
    EmptyEvidence,

    #[error("scope parse error at byte {offset}: {reason}")]
    Parse { offset: usize, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("illegal transition: {event} from {phase}")]
    IllegalTransition { phase: String, event: String },

    #[error("cannot promote {claim} from {from} to {to}: layers may not be skipped")]
    LayerSkip {
        claim: String,
        from: String,
        to: String,
    },

    #[error("actor {actor} proposed {claim} and cannot verify it")]
    SelfVerification { claim: String, actor: String },

    #[error("actor {actor} proposed {claim} and cannot ratify it")]
    SelfRatification { claim: String, actor: String },

    #[error("actor {actor} is a generator and cannot ratify {claim}")]
    GeneratorRatifier { claim: String, actor: String },

    #[error("{claim} contradicts validated claim {validated}")]
    ContradictsValidated { claim: String, validated: String },

    #[error("{claim} has no qualifying evidence for corroboration")]
    InsufficientEvidence { claim: String },

    #[error("{claim} is at {layer}, ratification needs L2")]
    NotCorroborated { claim: String, layer: String },

    #[error("{claim} has no promotion history")]
    EmptyHistory { claim: String },

    #[error("decision {claim} has an invalid scope or validity window: {reason}")]
    InvalidDecision { claim: String, reason: String },

    #[error("dependency {from} -> {to} would close a cycle")]
    CycleDetected { from: String, to: String },

    #[error("unknown {kind} {id}")]
    MissingRef { kind: &'static str, id: String },

    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("line {line}: {reason}")]
    Persistence { line: usize, reason: String },

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::RangeViolation { .. } => "RangeViolation",
            Error::OrderingViolation(_) => "OrderingViolation",
            Error::EmptyMultiset => "EmptyMultiset",
            Error::EmptyEvidence => "EmptyEvidence",
            Error::Parse { .. } => "ParseError",
            Error::Config(_) => "ConfigError",
            Error::IllegalTransition { .. } => "IllegalTransition",
            Error::LayerSkip { .. } => "LayerSkip",
            Error::SelfVerification { .. } => "SelfVerification",
            Error::SelfRatification { .. } => "SelfRatification",
            Error::GeneratorRatifier { .. } => "GeneratorRatifier",
            Error::ContradictsValidated { .. } => "ContradictsValidated",
            Error::InsufficientEvidence { .. } => "InsufficientEvidence",
            Error::NotCorroborated { .. } => "NotCorroborated",
            Error::EmptyHistory { .. } => "EmptyHistory",
            Error::InvalidDecision { .. } => "InvalidDecision",
            Error::CycleDetected { .. } => "CycleDetected",
            Error::MissingRef { .. } => "MissingRef",
            Error::DuplicateId { .. } => "DuplicateId",
            Error::Invalid(_) => "InvalidInput",
            Error::Persistence { .. } => "PersistenceError",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn range(context: impl Into<String>, value: f64) -> Self {
        Error::RangeViolation {
            context: context.into(),
            value,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
