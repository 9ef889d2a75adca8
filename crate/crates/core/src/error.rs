use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("duplicate hyperlink {0}")]
    DuplicateHyperlink(String),

    #[error("hyperlink {0} has fewer than two distinct nodes")]
    SingletonHyperlink(String),

    #[error("unknown node label `{0}`")]
    UnknownLabel(String),

    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },

    #[error("matrix is {rows}x{cols}, expected square")]
    NonSquareMatrix { rows: usize, cols: usize },

    #[error("loop enumeration too large: {0}")]
    EnumerationTooLarge(String),

    #[error("invalid loop cutoff {0}; must be at least 2")]
    InvalidTauMax(usize),

    #[error("training data needs both positive and negative labels")]
    DegenerateLabels,

    #[error("feature dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("Katz series diverges: damping {damping} * spectral radius {radius} >= 1")]
    DivergentSeries { damping: f64, radius: f64 },

    #[error("test count {requested} must be below hyperlink count {available}")]
    TestCountTooLarge { requested: usize, available: usize },

    #[error("negative sampler exhausted after {rejections} rejections ({accepted} of {requested} accepted)")]
    SamplerExhausted {
        rejections: usize,
        accepted: usize,
        requested: usize,
    },

    #[error("empty score list")]
    EmptyScoreList,

    #[error("cutoff {cutoff} exceeds ranked list of length {len}")]
    RankTooLarge { cutoff: usize, len: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
