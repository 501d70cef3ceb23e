use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("insufficient samples in class {class}: need {needed}, have {available}")]
    InsufficientSamples {
        class: usize,
        needed: usize,
        available: usize,
    },

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid alpha {0}: Beta parameter must be > 0")]
    InvalidAlpha(f64),

    #[error("{0} pairing requires a neighbor index built over the training set")]
    MissingIndex(&'static str),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("soft-label row {row} sums to {sum}, expected 1")]
    NonNormalizedLabels { row: usize, sum: f64 },

    #[error("LDAM loss requires hard labels; row {0} is a soft label")]
    SoftLabels(usize),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("class {0} has no examples")]
    EmptyClass(usize),

    #[error("degenerate majority/minority split: {0}")]
    DegenerateSplit(String),

    #[error("spearman correlation undefined: {0}")]
    ConstantInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
