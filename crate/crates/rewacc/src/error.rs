use thiserror::Error;

/// Crate-wide error type. Variants carry enough context to name the
/// offending layer or file in diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("model_ir: {0}")]
    Model(String),

    #[error("model_ir: parse failure: {0}")]
    Parse(String),

    #[error("model_ir: shape mismatch at layer {layer}: {reason}")]
    ShapeMismatch { layer: usize, reason: String },

    #[error("model_ir: missing weight blob: {0}")]
    MissingWeights(String),

    #[error("quantizer: {0}")]
    Quant(String),

    #[error("quantizer: 2:4 group at row {row}, group {group} has {nonzeros} nonzeros (max 2)")]
    GroupNonzeros {
        row: usize,
        group: usize,
        nonzeros: usize,
    },

    #[error("hardener: {0}")]
    Harden(String),

    #[error("simulator: {0}")]
    Sim(String),

    #[error("npu_model: {0}")]
    Npu(String),

    #[error("cost_models: {0}")]
    Cost(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
