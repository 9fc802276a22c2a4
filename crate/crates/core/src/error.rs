use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible load constraints: {0}")]
    Infeasible(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid tuple set: reviewers {reviewers:?} violate the one-decision-per-reviewer rule")]
    InvalidTupleSet { reviewers: Vec<usize> },

    #[error("design matrix is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient { rank: usize, columns: usize },

    #[error("logistic fit diverged: |coefficient {index}| exceeded {bound} (separation)")]
    Separation { index: usize, bound: f64 },

    #[error("fit did not converge after {iterations} iterations (score norm {score_norm:e})")]
    NonConvergence { iterations: usize, score_norm: f64 },

    #[error("coefficient index {index} out of range for {len} coefficients")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("zero or non-finite standard error for coefficient {0}")]
    ZeroStandardError(usize),

    #[error("random assignment sampler exceeded {0} rejections")]
    RejectionCapExceeded(usize),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid scenario configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
