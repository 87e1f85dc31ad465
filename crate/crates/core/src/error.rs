use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("logit at index {index} is not finite ({value})")]
    NonFiniteLogit { index: usize, value: f64 },

    #[error("not a probability distribution: {0}")]
    NotADistribution(String),

    #[error("hyperparameter {name}={value} out of range: {expected}")]
    HyperparamOutOfRange {
        name: &'static str,
        value: f64,
        expected: String,
    },

    #[error("target entropy {target} nats is outside the attainable open range ({min}, {max})")]
    EntropyUnreachable { target: f64, min: f64, max: f64 },

    #[error("temperature solver did not converge after {iterations} iterations (gap {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("input distribution is uniform on its support; entropy does not depend on temperature")]
    UniformInput,

    #[error("cannot train a language model on an empty corpus")]
    EmptyCorpus,

    #[error("language model is empty")]
    EmptyModel,

    #[error("token id {0} is outside the vocabulary")]
    UnknownToken(u32),

    #[error("no replay record for context {0:?}")]
    ReplayMiss(Vec<u32>),

    #[error("could not produce a completion of length {min_len}..={max_len} within {attempts} attempts")]
    RetryExhausted {
        attempts: usize,
        min_len: usize,
        max_len: usize,
    },

    #[error("unsupported or corrupt model file: {0}")]
    FormatVersionMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("no {0}-grams in batch")]
    NoNgrams(usize),

    #[error("invalid transform spec {input:?}: {reason}")]
    SpecParse { input: String, reason: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed data: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, expected: impl Into<String>) -> Self {
        Error::HyperparamOutOfRange {
            name,
            value,
            expected: expected.into(),
        }
    }
}
