//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: rows={d1}, cols={d2} (need rows >= cols >= 1)")]
    InvalidDimensions { d1: usize, d2: usize },

    #[error("row {row} has zero (or non-finite) norm")]
    ZeroRow { row: usize },

    #[error("system is inconsistent: max |A x* - b| = {residual:.3e} exceeds tolerance")]
    InconsistentSystem { residual: f64 },

    #[error("csv parse failure at row {row}, column {col}: {msg}")]
    CsvParse { row: usize, col: usize, msg: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("category fraction {num}/{den} of {n_r} workers is not an integer count")]
    NonIntegralCategory { num: u64, den: u64, n_r: u64 },

    #[error("adversary config invalid: {0}")]
    BadAdversary(String),

    #[error("sample of {requested} rows requested from {available}")]
    NotEnoughRows { requested: usize, available: usize },

    #[error("row {row}: worker pool exhausted ({unblocked} unblocked, {requested} requested)")]
    PoolExhausted { row: usize, unblocked: usize, requested: usize },

    #[error("contraction factor alpha = {alpha} is outside (0, 1); bound undefined")]
    AlphaOutOfRange { alpha: f64 },

    #[error("unknown reference table id `{0}`")]
    UnknownTable(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("toml: {0}")]
    Toml(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
