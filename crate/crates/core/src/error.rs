use std::path::PathBuf;

use crate::net_model::DataType;

/// Errors produced anywhere in the planning / mapping / simulation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid layer `{layer}`: {reason}")]
    InvalidLayer { layer: String, reason: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid tiling: {0}")]
    InvalidTiling(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("layer `{layer}` is infeasible: {reason}")]
    Infeasible { layer: String, reason: String },

    #[error("DRAM region for layer {layer} {data} overflowed ({requested} words requested, {remaining} left)")]
    RegionOverflow {
        layer: usize,
        data: DataType,
        requested: u64,
        remaining: u64,
    },

    #[error("DRAM capacity exceeded: layer {layer} needs {needed} words, device holds {capacity}")]
    CapacityExceeded { layer: usize, needed: u64, capacity: u64 },

    #[error("SRAM buffer overflow: {words} words exceed capacity of {capacity}")]
    BufferOverflow { words: u64, capacity: u64 },

    #[error("address out of range: {0}")]
    AddressOutOfRange(String),

    #[error("trace parse error on line {line}: {reason}")]
    TraceParse { line: usize, reason: String },

    #[error("cannot read `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },

    #[error("cannot parse `{path}`: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
