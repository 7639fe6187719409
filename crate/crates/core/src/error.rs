use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid gas parameters: {0}")]
    InvalidParams(String),
    #[error("negative density {0}")]
    NegativeDensity(f64),
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("inverted invariants: w = {w} < z = {z}")]
    InvertedInvariants { z: f64, w: f64 },
    #[error("{what}: root not found (bracket [{lo}, {hi}], {iterations} iterations)")]
    RootNotFound {
        what: &'static str,
        lo: f64,
        hi: f64,
        iterations: usize,
    },
    #[error("CFL violated at step {step}, x = {x}: wave speed {speed} exceeds dx/dt = {limit}")]
    Cfl {
        step: usize,
        x: f64,
        speed: f64,
        limit: f64,
    },
    #[error("cell construction failed at x = {x} (left {left:?}, right {right:?}): {reason}")]
    Construction {
        x: f64,
        left: (f64, f64),
        right: (f64, f64),
        reason: String,
    },
    #[error("invalid initial data: {0}")]
    InitialData(String),
    #[error("invalid mesh configuration: {0}")]
    Mesh(String),
    #[error("unknown claim `{0}`")]
    UnknownClaim(String),
    #[error("output failed: {0}")]
    Output(String),
}

pub type Result<T> = std::result::Result<T, Error>;
