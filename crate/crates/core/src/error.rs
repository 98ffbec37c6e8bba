use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("index {index} outside admissible range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("grid function length {got} does not match grid size {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("point {x} lies outside [{a}, {b}]")]
    OutsideDomain { x: f64, a: f64, b: f64 },

    #[error("operator returned non-finite value at p = {p}, v = {v}, x = {x}")]
    NonFinite { p: f64, v: f64, x: f64 },

    #[error("operator evaluation failed at interior node {node}: {source}")]
    AtNode {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid Lax-Friedrichs weights: {0}")]
    InvalidWeights(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("boundary values ({got_a}, {got_b}) do not match the boundary data ({u_a}, {u_b})")]
    BoundaryMismatch {
        u_a: f64,
        u_b: f64,
        got_a: f64,
        got_b: f64,
    },

    #[error("singular linear system: pivot {pivot:e} at row {row}")]
    Singular { row: usize, pivot: f64 },

    #[error("unknown problem '{0}' (expected example1..example5)")]
    UnknownProblem(String),

    #[error("problem has no {0} solution to measure errors against")]
    MissingReference(&'static str),

    #[error("empty control set")]
    EmptyControls,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
