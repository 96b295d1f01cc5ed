//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("index ({i}, {j}, {k}) out of bounds for mode sizes ({n1}, {n2}, {n3})")]
    IndexOutOfBounds {
        i: usize,
        j: usize,
        k: usize,
        n1: usize,
        n2: usize,
        n3: usize,
    },

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("singular coordinate map: {0}")]
    SingularMap(String),

    #[error("singular tridiagonal system: zero pivot at row {row}")]
    SingularSystem { row: usize },

    #[error("solution diverged at step {step} (t = {time}): {detail}")]
    Divergence {
        step: usize,
        time: f64,
        detail: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
