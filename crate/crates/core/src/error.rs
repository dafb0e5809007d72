use thiserror::Error;

/// Errors raised by mesh generation, quadrature, assembly, solving and the
/// experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh spacing h = {h} does not divide the side length {side} (ratio {ratio})")]
    NonCommensurate { h: f64, side: f64, ratio: f64 },
    #[error("unsupported quadrature order {n} for {family}")]
    UnsupportedRule { family: &'static str, n: usize },
    #[error("degenerate element {element}: jacobian determinant {det}")]
    DegenerateElement { element: usize, det: f64 },
    #[error("local basis index {index} out of range for {n} local functions")]
    BasisIndex { index: usize, n: usize },
    #[error("cannot split {elements} elements into {parts} partitions")]
    TooManyParts { elements: usize, parts: usize },
    #[error("conjugate gradient did not converge: {iterations} iterations, relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("non-positive curvature {curvature:e} at CG iteration {iteration}")]
    IndefiniteMatrix { iteration: usize, curvature: f64 },
    #[error("unknown {what}: {name}")]
    Unknown { what: &'static str, name: String },
    #[error("error with {n_parts} partitions differs from the first run by {relative:e} (relative)")]
    PartitionMismatch { n_parts: usize, relative: f64 },
    #[error("{0} row(s) did not settle within the escalation cap")]
    Unsettled(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
