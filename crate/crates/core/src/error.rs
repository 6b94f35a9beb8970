use thiserror::Error;

use crate::eigen::EigenResult;
use crate::estimate::ConvergenceHistory;
use crate::scalar::Real;
use crate::scf::{DiscreteState, ScfRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("mesh is not conforming: {0}")]
    Conformity(String),
    #[error("invalid geometry: {0}")]
    Geometry(String),
    #[error("refinement closure exceeded {bound} passes; refinement-edge tags are inconsistent")]
    Closure { bound: usize },
    #[error("element index {index} out of range for mesh with {len} elements")]
    ElementIndex { index: usize, len: usize },
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid problem: {0}")]
pub struct SpecError(pub String);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FemError {
    #[error("unsupported element degree {0}; expected 1 or 2")]
    Degree(usize),
    #[error("quadrature order {order} unsupported or too low for degree {degree}")]
    Quadrature { order: usize, degree: usize },
    #[error("space has {interior} interior DOFs but {required} are required; refine the initial mesh uniformly first")]
    SpaceTooSmall { interior: usize, required: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("weight is not finite at quadrature point ({x}, {y}) of element {element}")]
    WeightSingular { element: usize, x: f64, y: f64 },
    #[error("conjugate gradients did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    LinearSolve { iterations: usize, residual: f64 },
}

#[derive(Debug, Error)]
pub enum EigenError<T: Real> {
    #[error("eigensolver did not converge in {iterations} iterations (max residual {max_residual:.3e})")]
    NoConvergence {
        iterations: usize,
        max_residual: f64,
        best: Box<EigenResult<T>>,
    },
    #[error("operator error: {0}")]
    Operator(String),
    #[error("vectors are numerically rank deficient at column {column}")]
    Rank { column: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Error)]
pub enum ScfError<T: Real> {
    #[error("SCF did not converge in {iterations} outer iterations (last density residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Box<DiscreteState<T>>,
        history: Vec<ScfRecord<T>>,
    },
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Eigen(#[from] EigenError<T>),
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Error)]
pub enum AfemError<T: Real> {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("AFEM iteration {iteration} failed: {source}")]
    Solve {
        iteration: usize,
        history: Box<ConvergenceHistory<T>>,
        #[source]
        source: ScfError<T>,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyError {
    #[error("annihilator would exceed the term cap of {cap} (estimated {estimated} terms)")]
    Size { cap: usize, estimated: usize },
    #[error("dimension mismatch: polynomial has {expected} variables, point has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("logarithm argument is not positive ({value}) at sample point {point:?}")]
    Domain { value: f64, point: [f64; 3] },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
