//! Error vocabulary shared by the engine modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("curved complex: d^2 != 0 at degree {degree}, weight {weight}")]
    CurvedComplex { degree: i64, weight: i64 },
    #[error("not a chain map: fails to commute at degree {degree}, weight {weight}")]
    NotChainMap { degree: i64, weight: i64 },
    #[error("hom complex would be infinite; supply a (degree, weight) window")]
    WindowRequired,
    #[error("component index {index} outside the working window |i| <= {window}")]
    OutOfWindow { index: i64, window: i64 },
    #[error("curvature mismatch on cell {cell}: {detail}")]
    CurvatureMismatch { cell: String, detail: String },
    #[error("no graph equation applies to chart pair ({i}, {j}); subscheme empty")]
    EmptyChart { i: i64, j: i64 },
    #[error("rewriting system not confluent: critical pair {pair} has distinct normal forms")]
    RewritingNotConfluent { pair: String },
    #[error("S3 symmetry failure for {perm}: equation {witness} not matched")]
    SymmetryFailure { perm: String, witness: String },
    #[error("exactness failure in {sequence} at position {position}, degree {degree}")]
    ExactnessFailure {
        sequence: String,
        position: usize,
        degree: i64,
    },
    #[error("cochain is not closed: {detail}")]
    NotClosed { detail: String },
    #[error("cocycle failure on overlap {overlap}: {detail}")]
    CocycleFailure { overlap: String, detail: String },
    #[error("structure constants not associative at basis triple ({i}, {j}, {k})")]
    NotAssociative { i: usize, j: usize, k: usize },
    #[error("matrix is not an algebra automorphism: {detail}")]
    NotAutomorphism { detail: String },
    #[error("dual module not verified free: {detail}")]
    NotFreeWitness { detail: String },
    #[error("q-torsion test inconclusive at exponent bound {bound}")]
    BoundExhausted { bound: usize },
    #[error("ideal generator is not weight-homogeneous: {witness}")]
    NotInvariant { witness: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, EngineError>;
