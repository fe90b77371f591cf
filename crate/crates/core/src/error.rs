use thiserror::Error;

/// Everything that can go wrong across the toolkit, from input validation to
/// enumeration caps.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse probability {input:?}: {reason}")]
    ProbParse { input: String, reason: String },

    #[error("probability {value} lies outside [0,1]")]
    ProbRange { value: String },

    #[error("unknown vertex {0:?}")]
    UnknownVertex(String),

    #[error("duplicate vertex {0:?}")]
    DuplicateVertex(String),

    #[error("duplicate edge {u:?}-{v:?}")]
    DuplicateEdge { u: String, v: String },

    #[error("loop edge at vertex {0:?}")]
    LoopEdge(String),

    #[error("unknown edge {u:?}-{v:?}")]
    UnknownEdge { u: String, v: String },

    #[error("vertex weight for {0:?} is missing")]
    MissingVertexWeight(String),

    #[error("vertex weight entry {0:?} does not match any declared vertex")]
    StrayVertexWeight(String),

    #[error("graph JSON is malformed: {0}")]
    GraphJson(String),

    #[error("invalid class spec {spec:?}: {reason}")]
    ClassSpec { spec: String, reason: String },

    #[error("permutation is not a bijection on the vertex set: {0}")]
    NotABijection(String),

    #[error("the two vertices must be distinct, got {0:?} twice")]
    IdenticalPair(String),

    #[error("edge weight {weight} on {u:?}-{v:?} is outside the required domain [0,1)")]
    EdgeWeightNotBelowOne { u: String, v: String, weight: String },

    #[error(
        "enumeration over {free_edges} free edges needs {configurations} configurations, cap is {cap}"
    )]
    CapExceeded {
        free_edges: usize,
        cap: usize,
        configurations: String,
    },

    #[error("cluster index set has {clusters} clusters, assignment cap is {cap}")]
    AssignmentCapExceeded { clusters: usize, cap: usize },

    #[error("event pair {u:?},{v:?} appears in both must_connect and must_separate")]
    ContradictoryEvent { u: String, v: String },

    #[error("marked vertex {0:?} also appears inside the cluster partition")]
    MarkedInsidePartition(String),

    #[error(
        "attach probabilities break the required symmetry: cluster {cluster} has {lhs} vs {rhs}"
    )]
    SymmetryCollapse {
        cluster: usize,
        lhs: String,
        rhs: String,
    },

    #[error("hypothesis does not hold for the pair ({v:?}, {w:?}): {reason}")]
    HypothesisNotSatisfied { v: String, w: String, reason: String },

    #[error("internal identity check failed: {context} gave {lhs} vs {rhs}")]
    IdentityMismatch {
        context: String,
        lhs: String,
        rhs: String,
    },

    #[error("sample count must be at least 1")]
    NoSamples,

    #[error("{0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
