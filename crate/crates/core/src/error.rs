use thiserror::Error;

/// Errors raised by the mining and evaluation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertex {0} has no label in the partition")]
    UnlabeledVertex(u64),
    #[error("multicut has {got} entries but the graph has {expected} edges")]
    CutLengthMismatch { expected: usize, got: usize },
    #[error("multicut is infeasible: cut edge {0} joins vertices of the same component")]
    InfeasibleMulticut(usize),
    #[error("frame {frame} is not after the previously ingested frame {previous}")]
    OutOfOrderFrame { frame: u64, previous: u64 },
    #[error("point ({x}, {y}) of trajectory {id} lies outside the {width}x{height} image")]
    PointOutsideImage {
        id: u64,
        x: f64,
        y: f64,
        width: f64,
        height: f64,
    },
    #[error("invalid object box {id}: {reason}")]
    InvalidBox { id: u64, reason: String },
    #[error("trajectory {0} was retired and cannot be extended")]
    RetiredTrajectory(u64),
    #[error("trajectory {id} updated twice in frame {frame}")]
    DuplicateUpdate { id: u64, frame: u64 },
    #[error("cannot compute a bias from an empty weight set")]
    EmptyWeights,
    #[error("bias fraction {0} is outside (0, 1]")]
    BadFraction(f64),
    #[error("exact solver refuses graphs with {0} vertices (limit is {limit})", limit = crate::multicut::EXACT_VERTEX_LIMIT)]
    TooLargeForExact(usize),
    #[error("no pose recorded for frame {0}")]
    MissingPose(u64),
    #[error("class {0} has no training descriptors")]
    EmptyClass(u64),
    #[error("class token {token} is out of range for {classes} classes")]
    TokenOutOfRange { token: u64, classes: u64 },
    #[error("descriptor has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("graph invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
