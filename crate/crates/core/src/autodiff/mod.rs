//! Reverse-mode differentiation over dense `f64` matrices, with exactly the
//! operators the message-passing model needs, Adam, and a central-difference
//! gradient checker.

mod check;
mod params;
mod tape;
mod tensor;

use thiserror::Error;

pub use check::{gradient_check, GradCheck, GradCheckReport};
pub use params::{AdamConfig, AdamState, BnState, ParamStore};
pub use tape::{BnMode, Gradients, SegmentIndex, Tape, Var, BN_EPS, BN_MOMENTUM};
pub use tensor::Tensor;

#[derive(Debug, Error, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: shape mismatch between {}x{} and {}x{}", left.0, left.1, right.0, right.1)]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("{len} values do not fill a {}x{} tensor", shape.0, shape.1)]
    BadData { shape: (usize, usize), len: usize },
    #[error("index {index} out of range for {bound} rows")]
    IndexOutOfRange { index: usize, bound: usize },
    #[error("batch norm needs at least two rows in train mode")]
    SingleRowTrainBatch,
    #[error("loss must be 1x1, got {}x{}", .0.0, .0.1)]
    NonScalarLoss((usize, usize)),
    #[error("no gradient for parameter {0}")]
    MissingGradient(String),
    #[error("unknown parameter {0}")]
    UnknownParam(String),
    #[error("parameter {0} already exists")]
    DuplicateParam(String),
}

impl AutodiffError {
    pub(crate) fn shape(op: &'static str, a: &Tensor, b: &Tensor) -> Self {
        AutodiffError::ShapeMismatch {
            op,
            left: a.shape(),
            right: b.shape(),
        }
    }
}

pub type Result<T> = std::result::Result<T, AutodiffError>;
