//! Error type shared by the whole crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    /// Reshape target does not preserve the element count.
    #[error(
        "cannot reshape {from:?} ({from_elements} elements) into {to:?} ({to_elements} elements)"
    )]
    ShapeMismatch {
        from: Vec<usize>,
        to: Vec<usize>,
        from_elements: usize,
        to_elements: usize,
    },

    /// Flat data length does not match the declared shape.
    #[error("shape {shape:?} implies {expected} elements, data has {got}")]
    DataLenMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },

    /// Tensor rank outside the supported 1..=5 range.
    #[error("rank {rank} is outside the supported range 1..=5")]
    RankOutOfRange { rank: usize },

    /// An operation received a tensor of the wrong rank.
    #[error("{op} expects rank {expected}, got rank {got}")]
    RankExpected {
        op: &'static str,
        expected: usize,
        got: usize,
    },

    /// Kernel channel span does not match the input channel count.
    #[error("channel mismatch: input has {input} channels, kernel spans {kernel}")]
    ChannelMismatch { input: usize, kernel: usize },

    /// Convolved kernel extents must be odd for symmetric zero padding.
    #[error("kernel extent {extent} is even; only odd extents are supported")]
    EvenKernelExtent { extent: usize },

    /// Strided geometry that would silently truncate is rejected instead.
    #[error("{axis} extent {extent} is not divisible by stride {stride}")]
    IndivisibleExtent {
        axis: &'static str,
        extent: usize,
        stride: usize,
    },

    /// Invalid configuration or argument value.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            detail: detail.into(),
        }
    }
}
