//! Spatio-temporal convolution blocks for video clips that never
//! materialize a tensor above rank 4.
//!
//! A video clip is logically `[B, T, X, Y, C]` (batch, frames, width,
//! height, channels), but every block here works on the batch-time fold
//! `[B*T, X, Y, C]` and its pixel fold `[B, T, X*Y, C]`, combining 2D
//! convolutions and reshapes so that spatial and temporal processing
//! need no rank-5 storage. A direct rank-5 3D convolution is kept as the
//! reference implementation; the [`verify`] module proves the folds
//! agree with it wherever the factorization is mathematically exact,
//! and [`net`]/[`mod@bench`] reproduce whole-network parameter, FLOP,
//! and speed comparisons.
//!
//! Start with the runnable examples (`cargo run --example quickstart`)
//! or the `flatconv` binary (`flatconv verify`, `flatconv count`,
//! `flatconv bench`, `flatconv table`).

pub mod bench;
pub mod block;
pub mod cli;
pub mod conv;
pub mod error;
pub mod net;
pub mod tensor;
pub mod verify;

pub use block::{Block, BlockConfig, BlockVariant};
pub use conv::{conv1d, conv2d, conv3d, out_extent, KernelSpec, WeightTensor};
pub use error::{Error, Result};
pub use net::{Eco3dNet, NetPlan, NetSpec};
pub use tensor::{fill_random, track_max_rank, RankTracker, SplitMix64, Tensor, VideoShape};
