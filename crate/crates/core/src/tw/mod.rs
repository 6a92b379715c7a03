//! Truncated-Wigner ensembles.

pub mod checkpoint;
mod ensemble;
mod estimate;
pub mod scaling;

pub use ensemble::*;
pub use estimate::*;
pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use scaling::{g1d_of_t, integrate_scaling, ScalingSeries, ScalingState};
