// NaN-rejecting range checks are written as `!(x > 0.0)` on purpose; index loops are kept
// where several arrays are walked together.
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::too_many_arguments,
    clippy::type_complexity
)]

pub mod config;
pub mod error;
pub mod figures;
pub mod gpe;
pub mod grid;
pub mod interferometer;
pub mod numerics;
pub mod oat;
pub mod orchestrator;
pub mod params;
pub mod scenario;
pub mod spin;
pub mod state;
pub mod tw;

pub use error::{Error, Result};
