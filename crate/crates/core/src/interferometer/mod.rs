//! Pulse sequences, protocols and sensitivity estimates.

mod protocol;
pub mod pulse;
mod sensitivity;

pub use protocol::*;
pub use pulse::*;
pub use sensitivity::*;
