//! Exactness-aware convex relaxations for verifying ReLU networks.
//!
//! A network's forward pass is lifted into a bordered moment matrix whose
//! completely positive relaxation is exact; the tractable doubly
//! non-negative (0-SOS) relaxation is solved with a first-order conic
//! solver and compared with an exhaustive activation-pattern oracle.

pub mod error;
pub mod formulations;
pub mod harness;
pub mod lifting;
pub mod network;
pub mod oracle;
pub mod recovery;
pub mod solver;

pub use error::{Error, Result};
