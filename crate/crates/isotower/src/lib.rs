//! Isogeny graphs of elliptic curves over finite fields with full level
//! structure, realized as derived graphs of voltage assignments.

pub mod arith;
pub mod cli;
pub mod error;
pub mod curve;
pub mod field;
pub mod isogeny;
pub mod matgroup;
pub mod par;
pub mod tower;
pub mod voltgraph;
pub mod volcano;

pub use error::{Error, Result};
