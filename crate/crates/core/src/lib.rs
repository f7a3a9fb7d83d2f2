//! Information-theoretic tools for lossy transmission of correlated sources
//! over discrete memoryless two-way channels.

pub mod converse;
pub mod error;
pub mod hybrid;
pub mod models;
pub mod prob;
pub mod random;
pub mod rd;
pub mod region;
pub mod simulate;
pub mod twc;

pub use error::{Error, Result};
