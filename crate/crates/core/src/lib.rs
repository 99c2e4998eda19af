pub mod cli;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod explain;
pub mod metrics;
pub mod models;
pub mod neural;

pub use error::{Error, Result};
