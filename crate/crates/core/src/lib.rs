pub mod baseline;
pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod prediction;
pub mod repr;
pub mod synth;

pub use error::{Error, Result};
