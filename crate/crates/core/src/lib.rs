pub mod baselines;
pub mod cli;
pub mod corpus;
pub mod decoder;
pub mod error;
pub mod genio;
pub mod metrics;
pub mod ontology;
pub mod promptgen;
pub mod seed;
pub mod splitter;
pub mod synthetic;

pub use error::{Error, Result};
