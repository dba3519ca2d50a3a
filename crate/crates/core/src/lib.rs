//! Gene Ontology annotation evolution analysis and negative example selection.

pub mod analysis;
pub mod annotations;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod ontology;
pub mod pipeline;
pub mod rng;
pub mod selection;
pub mod similarity;
pub mod stats;
pub mod synthetic;

pub use error::{Error, Result};
