pub mod cli;
pub mod corpus;
mod error;
pub mod labeling;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod training;

pub use error::{Error, Result};
