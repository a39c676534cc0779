pub mod cli;
pub mod data;
pub mod error;
pub mod harness;
pub mod levy;
pub mod linalg;
pub mod oracle;
pub mod payoff;
pub mod rfn;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
