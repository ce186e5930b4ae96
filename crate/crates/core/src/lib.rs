pub mod alignment;
pub mod background;
pub mod cli;
pub mod dbn;
pub mod encoding;
pub mod eods;
pub mod error;
pub mod oracles;
pub mod problem;
pub mod rule_learner;
pub mod rng;

pub use error::{Error, Result};
