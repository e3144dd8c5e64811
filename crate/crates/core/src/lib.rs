pub mod checks;
pub mod error;
pub mod harness;
pub mod mrs;
pub mod norms;
pub mod operators;
pub mod orthopoly;
pub mod quad;
pub mod weights;

pub use error::{Error, Result};
