pub mod error;
pub mod linalg;
pub mod mesh;
pub mod output;
pub mod profiles;
pub mod solver;
pub mod stability;
pub mod cli;
pub mod config;
pub mod conformance;
pub mod curve;
pub mod diagnostics;

pub use error::{Error, Result};
