pub mod bench;
pub mod cli;
pub mod engine;
pub mod error;
pub mod fixture;
pub mod io;
pub mod mask;
pub mod metrics;
pub mod saliency;
pub mod slide;

pub use error::{Error, Result};
