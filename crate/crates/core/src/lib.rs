pub mod artifact;
pub mod bench;
pub mod error;
pub mod model;
pub mod nn;
pub mod oracle;
pub mod puzzle;
pub mod search;
pub mod training;

pub use error::{Error, Result};
