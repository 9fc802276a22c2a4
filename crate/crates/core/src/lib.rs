pub mod assignment;
pub mod design;
pub mod error;
pub mod glm;
pub mod harness;
pub mod hypothesis;
pub mod models;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use rng::RngStream;
