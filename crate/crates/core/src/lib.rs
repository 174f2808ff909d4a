pub mod app;
pub mod ensemble;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod scheme;
pub mod stochastics;
pub mod verification;

pub use error::{Error, Result};
