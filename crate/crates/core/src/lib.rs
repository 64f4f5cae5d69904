pub mod error;
pub mod linalg;
pub mod factorization;
pub mod kalman;
pub mod model;
pub mod optomech;
pub mod document;
pub mod cli;

pub use error::{Error, Result};
