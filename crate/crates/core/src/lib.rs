pub mod basis;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod kernels;
pub mod linalg;
pub mod quadrature;
pub mod registry;
pub mod singular_opt;
pub mod solver;

pub use error::{Error, Result};
