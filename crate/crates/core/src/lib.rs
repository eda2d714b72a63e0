pub mod asymptotics;
pub mod criteria;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod perm;
pub mod povm;
pub mod probrange;
pub mod quadrature;
pub mod sampling;
pub mod stats;
pub mod weingarten;

pub use error::{Error, Result};
