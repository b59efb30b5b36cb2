pub mod error;
pub mod quadrature;
pub mod specfun;

pub use error::{Error, Result};
pub mod operator_models;
pub mod rho_zeros;
pub mod fvp_core;
pub mod inverse_source;
pub mod inverse_coefficient;
pub mod verify;
