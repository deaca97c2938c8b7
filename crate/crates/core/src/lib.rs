//! Fully discrete sparse-grid collocation and quadrature for elliptic
//! problems with lognormal or affine random coefficients.

pub mod cli;
pub mod error;
pub mod fem;
pub mod indexset;
pub mod model;
pub mod nodes;
pub mod oracle;
pub mod orthopoly;
pub mod rules1d;
pub mod sparse;

pub use error::{Error, Result};
