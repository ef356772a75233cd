//! Classical statevector simulation of a quantum reservoir-method solver for
//! the one-dimensional self-gravitating collisionless Boltzmann equation.

pub mod advection;
pub mod error;
pub mod experiment;
pub mod extraction;
pub mod gravity;
pub mod grid;
pub mod oracle;
pub mod pipeline;
pub mod schedule;
pub mod statevector;
pub mod theory;
pub mod tomography;

pub use error::{Error, Result};
pub use grid::{DistributionFunction, GridConfig, Normalization, Rational};
