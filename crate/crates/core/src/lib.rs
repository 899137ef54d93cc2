//! Compliance modeling and compensation for parallel manipulators built from
//! flexible serial chains.

pub mod compensation;
pub mod equilibrium;
pub mod error;
pub mod kinematics;
pub mod linalg;
pub mod machining;
pub mod model;
pub mod stiffness;

pub use error::{Error, Result};
