//! Dirac equation on sub-extremal Kerr-Newman spacetime in horizon-penetrating
//! Eddington-Finkelstein coordinates.

pub mod angular_solver;
pub mod dirac_algebra;
pub mod error;
pub mod geometry;
pub mod np_tetrad;
pub mod radial_solver;
pub mod separation;

pub use error::{Error, Result};
