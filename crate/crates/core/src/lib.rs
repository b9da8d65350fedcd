pub mod boundary_solver;
pub mod contour;
pub mod deficit_optimizer;
pub mod entropy;
pub mod error;
pub mod format;
pub mod golden;
pub mod measurement_entropy;
pub mod phase_diagram;
pub mod spin_model;

pub use error::{Error, Result};
