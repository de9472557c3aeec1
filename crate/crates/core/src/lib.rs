//! Metaplectic operators on a grid: symplectic algebra, Maslov and
//! Conley–Zehnder indices, configuration-space and phase-space realizations,
//! the Feichtinger algebra and stationary-phase asymptotics.

pub mod asymptotics;
pub mod cli;
pub mod config;
pub mod config_ops;
pub mod error;
pub mod feichtinger;
pub mod fourier;
pub mod grid;
pub mod indices;
pub mod io;
pub mod linalg;
pub mod phase_space;
pub mod random;
pub mod symplectic;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{Grid, SampledFunction};
pub use tolerances::{Tolerances, Truncation};
