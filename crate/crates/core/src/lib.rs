//! Finite-volume solvers for the shallow water equations (1D, 2D and on the
//! sphere) and the compressible Euler equations (1D, 2D).

mod binary;
pub mod config;
pub mod diagnostics;
pub mod equations;
pub mod error;
pub mod field;
pub mod flux;
pub mod grid;
pub mod initial;
pub mod nn;
pub mod oracle;
pub mod reconstruction;
pub mod run;
pub mod snapshot;
pub mod solver;
pub mod state;
pub mod time_integration;

pub use error::{Error, Result};
pub use state::{State, System};
