//! Finite-volume solver and diagnostics for a two-species cross-diffusion
//! system on the periodic unit interval.

pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod model;
pub mod solver;
pub mod transforms;
pub mod study;
pub mod io;

pub use error::{Error, Result};
