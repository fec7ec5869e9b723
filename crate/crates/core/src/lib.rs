//! Discretization, solvers and verification routines for the two-phase Robin
//! free boundary functional
//!
//! ```text
//! J(u, Omega) = int_D |grad u|^2 + beta int_{boundary of Omega} u^2
//! ```
//!
//! on a uniform planar grid. `u` lives on nodes and `Omega` on cells.

pub mod certificates;
pub mod cut;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod maxflow;
pub mod outer;
pub mod problems;
pub mod state;

pub use error::{Error, Result};
pub use grid::{CellSet, DomainMask, GridSpec, LateralBc, ScalarField};
