//! Numerical lab for weakly coupled cubic Schrödinger systems on bounded
//! grids: ground states of the frozen system, the reduced energy map, coupling
//! thresholds and semiclassical concentration diagnostics.

pub mod error;
pub mod fastsine;
pub mod grid;
pub mod io;
pub mod model;
pub mod par;
pub mod semiclassical;
pub mod sigma;
pub mod solver;

pub use error::{Error, Result};
pub use grid::{Field, GlobalMax, Grid, State};
