//! Grids, transforms, Fourier multipliers, projections and Sobolev norms.

mod field;
mod grid;
pub mod snapshot;
mod symbol;

pub use field::SpectralField;
pub use grid::{japanese, Grid};
pub use symbol::{omega, Region, Symbol};

use crate::error::Result;

pub fn make_grid(n_points: usize, half_length: f64) -> Result<Grid> {
    Grid::new(n_points, half_length)
}
