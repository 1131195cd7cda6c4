//! Binary field snapshots.
//!
//! Layout (little-endian): magic `BOSF`, version `u32`, `n_points: u32`,
//! `half_length: f64`, `time: f64`, then `n_points` pairs `(re, im): f64` in
//! lattice order `k = -n/2 .. n/2 - 1`.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use super::{Grid, SpectralField};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"BOSF";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, field: &SpectralField, time: f64) -> Result<()> {
    let grid = field.grid();
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(grid.n_points() as u32)?;
    w.write_f64::<LittleEndian>(grid.half_length())?;
    w.write_f64::<LittleEndian>(time)?;
    for c in field.coeffs() {
        w.write_f64::<LittleEndian>(c.re)?;
        w.write_f64::<LittleEndian>(c.im)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(SpectralField, f64)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = r.read_u32::<LittleEndian>()? as usize;
    let half_length = r.read_f64::<LittleEndian>()?;
    let time = r.read_f64::<LittleEndian>()?;
    let grid = Grid::new(n, half_length)?;
    let mut coeffs = Vec::with_capacity(n);
    for _ in 0..n {
        let re = r.read_f64::<LittleEndian>()?;
        let im = r.read_f64::<LittleEndian>()?;
        coeffs.push(Complex64::new(re, im));
    }
    if coeffs[0] != Complex64::new(0.0, 0.0) {
        return Err(Error::Format("nonzero Nyquist coefficient".into()));
    }
    Ok((SpectralField::from_coeffs(grid, coeffs)?, time))
}
