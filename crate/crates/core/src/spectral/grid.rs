use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic lattice on `[-L, L)` together with its frequency lattice
/// `xi_k = (pi / L) k`, `k = -n/2 .. n/2 - 1`.
///
/// Index `i` of a coefficient array corresponds to `k = i - n/2`, so index 0
/// is the unpaired Nyquist mode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_points: usize,
    half_length: f64,
}

impl Grid {
    pub fn new(n_points: usize, half_length: f64) -> Result<Self> {
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= 8, got {n_points}"
            )));
        }
        if !half_length.is_finite() || half_length < PI * (1.0 - 1e-12) {
            return Err(Error::InvalidGrid(format!(
                "half_length must be >= pi so that the frequency spacing pi/L <= 1 \
                 resolves the low band |xi| <= 1, got {half_length}"
            )));
        }
        Ok(Self {
            n_points,
            half_length,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n_points as f64
    }

    /// Frequency spacing `pi / L`.
    pub fn dxi(&self) -> f64 {
        PI / self.half_length
    }

    /// Quadrature weight `dxi / (2 pi)` attached to each lattice frequency.
    pub fn spectral_weight(&self) -> f64 {
        1.0 / (2.0 * self.half_length)
    }

    pub fn wavenumber(&self, index: usize) -> i64 {
        index as i64 - (self.n_points / 2) as i64
    }

    pub fn index_of(&self, k: i64) -> Option<usize> {
        let i = k + (self.n_points / 2) as i64;
        (0..self.n_points as i64).contains(&i).then_some(i as usize)
    }

    pub fn xi(&self, index: usize) -> f64 {
        self.wavenumber(index) as f64 * self.dxi()
    }

    pub fn xis(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.xi(i)).collect()
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Largest retained frequency (the Nyquist mode is always zero).
    pub fn xi_max(&self) -> f64 {
        (self.n_points / 2 - 1) as f64 * self.dxi()
    }

    /// Same domain with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.n_points * factor, self.half_length)
    }

    /// `max_{xi != 0} <xi>/|xi|` over the lattice, attained at the first mode.
    pub fn hardy_constant(&self) -> f64 {
        let d = self.dxi();
        (1.0 + d * d).sqrt() / d
    }
}

/// `<xi> = (1 + xi^2)^{1/2}`.
pub fn japanese(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}
