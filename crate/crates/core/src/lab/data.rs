//! Rough random data and a step-halving driver for the gauged flow.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{evolve_gauged_with, EvolveOptions, Trajectory};
use crate::gauge::GaugeState;
use crate::spectral::{japanese, Grid, SpectralField};
use crate::{Error, Result};

/// Step halvings tried before giving up.
const MAX_HALVINGS: usize = 12;

/// Antiderivative coefficients `|F^(xi)| = amplitude <xi>^{-(s+1)-1/2-0.01}`
/// with uniform random phases, real and zero-mean. Phases are drawn in order
/// of `|k|`, so finer grids with the same `L` extend the same data. Returns
/// `u = F_x`; its gauge lies in `H^{s+1}` and in no `H^{s+1+delta}` with
/// `delta > 0.01` uniformly in the resolution.
pub fn rough_data(grid: Grid, s: f64, amplitude: f64, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.n_points();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..(n / 2) as i64 {
        let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        let xi = grid.xi(grid.index_of(k).expect("mode on grid"));
        let c = Complex64::from_polar(amplitude * japanese(xi).powf(-(s + 1.51)), theta);
        coeffs[grid.index_of(k).unwrap()] = c;
        coeffs[grid.index_of(-k).unwrap()] = c.conj();
    }
    SpectralField::from_coeffs(grid, coeffs).expect("length matches").derivative()
}

/// `u = d/dx (amplitude e^{-(x/width)^2})`, smooth and zero-mean.
pub fn gaussian_derivative(grid: Grid, amplitude: f64, width: f64) -> SpectralField {
    SpectralField::sample(grid, |x| {
        let y = x / width;
        -amplitude * 2.0 * y / width * (-y * y).exp()
    })
    .zero_mean()
}

/// Evolves the gauged equation from `state` with the largest `dt0 / 2^j`
/// accepted by the stability probe.
pub fn evolve_gauged_stable(state: &GaugeState, t_final: f64, dt0: f64, save_every_time: f64) -> Result<Trajectory> {
    let mut dt = dt0;
    for _ in 0..=MAX_HALVINGS {
        let save_every = ((save_every_time / dt).round() as usize).max(1);
        let opts = EvolveOptions {
            save_every,
            ..Default::default()
        };
        match evolve_gauged_with(state, t_final, dt, &opts) {
            Err(Error::StepTooLarge { .. }) => dt *= 0.5,
            other => return other,
        }
    }
    Err(Error::StepTooLarge { dt, bound: 0.0 })
}

/// Root mean square of `|c_k|` over dyadic bands `2^j <= |xi| < 2^{j+1}`
/// lying inside `[from, xi_max]`, as `(band centre, rms)`.
pub fn dyadic_band_rms(field: &SpectralField, from: f64) -> Vec<(f64, f64)> {
    let grid = *field.grid();
    let top = grid.xi_max();
    let mut out = Vec::new();
    let mut lo = from;
    while 2.0 * lo <= top {
        let hi = 2.0 * lo;
        let vals: Vec<f64> = (0..grid.n_points())
            .filter(|&i| {
                let a = grid.xi(i).abs();
                a >= lo && a < hi
            })
            .map(|i| field.coeffs()[i].norm_sqr())
            .collect();
        if !vals.is_empty() {
            out.push(((lo * hi).sqrt(), (vals.iter().sum::<f64>() / vals.len() as f64).sqrt()));
        }
        lo = hi;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rough_data_is_real_nested_and_prescribed() {
        let coarse = Grid::new(64, 2.0 * std::f64::consts::PI).unwrap();
        let fine = coarse.refined(4).unwrap();
        let a = rough_data(coarse, 0.5, 0.3, 9);
        let b = rough_data(fine, 0.5, 0.3, 9);
        assert!(a.reality_residual() < 1e-14);
        assert_eq!(a.coeff(0), Complex64::new(0.0, 0.0));
        for k in 1..31 {
            assert!((a.coeff(k) - b.coeff(k)).norm() < 1e-14);
            let xi = coarse.xi(coarse.index_of(k).unwrap());
            let expect = 0.3 * xi * japanese(xi).powf(-2.01);
            assert!((a.coeff(k).norm() - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn band_rms_recovers_power_law() {
        let grid = Grid::new(1024, std::f64::consts::PI).unwrap();
        let f = SpectralField::from_fn(grid, |xi| Complex64::new(xi.abs().max(1.0).powf(-1.5), 0.0));
        let bands = dyadic_band_rms(&f, 4.0);
        assert!(bands.len() >= 5);
        let (xs, ys): (Vec<f64>, Vec<f64>) = bands.into_iter().unzip();
        let fit = super::super::fit::fit_power(&xs, &ys).unwrap();
        assert!((fit.exponent + 1.5).abs() < 0.05, "{fit:?}");
    }
}
