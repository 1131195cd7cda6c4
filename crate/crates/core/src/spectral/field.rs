use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::{japanese, Grid};
use super::symbol::{Region, Symbol};
use crate::error::{Error, Result};

type Plan = Arc<dyn Fft<f64>>;

// Plans are immutable once built; the map is only locked for lookup.
fn plans(n: usize) -> (Plan, Plan) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Plan, Plan)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

fn parity_sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Fourier coefficients `coeff[k] ~ \hat u(xi_k)` of a function on a [`Grid`],
/// with `\hat u(xi) = \int u(x) e^{-i xi x} dx` discretised by the rectangle
/// rule. The Nyquist coefficient is always zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_points()],
        }
    }

    /// Builds a field from lattice-ordered coefficients; the Nyquist entry is
    /// discarded.
    pub fn from_coeffs(grid: Grid, mut coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_points() {
            return Err(Error::LengthMismatch {
                expected: grid.n_points(),
                got: coeffs.len(),
            });
        }
        coeffs[0] = Complex64::new(0.0, 0.0);
        Ok(Self { grid, coeffs })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Self {
        let mut coeffs: Vec<Complex64> = (0..grid.n_points()).map(|i| f(grid.xi(i))).collect();
        coeffs[0] = Complex64::new(0.0, 0.0);
        Self { grid, coeffs }
    }

    /// Forward transform of complex samples `u(x_j)`.
    pub fn from_physical(grid: Grid, samples: &[Complex64]) -> Result<Self> {
        let n = grid.n_points();
        if samples.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: samples.len(),
            });
        }
        let (forward, _) = plans(n);
        let mut buf = samples.to_vec();
        forward.process(&mut buf);
        let dx = grid.dx();
        let half = (n / 2) as i64;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in coeffs.iter_mut().enumerate().skip(1) {
            let k = i as i64 - half;
            // x_j = -L + j dx contributes e^{i xi_k L} = (-1)^k
            *c = buf[k.rem_euclid(n as i64) as usize] * (dx * parity_sign(k));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn from_real(grid: Grid, samples: &[f64]) -> Result<Self> {
        let complex: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        Self::from_physical(grid, &complex)
    }

    /// Samples the function `f` on the grid and transforms it.
    pub fn sample(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let samples: Vec<f64> = grid.xs().into_iter().map(f).collect();
        Self::from_real(grid, &samples).expect("sample length matches grid")
    }

    pub fn to_physical(&self) -> Vec<Complex64> {
        let n = self.grid.n_points();
        let (_, inverse) = plans(n);
        let half = (n / 2) as i64;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = i as i64 - half;
            buf[k.rem_euclid(n as i64) as usize] = c * parity_sign(k);
        }
        inverse.process(&mut buf);
        let scale = self.grid.spectral_weight();
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// Real parts of the physical samples.
    pub fn to_real(&self) -> Vec<f64> {
        self.to_physical().into_iter().map(|v| v.re).collect()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k: i64) -> Complex64 {
        self.grid
            .index_of(k)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Applies `f(xi, coeff)` to every coefficient (the Nyquist mode stays zero).
    pub fn map(&self, f: impl Fn(f64, Complex64) -> Complex64) -> Self {
        let mut coeffs: Vec<Complex64> = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| f(self.grid.xi(i), c))
            .collect();
        coeffs[0] = Complex64::new(0.0, 0.0);
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    pub fn apply(&self, symbol: &Symbol) -> Self {
        match symbol {
            Symbol::Table(values) => {
                assert_eq!(values.len(), self.coeffs.len(), "symbol table length");
                let mut out = self.clone();
                out.coeffs
                    .iter_mut()
                    .zip(values)
                    .for_each(|(c, m)| *c *= m);
                out.coeffs[0] = Complex64::new(0.0, 0.0);
                out
            }
            _ => self.map(|xi, c| c * symbol.eval(xi)),
        }
    }

    pub fn project(&self, region: Region) -> Self {
        self.map(|xi, c| if region.contains(xi) { c } else { Complex64::new(0.0, 0.0) })
    }

    pub fn zero_mean(&self) -> Self {
        self.map(|xi, c| if xi == 0.0 { Complex64::new(0.0, 0.0) } else { c })
    }

    pub fn derivative(&self) -> Self {
        self.apply(&Symbol::Derivative)
    }

    pub fn antiderivative(&self) -> Self {
        self.apply(&Symbol::Antiderivative)
    }

    pub fn hilbert(&self) -> Self {
        self.apply(&Symbol::Hilbert)
    }

    /// `(sum <xi_k>^{2s} |c_k|^2 dxi/(2 pi))^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        let w = self.grid.spectral_weight();
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| japanese(self.grid.xi(i)).powf(2.0 * s) * c.norm_sqr())
            .sum::<f64>()
            .mul(w)
            .sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        let w = self.grid.spectral_weight();
        (self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() * w).sqrt()
    }

    /// `sup_k |c_k|`.
    pub fn sup_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Field of the complex conjugate function: `c'(k) = conj(c(-k))`.
    pub fn conj_function(&self) -> Self {
        let n = self.grid.n_points();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (i, c) in coeffs.iter_mut().enumerate().skip(1) {
            *c = self.coeffs[n - i].conj();
        }
        Self {
            grid: self.grid,
            coeffs,
        }
    }

    /// `max_k |c(k) - conj c(-k)|`, zero for real-valued functions.
    pub fn reality_residual(&self) -> f64 {
        let n = self.grid.n_points();
        (1..n)
            .map(|i| (self.coeffs[i] - self.coeffs[n - i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Projects onto conjugate-symmetric coefficients (real part of the function).
    pub fn realify(&self) -> Self {
        let conj = self.conj_function();
        (self + &conj) * 0.5
    }

    /// Embeds the coefficients into a finer lattice on the same domain.
    pub fn pad_to(&self, fine: Grid) -> Self {
        assert_eq!(fine.half_length(), self.grid.half_length(), "pad keeps the domain");
        assert!(fine.n_points() >= self.grid.n_points(), "pad needs a finer lattice");
        let mut out = Self::zeros(fine);
        let offset = (fine.n_points() - self.grid.n_points()) / 2;
        out.coeffs[offset + 1..offset + self.grid.n_points()]
            .copy_from_slice(&self.coeffs[1..]);
        out
    }

    /// Keeps the modes representable on a coarser lattice on the same domain.
    pub fn restrict_to(&self, coarse: Grid) -> Self {
        assert_eq!(coarse.half_length(), self.grid.half_length(), "restrict keeps the domain");
        assert!(coarse.n_points() <= self.grid.n_points(), "restrict needs a coarser lattice");
        let offset = (self.grid.n_points() - coarse.n_points()) / 2;
        let mut coeffs = self.coeffs[offset..offset + coarse.n_points()].to_vec();
        coeffs[0] = Complex64::new(0.0, 0.0);
        Self {
            grid: coarse,
            coeffs,
        }
    }

    /// Pointwise product in physical space on this lattice (aliases).
    pub fn pointwise(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "pointwise product across grids");
        let a = self.to_physical();
        let b = other.to_physical();
        let prod: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        Self::from_physical(self.grid, &prod).expect("same length")
    }

    /// Product with 2x zero padding: every retained coefficient equals the
    /// lattice convolution `sum_{k1+k2=k} a(k1) b(k2) dxi/(2 pi)` exactly.
    pub fn dealiased_product(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "product across grids");
        let fine = self.grid.refined(2).expect("refined grid is valid");
        self.pad_to(fine)
            .pointwise(&other.pad_to(fine))
            .restrict_to(self.grid)
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: Self) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "sum across grids");
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: Self) -> SpectralField {
        assert_eq!(self.grid, rhs.grid, "difference across grids");
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Add for SpectralField {
    type Output = SpectralField;

    fn add(self, rhs: Self) -> SpectralField {
        &self + &rhs
    }
}

impl Sub for SpectralField {
    type Output = SpectralField;

    fn sub(self, rhs: Self) -> SpectralField {
        &self - &rhs
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;

    fn neg(self) -> SpectralField {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Mul<f64> for SpectralField {
    type Output = SpectralField;

    fn mul(mut self, rhs: f64) -> SpectralField {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, rhs: f64) -> SpectralField {
        self.clone() * rhs
    }
}

impl Mul<Complex64> for &SpectralField {
    type Output = SpectralField;

    fn mul(self, rhs: Complex64) -> SpectralField {
        self.scale(rhs)
    }
}
