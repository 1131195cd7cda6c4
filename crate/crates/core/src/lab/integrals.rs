//! Brute-force quadrature for the frequency-restricted integrals `I` and `J`.
//!
//! The indicator `|Phi - alpha| < M` is resolved exactly in the innermost
//! variable (the phase is monotone there), so the Riemann sums only run over
//! its support. Each sum is a midpoint rule in `t` with `x = c + sinh t`,
//! which keeps the mesh proportional to `<x - c>`.

use serde::{Deserialize, Serialize};

use crate::spectral::{japanese, omega};
use crate::{Error, Result};

/// Mesh densities: `outer` points per e-fold in the sup variable and per
/// unit of `asinh` length in the middle variable, `inner` likewise in the
/// innermost one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mesh {
    pub outer: usize,
    pub inner: usize,
}

impl Default for Mesh {
    fn default() -> Self {
        Mesh { outer: 32, inner: 32 }
    }
}

impl Mesh {
    /// Halves every mesh width.
    pub fn refined(&self) -> Mesh {
        Mesh {
            outer: 2 * self.outer,
            inner: 2 * self.inner,
        }
    }
}

/// Relative change under mesh halving above which a value is flagged.
pub const MESH_TOL: f64 = 0.05;

/// A quadrature value together with its mesh-halving check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralValue {
    pub value: f64,
    pub refined: f64,
    pub relative_change: f64,
    pub converged: bool,
}

impl IntegralValue {
    fn from_pair(value: f64, refined: f64) -> Self {
        let scale = value.abs().max(refined.abs());
        let relative_change = if scale == 0.0 { 0.0 } else { (value - refined).abs() / scale };
        IntegralValue {
            value,
            refined,
            relative_change,
            converged: relative_change < MESH_TOL,
        }
    }
}

/// `int_a^b f` by the midpoint rule in `t`, `x = c + sinh t`.
fn sinh_midpoint(a: f64, b: f64, c: f64, density: usize, f: impl Fn(f64) -> f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let (ta, tb) = ((a - c).asinh(), (b - c).asinh());
    let n = ((density as f64) * (tb - ta).max(1.0)).ceil() as usize;
    let h = (tb - ta) / n as f64;
    (0..n)
        .map(|i| {
            let t = ta + (i as f64 + 0.5) * h;
            f(c + t.sinh()) * t.cosh()
        })
        .sum::<f64>()
        * h
}

/// Log-spaced sample points in `(1, cutoff]`.
fn sup_points(cutoff: f64, density: usize) -> impl Iterator<Item = f64> {
    let n = ((density as f64) * cutoff.ln()).ceil() as usize;
    let h = cutoff.ln() / n as f64;
    (1..=n).map(move |i| (i as f64 * h).exp())
}

fn validate(m: f64, s: f64, eps: f64, cutoff: f64) -> Result<()> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidArgument(format!("M must be positive, got {m}")));
    }
    if !(s >= 0.0) || !(eps >= 0.0) {
        return Err(Error::InvalidArgument(format!("need s, eps >= 0, got ({s}, {eps})")));
    }
    if !(cutoff > 2.0) || !cutoff.is_finite() {
        return Err(Error::InvalidArgument(format!("cutoff must exceed 2, got {cutoff}")));
    }
    Ok(())
}

/// Inverse of `g(x) = omega(x) - omega(c - x)`, which is strictly
/// increasing and linear between `0` and `c` (`c != 0`).
fn cubic_inner_inverse(c: f64, y: f64) -> f64 {
    let c2 = c * c;
    if y > c2 {
        0.5 * (c + (2.0 * y - c2).sqrt())
    } else if y < -c2 {
        0.5 * (c - (-2.0 * y - c2).sqrt())
    } else {
        c.min(0.0) + (y + c2) / (2.0 * c.abs())
    }
}

/// The `(xi1, xi2)` integral of the cubic weight at fixed `xi`.
pub fn cubic_inner(xi: f64, alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> f64 {
    let top = japanese(xi).powf(2.0 * s + 2.0 * eps + 2.0);
    let slice = |xi1: f64| {
        let c = xi - xi1;
        if c >= 0.0 {
            return 0.0;
        }
        let a = omega(xi) - omega(xi1);
        let lo = cubic_inner_inverse(c, alpha - a - m).max(-cutoff).max(c - cutoff);
        let hi = cubic_inner_inverse(c, alpha - a + m).min(cutoff).min(c + cutoff);
        if hi <= lo {
            return 0.0;
        }
        let pref = top * c * c / (xi1 * xi1 * japanese(xi1).powf(2.0 * s));
        let f = |x2: f64| 1.0 / (japanese(x2).powf(2.0 * s + 2.0) * japanese(c - x2).powf(2.0 * s));
        let mid = 0.5 * c;
        let mut acc = 0.0;
        if lo < mid {
            acc += sinh_midpoint(lo, hi.min(mid), 0.0, mesh.inner, f);
        }
        if hi > mid {
            acc += sinh_midpoint(lo.max(mid), hi, c, mesh.inner, f);
        }
        pref * acc
    };
    sinh_midpoint(xi, cutoff, xi, mesh.outer, slice)
}

/// `sup_xi` of the cubic integral over `xi1 > xi > 1`, `xi3 = xi - xi1 - xi2`,
/// `Phi = omega(xi) - omega(xi1) + omega(xi2) - omega(xi3)`, all frequencies
/// bounded by `cutoff`.
pub fn cubic_integral_i_with(alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> Result<f64> {
    validate(m, s, eps, cutoff)?;
    Ok(sup_points(cutoff, mesh.outer)
        .map(|xi| cubic_inner(xi, alpha, m, s, eps, cutoff, mesh))
        .fold(0.0, f64::max))
}

pub fn cubic_integral_i(alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64) -> Result<f64> {
    cubic_integral_i_with(alpha, m, s, eps, cutoff, Mesh::default())
}

/// The value on `mesh` and on the halved mesh.
pub fn cubic_integral_i_checked(alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> Result<IntegralValue> {
    Ok(IntegralValue::from_pair(
        cubic_integral_i_with(alpha, m, s, eps, cutoff, mesh)?,
        cubic_integral_i_with(alpha, m, s, eps, cutoff, mesh.refined())?,
    ))
}

/// The `xi2` integral of the quadratic weight at fixed `xi`, over the
/// branch `xi2 < 0`, `xi1 = xi - xi2 > xi`, where `Psi = 2 xi xi2`.
pub fn quad_inner(xi: f64, alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> f64 {
    let lo = ((alpha - m) / (2.0 * xi)).max(xi - cutoff).max(-cutoff);
    let hi = ((alpha + m) / (2.0 * xi)).min(0.0);
    if hi <= lo {
        return 0.0;
    }
    let top = japanese(xi).powf(2.0 * s + 2.0 * eps + 2.0);
    top * sinh_midpoint(lo, hi, 0.0, mesh.inner, |x2| {
        let x1 = xi - x2;
        x2 * x2 / (x1 * x1 * japanese(x1).powf(2.0 * s) * japanese(x2).powf(2.0 * s))
    })
}

fn quad_branch(alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> f64 {
    sup_points(cutoff, mesh.outer)
        .map(|xi| quad_inner(xi, alpha, m, s, eps, cutoff, mesh))
        .fold(0.0, f64::max)
}

/// `sup_xi` of the quadratic integral. `Psi` has a fixed sign on the branch,
/// so the value is the larger of the branch integrals at `alpha` and
/// `-alpha` (the mirrored branch of the other band).
pub fn quad_integral_j_with(alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> Result<f64> {
    validate(m, s, eps, cutoff)?;
    Ok(quad_branch(alpha, m, s, eps, cutoff, mesh).max(quad_branch(-alpha, m, s, eps, cutoff, mesh)))
}

pub fn quad_integral_j(alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64) -> Result<f64> {
    quad_integral_j_with(alpha, m, s, eps, cutoff, Mesh::default())
}

pub fn quad_integral_j_checked(alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, mesh: Mesh) -> Result<IntegralValue> {
    Ok(IntegralValue::from_pair(
        quad_integral_j_with(alpha, m, s, eps, cutoff, mesh)?,
        quad_integral_j_with(alpha, m, s, eps, cutoff, mesh.refined())?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jb(x: f64) -> f64 {
        (1.0 + x * x).sqrt()
    }

    fn w(x: f64) -> f64 {
        x * x.abs()
    }

    // plain midpoint grid with the indicator evaluated pointwise
    fn brute_cubic(xi: f64, alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, h: f64) -> f64 {
        let n1 = ((cutoff - xi) / h) as usize;
        let n2 = (2.0 * cutoff / h) as usize;
        let mut acc = 0.0;
        for i in 0..n1 {
            let x1 = xi + (i as f64 + 0.5) * h;
            for j in 0..n2 {
                let x2 = -cutoff + (j as f64 + 0.5) * h;
                let x3 = xi - x1 - x2;
                if x3.abs() > cutoff {
                    continue;
                }
                let phi = w(xi) - w(x1) + w(x2) - w(x3);
                if (phi - alpha).abs() >= m {
                    continue;
                }
                acc += jb(xi).powf(2.0 * s + 2.0 * eps + 2.0) * (x2 + x3).powi(2)
                    / (x1 * x1 * jb(x1).powf(2.0 * s) * jb(x2).powf(2.0 * s + 2.0) * jb(x3).powf(2.0 * s));
            }
        }
        acc * h * h
    }

    fn brute_quad(xi: f64, alpha: f64, m: f64, s: f64, eps: f64, cutoff: f64, h: f64) -> f64 {
        let n = ((cutoff - xi) / h) as usize;
        (0..n)
            .map(|i| -(i as f64 + 0.5) * h)
            .filter(|x2| (2.0 * xi * x2 - alpha).abs() < m)
            .map(|x2| {
                let x1 = xi - x2;
                jb(xi).powf(2.0 * s + 2.0 * eps + 2.0) * x2 * x2 / (x1 * x1 * jb(x1).powf(2.0 * s) * jb(x2).powf(2.0 * s))
            })
            .sum::<f64>()
            * h
    }

    #[test]
    fn cubic_inner_matches_brute_force() {
        for (xi, alpha, m, eps) in [(2.0, 0.0, 8.0, 0.0), (3.5, -20.0, 4.0, 0.4)] {
            let fast = cubic_inner(xi, alpha, m, 0.5, eps, 30.0, Mesh { outer: 64, inner: 64 });
            let brute = brute_cubic(xi, alpha, m, 0.5, eps, 30.0, 0.01);
            assert!(fast > 0.0);
            assert!((fast - brute).abs() < 0.03 * brute, "{fast} vs {brute}");
        }
    }

    #[test]
    fn quad_inner_matches_brute_force() {
        for (xi, alpha, m) in [(1.5, 0.0, 4.0), (4.0, -30.0, 8.0), (10.0, -5.0, 2.0)] {
            let fast = quad_inner(xi, alpha, m, 0.5, 0.2, 200.0, Mesh::default());
            let brute = brute_quad(xi, alpha, m, 0.5, 0.2, 200.0, 1e-4);
            assert!(fast > 0.0);
            assert!((fast - brute).abs() < 0.01 * brute, "{fast} vs {brute}");
        }
    }

    #[test]
    fn empty_region_gives_zero() {
        assert_eq!(quad_integral_j(1e7, 1.0, 0.5, 0.0, 1000.0).unwrap(), 0.0);
        assert_eq!(cubic_integral_i(1e8, 1.0, 0.5, 0.0, 1000.0).unwrap(), 0.0);
        assert_eq!(quad_inner(2.0, 5.0, 1.0, 0.5, 0.0, 100.0, Mesh::default()), 0.0);
    }

    #[test]
    fn invalid_arguments_rejected() {
        assert!(quad_integral_j(0.0, 0.0, 0.5, 0.0, 100.0).is_err());
        assert!(cubic_integral_i(0.0, 1.0, -0.5, 0.0, 100.0).is_err());
        assert!(cubic_integral_i(0.0, 1.0, 0.5, 0.0, 1.5).is_err());
    }

    #[test]
    fn inverse_of_inner_phase() {
        let g = |c: f64, x: f64| w(x) - w(c - x);
        for c in [-3.0, -0.5, 0.7, 4.0] {
            for y in [-50.0, -1.0, 0.0, 0.3, 2.0, 40.0] {
                let x = cubic_inner_inverse(c, y);
                assert!((g(c, x) - y).abs() < 1e-10 * (1.0 + y.abs()), "c {c} y {y}");
            }
        }
    }

    #[test]
    fn j_checks_converge_and_grow_in_m() {
        let mut prev = 0.0;
        for m in [2.0, 8.0, 32.0] {
            let v = quad_integral_j_checked(0.0, m, 0.5, 0.0, 1000.0, Mesh::default()).unwrap();
            assert!(v.converged, "{v:?}");
            assert!(v.value > prev);
            prev = v.value;
        }
    }

    #[test]
    fn i_stable_under_mesh_and_cutoff() {
        let v = cubic_integral_i_checked(0.0, 8.0, 0.5, 0.4, 500.0, Mesh::default()).unwrap();
        assert!(v.converged, "{v:?}");
        let far = cubic_integral_i(0.0, 8.0, 0.5, 0.4, 1000.0).unwrap();
        assert!((far - v.value).abs() < MESH_TOL * far);
    }
}
