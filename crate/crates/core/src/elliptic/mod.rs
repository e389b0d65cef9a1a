//! Finite-difference discretization of the Dirichlet operator
//! −∂(a11 ∂u) − b1 ∂u − c u on (0, ℓ), split into its symmetric principal
//! part A₀ and the lower-order part B.

mod field;
mod spectral;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};

pub use field::{graph_norm_h2, inner_h, norm_h, Field};
pub use spectral::{eigendecompose, frac_power_apply, SpectralBasis};

/// Uniform grid of N interior nodes x_i = (i+1)h, h = ℓ/(N+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    n_interior: usize,
    spacing: f64,
}

impl Grid1D {
    pub fn new(length: f64, n_interior: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid("length", format!("{length} must be positive")));
        }
        if n_interior < 2 {
            return Err(invalid("N", format!("{n_interior} interior nodes, need at least 2")));
        }
        Ok(Self {
            length,
            n_interior,
            spacing: length / (n_interior + 1) as f64,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Coordinate of interior node i (0-based).
    pub fn x(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_interior).map(|i| self.x(i))
    }

    pub(crate) fn check_same(&self, other: &Grid1D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.n_interior,
                found: other.n_interior,
            })
        }
    }
}

pub type CoefficientFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct EllipticCoefficients {
    pub a11: CoefficientFn,
    pub b1: CoefficientFn,
    pub c: CoefficientFn,
    pub kappa: f64,
}

impl EllipticCoefficients {
    pub fn new(
        a11: impl Fn(f64) -> f64 + Send + Sync + 'static,
        b1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c: impl Fn(f64) -> f64 + Send + Sync + 'static,
        kappa: f64,
    ) -> Self {
        Self {
            a11: Arc::new(a11),
            b1: Arc::new(b1),
            c: Arc::new(c),
            kappa,
        }
    }

    pub fn constant(a11: f64, b1: f64, c: f64) -> Self {
        Self::new(move |_| a11, move |_| b1, move |_| c, a11)
    }

    /// Same principal part, lower-order terms multiplied by `factor`.
    pub fn scale_perturbation(&self, factor: f64) -> Self {
        let (b1, c) = (self.b1.clone(), self.c.clone());
        Self {
            a11: self.a11.clone(),
            b1: Arc::new(move |x| factor * b1(x)),
            c: Arc::new(move |x| factor * c(x)),
            kappa: self.kappa,
        }
    }
}

impl fmt::Debug for EllipticCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EllipticCoefficients")
            .field("kappa", &self.kappa)
            .finish_non_exhaustive()
    }
}

/// Tridiagonal matrix stored by diagonals; `lower[i]` sits at (i+1, i) and
/// `upper[i]` at (i, i+1).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.lower[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            if i + 1 < n {
                m[(i + 1, i)] = self.lower[i];
                m[(i, i + 1)] = self.upper[i];
            }
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.lower
            .iter()
            .chain(&self.diag)
            .chain(&self.upper)
            .all(|&x| x == 0.0)
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub a0: Tridiagonal,
    pub b: Tridiagonal,
    pub grid: Grid1D,
}

impl DiscreteOperator {
    pub fn a0_matrix(&self) -> DMatrix<f64> {
        self.a0.to_dense()
    }

    pub fn b_matrix(&self) -> DMatrix<f64> {
        self.b.to_dense()
    }

    /// (A₀ − B)v, the full operator.
    pub fn apply_full(&self, v: &[f64]) -> Vec<f64> {
        let a = self.a0.apply(v);
        let b = self.b.apply(v);
        a.iter().zip(&b).map(|(x, y)| x - y).collect()
    }
}

pub fn assemble(grid: Grid1D, coeffs: &EllipticCoefficients) -> Result<DiscreteOperator> {
    if !(coeffs.kappa > 0.0) {
        return Err(invalid("kappa", format!("{} must be positive", coeffs.kappa)));
    }
    let n = grid.n_interior();
    let h = grid.spacing();
    // a11 at the N+1 half points between consecutive nodes (boundary included)
    let mut half = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let x = (k as f64 + 0.5) * h;
        let value = (coeffs.a11)(x);
        if !(value >= coeffs.kappa) {
            return Err(Error::Ellipticity {
                x,
                value,
                kappa: coeffs.kappa,
            });
        }
        half.push(value);
    }
    let h2 = h * h;
    let diag = (0..n).map(|i| (half[i] + half[i + 1]) / h2).collect();
    let off: Vec<f64> = (0..n - 1).map(|i| -half[i + 1] / h2).collect();
    let a0 = Tridiagonal {
        lower: off.clone(),
        diag,
        upper: off,
    };

    let b1: Vec<f64> = grid.nodes().map(|x| (coeffs.b1)(x)).collect();
    let b = Tridiagonal {
        lower: (1..n).map(|i| -b1[i] / (2.0 * h)).collect(),
        diag: grid.nodes().map(|x| (coeffs.c)(x)).collect(),
        upper: (0..n - 1).map(|i| b1[i] / (2.0 * h)).collect(),
    };
    Ok(DiscreteOperator { a0, b, grid })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn laplacian_stencil() {
        let grid = Grid1D::new(1.0, 3).unwrap();
        assert_eq!(grid.spacing(), 0.25);
        let op = assemble(grid, &EllipticCoefficients::constant(1.0, 0.0, 0.0)).unwrap();
        let a = op.a0_matrix();
        let want = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0]) * 16.0;
        assert_eq!(a, want);
        assert!(op.b.is_zero());
    }

    #[test]
    fn centered_difference() {
        let grid = Grid1D::new(1.0, 3).unwrap();
        let op = assemble(grid, &EllipticCoefficients::constant(1.0, 1.0, 0.0)).unwrap();
        let want = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, 0.0, -2.0, 0.0, 2.0, 0.0, -2.0, 0.0]);
        assert_eq!(op.b_matrix(), want);
        let full = op.a0_matrix() - op.b_matrix();
        assert_ne!(full, full.transpose());
    }

    #[test]
    fn flux_form_is_symmetric() {
        let grid = Grid1D::new(1.0, 9).unwrap();
        let coeffs = EllipticCoefficients::new(|x| 1.0 + x, |_| 0.0, |_| 0.0, 1.0);
        let op = assemble(grid, &coeffs).unwrap();
        let a = op.a0_matrix();
        assert_eq!(a, a.transpose());
        let h = grid.spacing();
        for i in 0..8 {
            let want = -(1.0 + grid.x(i) + h / 2.0) / (h * h);
            assert!((a[(i, i + 1)] - want).abs() < 1e-12 * want.abs());
        }
    }

    #[test]
    fn ellipticity_is_enforced() {
        let grid = Grid1D::new(1.0, 4).unwrap();
        let coeffs = EllipticCoefficients::new(|x| 0.5 - x, |_| 0.0, |_| 0.0, 0.1);
        assert!(matches!(assemble(grid, &coeffs), Err(Error::Ellipticity { .. })));
    }

    #[test]
    fn grid_identity() {
        let g = Grid1D::new(2.5, 37).unwrap();
        assert!((g.spacing() * 38.0 - 2.5).abs() < 4.0 * f64::EPSILON);
        assert!(Grid1D::new(1.0, 1).is_err());
        assert!(Grid1D::new(-1.0, 5).is_err());
    }
}
