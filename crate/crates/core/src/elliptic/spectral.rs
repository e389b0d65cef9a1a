use nalgebra::{DMatrix, SymmetricEigen};

use super::{DiscreteOperator, Field, Grid1D};
use crate::error::{Error, Result};

/// Eigenpairs of A₀, ascending, with eigenvectors orthonormal in (·,·)_h.
#[derive(Debug, Clone)]
pub struct SpectralBasis {
    pub eigenvalues: Vec<f64>,
    /// Column n is φₙ.
    pub eigenvectors: DMatrix<f64>,
    pub grid: Grid1D,
}

impl SpectralBasis {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// φₙ as a field (0-based n).
    pub fn mode(&self, n: usize) -> Field {
        Field {
            values: self.eigenvectors.column(n).iter().copied().collect(),
            grid: self.grid,
        }
    }

    /// Spectral coordinates (v, φₙ)_h.
    pub fn coefficients(&self, v: &Field) -> Result<Vec<f64>> {
        self.grid.check_same(&v.grid)?;
        Ok(self.coefficients_raw(&v.values))
    }

    pub(crate) fn coefficients_raw(&self, v: &[f64]) -> Vec<f64> {
        let h = self.grid.spacing();
        let v = nalgebra::DVectorView::from_slice(v, v.len());
        (self.eigenvectors.tr_mul(&v) * h).iter().copied().collect()
    }

    /// Σₙ cₙ φₙ
    pub fn synthesize(&self, coefficients: &[f64]) -> Field {
        Field {
            values: self.synthesize_raw(coefficients),
            grid: self.grid,
        }
    }

    pub(crate) fn synthesize_raw(&self, coefficients: &[f64]) -> Vec<f64> {
        let c = nalgebra::DVectorView::from_slice(coefficients, coefficients.len());
        (&self.eigenvectors * c).iter().copied().collect()
    }

    /// Multiply mode n by `factor(n, λₙ)`.
    pub fn map_modes(&self, v: &Field, factor: impl Fn(usize, f64) -> f64) -> Result<Field> {
        let mut c = self.coefficients(v)?;
        for (n, (cn, &lambda)) in c.iter_mut().zip(&self.eigenvalues).enumerate() {
            *cn *= factor(n, lambda);
        }
        Ok(self.synthesize(&c))
    }
}

pub fn eigendecompose(op: &DiscreteOperator) -> Result<SpectralBasis> {
    let n = op.grid.n_interior();
    let h = op.grid.spacing();
    let a = op.a0_matrix();
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 100 * n).ok_or(Error::NonConvergence {
        what: "symmetric eigensolver",
        iterations: 100 * n,
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    // stable sort keeps index order for numerically tied eigenvalues
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

    let scale = 1.0 / h.sqrt();
    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        // high modes of variable-coefficient operators are localized, and
        // entries at rounding level must not decide the sign
        let first = first_significant(v.iter().copied());
        let sign = if first < 0.0 { -scale } else { scale };
        vectors.set_column(col, &(v * sign));
        values.push(eig.eigenvalues[k]);
    }
    if !(values[0] > 0.0) {
        return Err(crate::error::invalid(
            "a11",
            format!("principal part is not positive definite (smallest eigenvalue {})", values[0]),
        ));
    }
    Ok(SpectralBasis {
        eigenvalues: values,
        eigenvectors: vectors,
        grid: op.grid,
    })
}

pub(crate) const SIGN_THRESHOLD: f64 = 1e-8;

fn first_significant(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let peak = v.clone().fold(0.0, |m: f64, x| m.max(x.abs()));
    v.into_iter().find(|x| x.abs() > SIGN_THRESHOLD * peak).unwrap_or(1.0)
}

/// Σₙ λₙ^γ (v, φₙ)_h φₙ
pub fn frac_power_apply(basis: &SpectralBasis, gamma: f64, v: &Field) -> Result<Field> {
    if !(gamma >= 0.0) {
        return Err(crate::error::invalid("gamma", format!("{gamma} must be non-negative")));
    }
    if gamma == 0.0 {
        basis.grid.check_same(&v.grid)?;
        return Ok(v.clone());
    }
    basis.map_modes(v, |_, lambda| lambda.powf(gamma))
}
