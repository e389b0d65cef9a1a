use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::mittag_leffler::{ml_eval_complex, ml_matrix, JordanBlock, MlParams};

/// Diagonal entries smaller than this count as a uniqueness counterexample.
pub const DIAGONAL_TOL: f64 = 1e-8;
/// Allowed |matrix diagonal − scalar E_{α,1}(−μT^α)|, relative.
pub const DIAGONAL_MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct JordanReport {
    pub alpha: f64,
    pub t: f64,
    pub block: JordanBlock,
    /// E_{α,1}(−μT^α) as [re, im]
    pub scalar: [f64; 2],
    pub diagonal_error: f64,
    /// largest |entry| strictly below the diagonal
    pub lower_defect: f64,
    pub min_abs_diagonal: f64,
    /// ‖x‖ after back substitution on M_T x = 0
    pub zero_solution_norm: f64,
    /// relative error recovering known coefficients c from M_T c
    pub recovery_error: f64,
    pub unique: bool,
    /// diagonal > 0, real μ only
    pub positive_diagonal: Option<bool>,
}

impl JordanReport {
    pub fn passed(&self) -> bool {
        self.unique
            && self.lower_defect == 0.0
            && self.diagonal_error <= DIAGONAL_MATCH_TOL
            && self.positive_diagonal != Some(false)
    }
}

fn back_substitute(m: &DMatrix<Complex64>, rhs: &[Complex64]) -> Vec<Complex64> {
    let d = rhs.len();
    let mut x = vec![Complex64::new(0.0, 0.0); d];
    for i in (0..d).rev() {
        let mut acc = rhs[i];
        for j in i + 1..d {
            acc -= m[(i, j)] * x[j];
        }
        x[i] = acc / m[(i, i)];
    }
    x
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Checks that u(T) = 0 forces every coefficient of the generalized
/// eigenvectors of one Jordan block to vanish.
pub fn jordan_uniqueness_check(alpha: f64, t: f64, block: JordanBlock) -> Result<JordanReport> {
    let m = ml_matrix(alpha, block, t)?;
    let d = block.size;
    let scalar = ml_eval_complex(MlParams::new(alpha, 1.0)?, -block.mu * t.powf(alpha))?;

    let mut lower_defect: f64 = 0.0;
    let mut diagonal_error: f64 = 0.0;
    let mut min_abs_diagonal = f64::INFINITY;
    for i in 0..d {
        for j in 0..i {
            lower_defect = lower_defect.max(m[(i, j)].norm());
        }
        diagonal_error = diagonal_error.max((m[(i, i)] - scalar).norm() / scalar.norm());
        min_abs_diagonal = min_abs_diagonal.min(m[(i, i)].norm());
    }
    let unique = min_abs_diagonal > DIAGONAL_TOL;

    let zero = vec![Complex64::new(0.0, 0.0); d];
    let zero_solution_norm = if unique { norm(&back_substitute(&m, &zero)) } else { f64::NAN };

    let known: Vec<Complex64> = (0..d)
        .map(|k| Complex64::new(1.0 + k as f64, if k % 2 == 0 { 0.5 } else { -0.5 }))
        .collect();
    let rhs: Vec<Complex64> = (0..d).map(|i| (i..d).map(|j| m[(i, j)] * known[j]).sum()).collect();
    let recovered = back_substitute(&m, &rhs);
    let diff: Vec<Complex64> = recovered.iter().zip(&known).map(|(a, b)| a - b).collect();
    let recovery_error = norm(&diff) / norm(&known);

    let positive_diagonal = (block.mu.im == 0.0).then(|| (0..d).all(|i| m[(i, i)].re > 0.0 && m[(i, i)].im == 0.0));

    Ok(JordanReport {
        alpha,
        t,
        block,
        scalar: [scalar.re, scalar.im],
        diagonal_error,
        lower_defect,
        min_abs_diagonal,
        zero_solution_norm,
        recovery_error,
        unique,
        positive_diagonal,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct JordanSweep {
    pub t: f64,
    pub alphas: Vec<f64>,
    pub n_blocks: usize,
    pub min_abs_diagonal: f64,
    /// (α, μ as [re, im]) where the minimum occurs
    pub argmin: (f64, [f64; 2]),
    pub max_diagonal_error: f64,
    pub max_recovery_error: f64,
    pub all_unique: bool,
    pub all_real_positive: bool,
    pub failures: Vec<JordanReport>,
}

impl JordanSweep {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.min_abs_diagonal > DIAGONAL_TOL
    }
}

/// μ = r e^{iθ} with r log-spaced on [0.1, 100] and θ uniform on
/// [−1.2, 1.2], plus the given real eigenvalues, for block sizes 1..=max_size.
pub fn jordan_sweep(alphas: &[f64], t: f64, real_mu: &[f64], max_size: usize, n_radii: usize, n_angles: usize) -> Result<JordanSweep> {
    if n_radii < 2 || n_angles < 2 {
        return Err(invalid("sweep", "need at least two radii and two angles"));
    }
    let mut mus: Vec<Complex64> = real_mu.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    for i in 0..n_radii {
        let r = 0.1 * 1000f64.powf(i as f64 / (n_radii - 1) as f64);
        for j in 0..n_angles {
            let theta = -1.2 + 2.4 * j as f64 / (n_angles - 1) as f64;
            mus.push(Complex64::from_polar(r, theta));
        }
    }

    let mut sweep = JordanSweep {
        t,
        alphas: alphas.to_vec(),
        n_blocks: 0,
        min_abs_diagonal: f64::INFINITY,
        argmin: (f64::NAN, [f64::NAN; 2]),
        max_diagonal_error: 0.0,
        max_recovery_error: 0.0,
        all_unique: true,
        all_real_positive: true,
        failures: Vec::new(),
    };
    for &alpha in alphas {
        for &mu in &mus {
            for size in 1..=max_size {
                let r = jordan_uniqueness_check(alpha, t, JordanBlock::new(mu, size)?)?;
                sweep.n_blocks += 1;
                if r.min_abs_diagonal < sweep.min_abs_diagonal {
                    sweep.min_abs_diagonal = r.min_abs_diagonal;
                    sweep.argmin = (alpha, [mu.re, mu.im]);
                }
                sweep.max_diagonal_error = sweep.max_diagonal_error.max(r.diagonal_error);
                sweep.max_recovery_error = sweep.max_recovery_error.max(r.recovery_error);
                sweep.all_unique &= r.unique;
                sweep.all_real_positive &= r.positive_diagonal != Some(false);
                if !r.passed() {
                    sweep.failures.push(r);
                }
            }
        }
    }
    Ok(sweep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mittag_leffler::ml_eval;

    #[test]
    fn scalar_block_is_positive() {
        let r = jordan_uniqueness_check(0.5, 1.0, JordanBlock::new(Complex64::new(9.87, 0.0), 1).unwrap()).unwrap();
        let want = ml_eval(MlParams::new(0.5, 1.0).unwrap(), -9.87).unwrap().value;
        assert!((r.scalar[0] - want).abs() < 1e-15);
        assert_eq!(r.positive_diagonal, Some(true));
        assert!(r.passed());
    }

    #[test]
    fn size_three_has_only_the_zero_solution() {
        let lambda2 = 4.0 * std::f64::consts::PI.powi(2);
        let r = jordan_uniqueness_check(0.3, 1.0, JordanBlock::new(Complex64::new(lambda2, 0.0), 3).unwrap()).unwrap();
        assert!(r.unique);
        assert_eq!(r.zero_solution_norm, 0.0);
        assert!(r.recovery_error < 1e-12);
        assert!(r.passed());
    }

    #[test]
    fn small_sweep() {
        let s = jordan_sweep(&[0.3, 0.8], 1.0, &[9.87], 3, 4, 5).unwrap();
        assert_eq!(s.n_blocks, 2 * 21 * 3);
        assert!(s.passed(), "{:?}", s.failures);
        assert!(s.min_abs_diagonal > 1e-4);
    }
}
