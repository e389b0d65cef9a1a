//! Terminal-value problem: recover u(0) = a from u(T) = b.
//!
//! With p = S(T)⁻¹b and La = S(T)⁻¹(u_a(T) − S(T)a), the initial value
//! solves the second-kind system (I + L)a = p. L is assembled densely from
//! one forward solve per nodal unit vector.

mod jordan;
mod stability;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::elliptic::{norm_h, DiscreteOperator, Field, SpectralBasis};
use crate::error::{Error, Result};
use crate::evolution::{mode_factors, ForwardSolver, FracOrder, SourceTerm, TimeMesh, TimeQuadrature};

pub use jordan::{jordan_sweep, jordan_uniqueness_check, JordanReport, JordanSweep};
pub use stability::{estimate_stability, Horizon, SampleKind, StabilityReport, StabilitySample};

/// Condition numbers of I + L above this are refused.
pub const NEAR_SINGULAR: f64 = 1e12;
/// Required ‖(I+L)a − p‖ / ‖p‖.
pub const FREDHOLM_TOL: f64 = 1e-10;
/// Environment variable capping the threads used for column solves.
pub const THREADS_ENV: &str = "FRACBACK_THREADS";

#[derive(Debug, Clone)]
pub struct BackwardProblem {
    pub op: DiscreteOperator,
    pub basis: SpectralBasis,
    pub alpha: FracOrder,
    pub terminal_data: Field,
    pub source: Option<SourceTerm>,
    pub mesh: TimeMesh,
    /// Keep only the first `k` modes of p. Off unless set.
    pub spectral_cutoff: Option<usize>,
    pub quadrature: TimeQuadrature,
}

#[derive(Debug, Clone)]
pub struct SInverse {
    pub field: Field,
    /// max over modes of 1 / E_{α,1}(−λₙT^α)
    pub max_amplification: f64,
}

/// Σₙ (b,φₙ)_h / E_{α,1}(−λₙT^α) φₙ
pub fn s_inverse(basis: &SpectralBasis, alpha: FracOrder, t: f64, b: &Field) -> Result<SInverse> {
    if !(t > 0.0) {
        return Err(crate::error::invalid("T", format!("{t} must be positive")));
    }
    let decay = mode_factors(basis, alpha.value(), 1.0, t)?;
    s_inverse_with(basis, &decay, b, None)
}

fn s_inverse_with(basis: &SpectralBasis, decay: &[f64], b: &Field, cutoff: Option<usize>) -> Result<SInverse> {
    let mut max_amplification: f64 = 0.0;
    for (mode, &e) in decay.iter().enumerate() {
        if !(e > f64::MIN_POSITIVE) {
            return Err(Error::DegenerateDenominator { mode, value: e });
        }
        max_amplification = max_amplification.max(1.0 / e);
    }
    let keep = cutoff.unwrap_or(usize::MAX);
    let field = basis.map_modes(b, |n, _| if n < keep { 1.0 / decay[n] } else { 0.0 })?;
    Ok(SInverse {
        field,
        max_amplification,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LMatrix {
    #[serde(skip)]
    pub entries: DMatrix<f64>,
    pub n_interior: usize,
    pub n_steps: usize,
    pub horizon: f64,
    /// 2-norm condition number of I + L.
    pub condition_estimate: f64,
    /// Singular values of L, descending.
    pub singular_values: Vec<f64>,
    /// Smallest singular value of I + L.
    pub min_singular_value: f64,
}

/// Runs `f` on a pool capped by [`THREADS_ENV`] when it is set.
fn with_column_pool<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    let cap = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok());
    match cap.filter(|&n| n > 0) {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}

pub fn assemble_l(op: &DiscreteOperator, basis: &SpectralBasis, alpha: FracOrder, mesh: TimeMesh) -> Result<LMatrix> {
    let solver = ForwardSolver::new(op, basis, alpha, mesh)?;
    assemble_l_with(&solver, op.b.is_zero())
}

fn assemble_l_with(solver: &ForwardSolver, unperturbed: bool) -> Result<LMatrix> {
    let basis = solver.basis();
    let n = basis.len();
    let mesh = solver.mesh();
    let entries = if unperturbed {
        DMatrix::zeros(n, n)
    } else {
        let decay = solver.terminal_decay();
        let h = basis.grid.spacing();
        let columns: Vec<Vec<f64>> = with_column_pool(|| {
            (0..n)
                .into_par_iter()
                .map(|k| {
                    // spectral coordinates of the nodal unit vector e_k
                    let a_hat: Vec<f64> = basis.eigenvectors.row(k).iter().map(|v| v * h).collect();
                    let states = solver.solve_coefficients(&a_hat, &[]);
                    let u_hat = states.last().expect("M ≥ 1");
                    let p_hat: Vec<f64> = u_hat.iter().zip(decay).map(|(u, e)| u / e).collect();
                    let mut col = basis.synthesize_raw(&p_hat);
                    col[k] -= 1.0;
                    if col.iter().all(|v| v.is_finite()) {
                        Ok(col)
                    } else {
                        Err(Error::Column {
                            column: k,
                            source: Box::new(Error::NonConvergence {
                                what: "forward solve for L column",
                                iterations: mesh.n_steps(),
                            }),
                        })
                    }
                })
                .collect::<Result<_>>()
        })?;
        DMatrix::from_fn(n, n, |i, j| columns[j][i])
    };

    let singular_values = sorted_desc(entries.clone().singular_values().iter().copied().collect());
    let i_plus_l = &entries + DMatrix::identity(n, n);
    let s = sorted_desc(i_plus_l.singular_values().iter().copied().collect());
    let min_singular_value = *s.last().expect("N ≥ 2");
    Ok(LMatrix {
        entries,
        n_interior: n,
        n_steps: mesh.n_steps(),
        horizon: mesh.horizon(),
        condition_estimate: s[0] / min_singular_value,
        singular_values,
        min_singular_value,
    })
}

fn sorted_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// ‖(I+L)a − p‖_h / ‖p‖_h
    pub fredholm_relative_residual: f64,
    /// ‖u_a(T) − b‖_h from an independent forward solve
    pub terminal_residual: f64,
    pub cert_tol: f64,
    pub condition_estimate: f64,
    pub min_singular_value: f64,
    pub max_amplification: f64,
    pub step_condition: f64,
}

#[derive(Debug, Clone)]
pub struct BackwardSolution {
    pub initial: Field,
    pub certificate: Certificate,
    pub l_matrix: LMatrix,
}

/// Allowed terminal mismatch: a fixed relative part plus a small slack that
/// shrinks with the mesh.
pub fn cert_tol(b: &Field, mesh: &TimeMesh) -> f64 {
    let h = b.grid.spacing();
    norm_h(b) * (1e-6 + 1e-3 * (mesh.tau() + h * h))
}

/// Homogeneous problem (F = 0).
pub fn backward_solve(problem: &BackwardProblem) -> Result<BackwardSolution> {
    let solver = ForwardSolver::with_quadrature(&problem.op, &problem.basis, problem.alpha, problem.mesh, problem.quadrature)?;
    let zero = SourceTerm::zero();
    solve_with(problem, &solver, &problem.terminal_data, &zero, &problem.terminal_data)
}

/// Split u = v + w with w solving the forward problem from 0 with source F,
/// and v the homogeneous backward problem for b − w(T).
pub fn backward_solve_nonhomogeneous(problem: &BackwardProblem) -> Result<BackwardSolution> {
    let source = problem.source.clone().unwrap_or_else(SourceTerm::zero);
    if !source.is_zero() && !(source.epsilon > 0.0) {
        return Err(crate::error::invalid("source.epsilon", "needs a positive regularity tag"));
    }
    let solver = ForwardSolver::with_quadrature(&problem.op, &problem.basis, problem.alpha, problem.mesh, problem.quadrature)?;
    let w_t = solver.solve_final(&Field::zeros(problem.op.grid), &source)?;
    let shifted = problem.terminal_data.sub(&w_t)?;
    solve_with(problem, &solver, &shifted, &source, &problem.terminal_data)
}

fn solve_with(
    problem: &BackwardProblem,
    solver: &ForwardSolver,
    homogeneous_data: &Field,
    source: &SourceTerm,
    b: &Field,
) -> Result<BackwardSolution> {
    problem.op.grid.check_same(&b.grid)?;
    let p = s_inverse_with(&problem.basis, solver.terminal_decay(), homogeneous_data, problem.spectral_cutoff)?;
    let l = assemble_l_with(solver, problem.op.b.is_zero())?;
    if !(l.condition_estimate <= NEAR_SINGULAR) {
        return Err(Error::NearSingular {
            condition: l.condition_estimate,
        });
    }
    let n = l.n_interior;
    let system = &l.entries + DMatrix::identity(n, n);
    let rhs = DVector::from_column_slice(&p.field.values);
    let a = system.clone().lu().solve(&rhs).ok_or(Error::NearSingular {
        condition: f64::INFINITY,
    })?;
    let residual = Field::new(b.grid, (&system * &a - &rhs).iter().copied().collect())?;
    let p_norm = norm_h(&p.field);
    let fredholm = if p_norm > 0.0 { norm_h(&residual) / p_norm } else { norm_h(&residual) };

    let initial = Field::new(b.grid, a.iter().copied().collect())?;
    let reproduced = solver.solve_final(&initial, source)?;
    let terminal_residual = norm_h(&reproduced.sub(b)?);
    let tol = cert_tol(b, &problem.mesh);
    let certificate = Certificate {
        fredholm_relative_residual: fredholm,
        terminal_residual,
        cert_tol: tol,
        condition_estimate: l.condition_estimate,
        min_singular_value: l.min_singular_value,
        max_amplification: p.max_amplification,
        step_condition: solver.step_condition(),
    };
    if fredholm > FREDHOLM_TOL {
        return Err(Error::Certificate {
            residual: fredholm,
            tolerance: FREDHOLM_TOL,
        });
    }
    if terminal_residual > tol {
        return Err(Error::Certificate {
            residual: terminal_residual,
            tolerance: tol,
        });
    }
    Ok(BackwardSolution {
        initial,
        certificate,
        l_matrix: l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{assemble, eigendecompose, EllipticCoefficients, Grid1D};
    use crate::evolution::{apply_s, forward_solve};
    use crate::mittag_leffler::{ml_eval, MlParams};
    use std::f64::consts::PI;

    fn setup(n: usize, scale: f64) -> (DiscreteOperator, SpectralBasis) {
        let grid = Grid1D::new(1.0, n).unwrap();
        let coeffs = EllipticCoefficients::new(|x| 1.0 + x / 2.0, |_| 1.0, |_| -1.0, 1.0).scale_perturbation(scale);
        let op = assemble(grid, &coeffs).unwrap();
        let basis = eigendecompose(&op).unwrap();
        (op, basis)
    }

    fn problem(op: &DiscreteOperator, basis: &SpectralBasis, alpha: f64, b: Field, m: usize) -> BackwardProblem {
        BackwardProblem {
            op: op.clone(),
            basis: basis.clone(),
            alpha: FracOrder::new(alpha).unwrap(),
            terminal_data: b,
            source: None,
            mesh: TimeMesh::new(1.0, m).unwrap(),
            spectral_cutoff: None,
            quadrature: TimeQuadrature::default(),
        }
    }

    #[test]
    fn s_inverse_undoes_s() {
        let (_, basis) = setup(20, 0.0);
        let alpha = FracOrder::new(0.5).unwrap();
        let a = Field::from_fn(basis.grid, |x| x * (1.0 - x).powi(2));
        let b = apply_s(&basis, alpha, 1.0, &a).unwrap();
        let back = s_inverse(&basis, alpha, 1.0, &b).unwrap();
        assert!(norm_h(&back.field.sub(&a).unwrap()) < 1e-9 * norm_h(&a));

        let phi = basis.mode(0);
        let e = ml_eval(MlParams::new(0.5, 1.0).unwrap(), -basis.eigenvalues[0]).unwrap().value;
        let got = s_inverse(&basis, alpha, 1.0, &phi).unwrap().field;
        assert!(norm_h(&got.sub(&phi.scaled(1.0 / e)).unwrap()) < 1e-12 / e);
    }

    /// 1/E_{α,1}(−η) ~ ηΓ(1−α) for large η.
    #[test]
    fn amplification_grows_linearly_in_lambda() {
        let (_, basis) = setup(63, 0.0);
        let alpha = 0.4;
        let t: f64 = 1.0;
        let r = s_inverse(&basis, FracOrder::new(alpha).unwrap(), t, &basis.mode(0)).unwrap();
        let lambda_max = basis.eigenvalues[62];
        let leading = lambda_max * t.powf(alpha) * libm::tgamma(1.0 - alpha);
        assert!((r.max_amplification / leading - 1.0).abs() < 0.05);
    }

    #[test]
    fn no_perturbation_gives_zero_l() {
        let (op, basis) = setup(12, 0.0);
        let l = assemble_l(&op, &basis, FracOrder::new(0.5).unwrap(), TimeMesh::new(1.0, 16).unwrap()).unwrap();
        assert!(l.entries.iter().all(|&v| v == 0.0));
        assert_eq!(l.min_singular_value, 1.0);
    }

    #[test]
    fn l_is_first_order_in_b_and_compact_looking() {
        let alpha = FracOrder::new(0.5).unwrap();
        let mesh = TimeMesh::new(1.0, 32).unwrap();
        let mut defects = Vec::new();
        for eps in [0.02, 0.01] {
            let (op1, basis) = setup(16, eps);
            let (op2, _) = setup(16, 2.0 * eps);
            let l1 = assemble_l(&op1, &basis, alpha, mesh).unwrap().entries;
            let l2 = assemble_l(&op2, &basis, alpha, mesh).unwrap().entries;
            defects.push((l2 - l1 * 2.0).norm());
        }
        // quadratic defect: halving ε quarters it
        let ratio = defects[0] / defects[1];
        assert!(ratio > 3.5 && ratio < 4.5, "{ratio}");

        let (op, basis) = setup(32, 1.0);
        let l = assemble_l(&op, &basis, alpha, mesh).unwrap();
        let s = &l.singular_values;
        assert!(s[31] / s[0] < 1e-2, "{:?}", s);
        assert!(l.min_singular_value > 0.0);
    }

    #[test]
    fn unperturbed_backward_solve_is_s_inverse() {
        let (op, basis) = setup(16, 0.0);
        let b = Field::from_fn(op.grid, |x| (PI * x).sin());
        let sol = backward_solve(&problem(&op, &basis, 0.5, b.clone(), 8)).unwrap();
        let direct = s_inverse(&basis, FracOrder::new(0.5).unwrap(), 1.0, &b).unwrap();
        assert_eq!(sol.initial.values, direct.field.values);
    }

    #[test]
    fn round_trip_on_own_discretization() {
        let (op, basis) = setup(24, 1.0);
        let alpha = FracOrder::new(0.5).unwrap();
        let mesh = TimeMesh::new(1.0, 64).unwrap();
        let a = Field::from_fn(op.grid, |x| (PI * x).sin());
        let b = forward_solve(&op, &basis, alpha, &a, &SourceTerm::zero(), mesh).unwrap().final_state().clone();
        let sol = backward_solve(&problem(&op, &basis, 0.5, b, 64)).unwrap();
        assert!(norm_h(&sol.initial.sub(&a).unwrap()) < 1e-9);
        assert!(sol.certificate.fredholm_relative_residual < 1e-12);
    }

    #[test]
    fn nonhomogeneous_zero_reconstruction() {
        let (op, basis) = setup(24, 1.0);
        let alpha = FracOrder::new(0.7).unwrap();
        let mesh = TimeMesh::new(1.0, 32).unwrap();
        let source = SourceTerm::separable(0.5, |x| (PI * x).sin(), |_| 1.0);
        let w = forward_solve(&op, &basis, alpha, &Field::zeros(op.grid), &source, mesh).unwrap();
        let mut p = problem(&op, &basis, 0.7, w.final_state().clone(), 32);
        p.source = Some(source);
        let sol = backward_solve_nonhomogeneous(&p).unwrap();
        assert!(norm_h(&sol.initial) < 1e-10);

        // F = 0 agrees with the homogeneous solver
        p.source = Some(SourceTerm::zero());
        let a = backward_solve_nonhomogeneous(&p).unwrap().initial;
        let b = backward_solve(&p).unwrap().initial;
        assert_eq!(a.values, b.values);
    }

    #[test]
    fn cutoff_drops_high_modes() {
        let (op, basis) = setup(16, 1.0);
        let b = Field::from_fn(op.grid, |x| (PI * x).sin() + 0.1 * (9.0 * PI * x).sin());
        let mut p = problem(&op, &basis, 0.5, b, 16);
        p.spectral_cutoff = Some(4);
        // the certificate cannot hold once data are discarded
        assert!(matches!(backward_solve(&p), Err(Error::Certificate { .. })));
    }
}
