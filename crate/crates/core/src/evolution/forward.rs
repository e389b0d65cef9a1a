use nalgebra::{DMatrix, DVector, LU};
use serde::{Deserialize, Serialize};

use super::{FracOrder, SourceTerm, TimeMesh, Trajectory};
use crate::elliptic::{DiscreteOperator, Field, SpectralBasis};
use crate::error::{Error, Result};
use crate::mittag_leffler::{ml_eval, MlParams};

/// Above this the implicit step matrix is treated as singular.
const STEP_CONDITION_LIMIT: f64 = 1e12;

/// How F + Bu is interpolated between mesh nodes before the kernel is
/// integrated against it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeQuadrature {
    /// frozen at the right end of each slab; first order
    Rectangle,
    /// piecewise linear; order 1 + α for data behaving like t^α
    #[default]
    Trapezoid,
}

/// Product-integration solver for the mild form on a fixed mesh, working in
/// the spectral coordinates of A₀. The kernel is integrated exactly, mode by
/// mode, against the interpolated data:
///
/// ```text
///   G(x) = ∫₀ˣ y^{α−1} E_{α,α}(−λy^α) dy = x^α E_{α,α+1}(−λx^α)
///   H(x) = ∫₀ˣ G(y) dy                   = x^{α+1} E_{α,α+2}(−λx^α)
/// ```
///
/// The rectangle weight of a slab at lag l is G(lτ) − G((l−1)τ); the
/// trapezoid weight of an interior node at lag q is the second difference
/// [H((q+1)τ) − 2H(qτ) + H((q−1)τ)]/τ.
///
/// The tables depend only on the mesh, so one solver serves any number of
/// initial data and sources.
#[derive(Debug)]
pub struct ForwardSolver {
    mesh: TimeMesh,
    basis: SpectralBasis,
    quadrature: TimeQuadrature,
    /// decay[m][n] = E_{α,1}(−λₙ t_m^α)
    decay: Vec<Vec<f64>>,
    /// interior[q][n]: weight of the node q steps back, for nodes after t₀
    interior: Vec<Vec<f64>>,
    /// endpoint[m][n]: weight of t₀ at step m (trapezoid only)
    endpoint: Vec<Vec<f64>>,
    /// hΦᵀBΦ, or None when B = 0
    b_hat: Option<DMatrix<f64>>,
    step: Option<LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    step_condition: f64,
}

impl ForwardSolver {
    pub fn new(op: &DiscreteOperator, basis: &SpectralBasis, alpha: FracOrder, mesh: TimeMesh) -> Result<Self> {
        Self::with_quadrature(op, basis, alpha, mesh, TimeQuadrature::default())
    }

    pub fn with_quadrature(
        op: &DiscreteOperator,
        basis: &SpectralBasis,
        alpha: FracOrder,
        mesh: TimeMesh,
        quadrature: TimeQuadrature,
    ) -> Result<Self> {
        op.grid.check_same(&basis.grid)?;
        let alpha = alpha.value();
        let n = basis.len();
        let m_steps = mesh.n_steps();
        let tau = mesh.tau();
        let trapezoid = quadrature == TimeQuadrature::Trapezoid;
        let relax = MlParams::new(alpha, 1.0)?;
        let first = MlParams::new(alpha, alpha + 1.0)?;
        let second = MlParams::new(alpha, alpha + 2.0)?;

        let mut decay = Vec::with_capacity(m_steps + 1);
        let mut g_tab = Vec::with_capacity(m_steps + 1);
        let mut h_tab = Vec::with_capacity(m_steps + 1);
        for m in 0..=m_steps {
            // the kernel tables use lτ rather than t_m so weights stay exact
            // differences on the uniform lattice
            let x = m as f64 * tau;
            let xa = x.powf(alpha);
            let mut e = Vec::with_capacity(n);
            let mut g = Vec::with_capacity(n);
            let mut h = Vec::with_capacity(n);
            for &lambda in &basis.eigenvalues {
                e.push(ml_eval(relax, -lambda * mesh.node(m).powf(alpha))?.value);
                if m == 0 {
                    g.push(0.0);
                    h.push(0.0);
                    continue;
                }
                g.push(xa * ml_eval(first, -lambda * xa)?.value);
                if trapezoid {
                    h.push(x * xa * ml_eval(second, -lambda * xa)?.value);
                }
            }
            decay.push(e);
            g_tab.push(g);
            h_tab.push(h);
        }

        let (interior, endpoint): (Vec<Vec<f64>>, Vec<Vec<f64>>) = if trapezoid {
            let interior = (0..m_steps)
                .map(|q| {
                    (0..n)
                        .map(|k| {
                            let below = if q == 0 { 0.0 } else { h_tab[q - 1][k] };
                            (h_tab[q + 1][k] - 2.0 * h_tab[q][k] + below) / tau
                        })
                        .collect()
                })
                .collect();
            let endpoint = (0..=m_steps)
                .map(|m| {
                    (0..n)
                        .map(|k| if m == 0 { 0.0 } else { g_tab[m][k] - (h_tab[m][k] - h_tab[m - 1][k]) / tau })
                        .collect()
                })
                .collect();
            (interior, endpoint)
        } else {
            let interior = (0..m_steps)
                .map(|q| (0..n).map(|k| g_tab[q + 1][k] - g_tab[q][k]).collect())
                .collect();
            (interior, Vec::new())
        };

        let (b_hat, step, step_condition) = if op.b.is_zero() {
            (None, None, 1.0)
        } else {
            let h = basis.grid.spacing();
            let phi = &basis.eigenvectors;
            let b_hat = phi.transpose() * op.b_matrix() * phi * h;
            let w0: &Vec<f64> = &interior[0];
            let mut step = -DMatrix::from_fn(n, n, |i, j| w0[i] * b_hat[(i, j)]);
            for i in 0..n {
                step[(i, i)] += 1.0;
            }
            let norm1 = one_norm(&step);
            let lu = step.lu();
            let inverse = lu.try_inverse().ok_or(Error::StepSolve {
                step: 1,
                condition: f64::INFINITY,
            })?;
            let condition = norm1 * one_norm(&inverse);
            if !(condition <= STEP_CONDITION_LIMIT) {
                return Err(Error::StepSolve { step: 1, condition });
            }
            (Some(b_hat), Some(lu), condition)
        };

        Ok(Self {
            mesh,
            basis: basis.clone(),
            quadrature,
            decay,
            interior,
            endpoint,
            b_hat,
            step,
            step_condition,
        })
    }

    pub fn quadrature(&self) -> TimeQuadrature {
        self.quadrature
    }

    pub fn mesh(&self) -> TimeMesh {
        self.mesh
    }

    pub fn basis(&self) -> &SpectralBasis {
        &self.basis
    }

    /// 1-norm condition number of the implicit step matrix I − diag(w₁)B̂.
    pub fn step_condition(&self) -> f64 {
        self.step_condition
    }

    /// E_{α,1}(−λₙT^α) for every mode.
    pub fn terminal_decay(&self) -> &[f64] {
        &self.decay[self.mesh.n_steps()]
    }

    /// Spectral coefficients of u(t_m) for m = 0..=M. `source` holds F̂ at
    /// every node including t₀, or is empty for F = 0.
    pub fn solve_coefficients(&self, a_hat: &[f64], source: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.basis.len();
        let m_steps = self.mesh.n_steps();
        let has_source = !source.is_empty();
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(m_steps + 1);
        states.push(a_hat.to_vec());
        // g_j = F̂_j + B̂û_j for j = 0..m−1
        let mut history: Vec<Vec<f64>> = Vec::with_capacity(m_steps + 1);
        history.push(self.coupling(a_hat, source.first()));
        for m in 1..=m_steps {
            let mut rhs: Vec<f64> = (0..n).map(|k| self.decay[m][k] * a_hat[k]).collect();
            if !self.endpoint.is_empty() {
                let w = &self.endpoint[m];
                for k in 0..n {
                    rhs[k] += w[k] * history[0][k];
                }
            }
            for (j, g) in history.iter().enumerate().skip(1) {
                let w = &self.interior[m - j];
                for k in 0..n {
                    rhs[k] += w[k] * g[k];
                }
            }
            if has_source {
                for k in 0..n {
                    rhs[k] += self.interior[0][k] * source[m][k];
                }
            }
            let u: Vec<f64> = match &self.step {
                Some(lu) => {
                    let sol = lu.solve(&DVector::from_vec(rhs)).expect("factorization checked at construction");
                    sol.iter().copied().collect()
                }
                None => rhs,
            };
            history.push(self.coupling(&u, source.get(m)));
            states.push(u);
        }
        states
    }

    fn coupling(&self, u: &[f64], f: Option<&Vec<f64>>) -> Vec<f64> {
        let mut g = f.cloned().unwrap_or_else(|| vec![0.0; u.len()]);
        if let Some(b_hat) = &self.b_hat {
            let bu = b_hat * DVector::from_column_slice(u);
            for (gk, bk) in g.iter_mut().zip(bu.iter()) {
                *gk += bk;
            }
        }
        g
    }

    /// Spectral coefficients of the source at every node, or an empty list
    /// for F = 0.
    pub fn source_coefficients(&self, source: &SourceTerm) -> Result<Vec<Vec<f64>>> {
        if source.is_zero() {
            return Ok(Vec::new());
        }
        (0..=self.mesh.n_steps())
            .map(|m| {
                let f = source.at(&self.basis.grid, self.mesh.node(m))?;
                self.basis.coefficients(&f)
            })
            .collect()
    }

    pub fn solve(&self, a: &Field, source: &SourceTerm) -> Result<Trajectory> {
        let a_hat = self.basis.coefficients(a)?;
        let f_hat = self.source_coefficients(source)?;
        let states = self
            .solve_coefficients(&a_hat, &f_hat)
            .iter()
            .enumerate()
            .map(|(m, c)| if m == 0 { a.clone() } else { self.basis.synthesize(c) })
            .collect();
        Ok(Trajectory {
            mesh: self.mesh,
            states,
        })
    }

    /// u(T) only.
    pub fn solve_final(&self, a: &Field, source: &SourceTerm) -> Result<Field> {
        let a_hat = self.basis.coefficients(a)?;
        let f_hat = self.source_coefficients(source)?;
        let states = self.solve_coefficients(&a_hat, &f_hat);
        Ok(self.basis.synthesize(states.last().expect("M ≥ 1")))
    }
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn forward_solve(
    op: &DiscreteOperator,
    basis: &SpectralBasis,
    alpha: FracOrder,
    a: &Field,
    source: &SourceTerm,
    mesh: TimeMesh,
) -> Result<Trajectory> {
    ForwardSolver::new(op, basis, alpha, mesh)?.solve(a, source)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{assemble, eigendecompose, norm_h, EllipticCoefficients, Grid1D};
    use crate::evolution::apply_s;

    fn setup(n: usize, b1: f64, c: f64) -> (DiscreteOperator, SpectralBasis) {
        let grid = Grid1D::new(1.0, n).unwrap();
        let coeffs = EllipticCoefficients::new(|x| 1.0 + x / 2.0, move |_| b1, move |_| c, 1.0);
        let op = assemble(grid, &coeffs).unwrap();
        let basis = eigendecompose(&op).unwrap();
        (op, basis)
    }

    #[test]
    fn unperturbed_solve_is_s() {
        let (op, basis) = setup(20, 0.0, 0.0);
        let alpha = FracOrder::new(0.5).unwrap();
        let mesh = TimeMesh::new(1.0, 16).unwrap();
        let a = Field::from_fn(op.grid, |x| x * (1.0 - x) * (3.0 * x).cos());
        let traj = forward_solve(&op, &basis, alpha, &a, &SourceTerm::zero(), mesh).unwrap();
        for m in 0..=16 {
            let s = apply_s(&basis, alpha, mesh.node(m), &a).unwrap();
            assert!(norm_h(&traj.states[m].sub(&s).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn zero_data_stays_zero() {
        let (op, basis) = setup(12, 1.0, -1.0);
        let alpha = FracOrder::new(0.3).unwrap();
        let mesh = TimeMesh::new(2.0, 10).unwrap();
        let traj = forward_solve(&op, &basis, alpha, &Field::zeros(op.grid), &SourceTerm::zero(), mesh).unwrap();
        assert!(traj.states.iter().all(|s| s.values.iter().all(|&v| v == 0.0)));
        assert_eq!(traj.states.len(), 11);
    }

    /// With B = 0 and F constant on each slab the scheme integrates exactly.
    /// Reference: the slab weights written as differences of E_{α,1}.
    #[test]
    fn piecewise_constant_source_is_integrated_exactly() {
        let (op, basis) = setup(10, 0.0, 0.0);
        let alpha = 0.6;
        let mesh = TimeMesh::new(0.5, 8).unwrap();
        let level = |t: f64| (1.0 + (t * 16.0).ceil()).sqrt();
        let source = SourceTerm::separable(0.0, |x| (std::f64::consts::PI * x).sin(), level);
        let a = Field::from_fn(op.grid, |x| x * (1.0 - x));
        let solver =
            ForwardSolver::with_quadrature(&op, &basis, FracOrder::new(alpha).unwrap(), mesh, TimeQuadrature::Rectangle)
                .unwrap();
        let traj = solver.solve(&a, &source).unwrap();

        let p = MlParams::new(alpha, 1.0).unwrap();
        let e = |lambda: f64, t: f64| ml_eval(p, -lambda * t.powf(alpha)).unwrap().value;
        let a_hat = basis.coefficients(&a).unwrap();
        let g_hat = basis.coefficients(&Field::from_fn(op.grid, |x| (std::f64::consts::PI * x).sin())).unwrap();
        let tau = mesh.tau();
        for m in 1..=8 {
            let t = mesh.node(m);
            let coeffs: Vec<f64> = (0..basis.len())
                .map(|k| {
                    let lambda = basis.eigenvalues[k];
                    let mut u = e(lambda, t) * a_hat[k];
                    for j in 0..m {
                        let w = (e(lambda, t - (j + 1) as f64 * tau) - e(lambda, t - j as f64 * tau)) / lambda;
                        u += w * level((j + 1) as f64 * tau) * g_hat[k];
                    }
                    u
                })
                .collect();
            let want = basis.synthesize(&coeffs);
            let err = norm_h(&traj.states[m].sub(&want).unwrap());
            assert!(err < 1e-10 * norm_h(&want), "m={m} err={err}");
        }
    }

    /// With B = 0 and F linear in t the trapezoid rule is exact. Reference:
    /// ∫₀ᵗ K(t−s)(c₀ + c₁s) ds = c₀(1 − E_{α,1}(−λt^α))/λ + c₁t(1 − E_{α,2}(−λt^α))/λ.
    #[test]
    fn linear_source_is_integrated_exactly() {
        let (op, basis) = setup(10, 0.0, 0.0);
        let alpha = 0.35;
        let mesh = TimeMesh::new(0.8, 12).unwrap();
        let source = SourceTerm::separable(0.0, |x| x * x * (1.0 - x), |t| 2.0 - 3.0 * t);
        let a = Field::from_fn(op.grid, |x| (2.0 * std::f64::consts::PI * x).sin());
        let traj = forward_solve(&op, &basis, FracOrder::new(alpha).unwrap(), &a, &source, mesh).unwrap();

        let e1 = MlParams::new(alpha, 1.0).unwrap();
        let e2 = MlParams::new(alpha, 2.0).unwrap();
        let a_hat = basis.coefficients(&a).unwrap();
        let g_hat = basis.coefficients(&Field::from_fn(op.grid, |x| x * x * (1.0 - x))).unwrap();
        for m in 1..=12 {
            let t = mesh.node(m);
            let coeffs: Vec<f64> = (0..basis.len())
                .map(|k| {
                    let lambda = basis.eigenvalues[k];
                    let z = -lambda * t.powf(alpha);
                    let r1 = ml_eval(e1, z).unwrap().value;
                    let r2 = ml_eval(e2, z).unwrap().value;
                    r1 * a_hat[k] + g_hat[k] * (2.0 * (1.0 - r1) - 3.0 * t * (1.0 - r2)) / lambda
                })
                .collect();
            let want = basis.synthesize(&coeffs);
            let err = norm_h(&traj.states[m].sub(&want).unwrap());
            assert!(err < 1e-10 * norm_h(&want), "m={m} err={err}");
        }
    }

    #[test]
    fn step_condition_is_reported() {
        let (op, basis) = setup(16, 1.0, -1.0);
        let solver = ForwardSolver::new(&op, &basis, FracOrder::new(0.5).unwrap(), TimeMesh::new(1.0, 32).unwrap()).unwrap();
        assert!(solver.step_condition() >= 1.0 && solver.step_condition() < 10.0);
    }
}
