//! Solution operators S(t), K(t) and the forward problem
//!
//! ```text
//!   ∂ₜᵅu = −A₀u + Bu + F,   u(0) = a,
//! ```
//!
//! solved in the mild (Volterra) form u(t) = S(t)a + ∫₀ᵗ K(t−s)[F + Bu](s) ds.

mod caputo;
mod forward;

use std::io::Write;
use std::sync::Arc;

use crate::elliptic::{Field, Grid1D, SpectralBasis};
use crate::error::{invalid, Error, Result};
use crate::io::fmt_f64;
use crate::mittag_leffler::{ml_eval, MlParams};

pub use caputo::{caputo_l1, caputo_l1_scalar, residual_check, residual_check_after};
pub use forward::{forward_solve, ForwardSolver, TimeQuadrature};

/// Caputo order, strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder(f64);

impl FracOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 1)")));
        }
        Ok(Self(alpha))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeMesh {
    horizon: f64,
    n_steps: usize,
}

impl TimeMesh {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("T", format!("{horizon} must be positive")));
        }
        if n_steps == 0 {
            return Err(invalid("M", "need at least one time step"));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// t_m; the last node is exactly T.
    pub fn node(&self, m: usize) -> f64 {
        if m == self.n_steps {
            self.horizon
        } else {
            m as f64 * self.tau()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub mesh: TimeMesh,
    /// u(t_m) for m = 0..=M.
    pub states: Vec<Field>,
}

impl Trajectory {
    pub fn final_state(&self) -> &Field {
        self.states.last().expect("a trajectory has M+1 states")
    }

    /// Rows `t,x,u`, boundary zeros included.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,x,u")?;
        for (m, state) in self.states.iter().enumerate() {
            let t = fmt_f64(self.mesh.node(m));
            let zero = fmt_f64(0.0);
            writeln!(out, "{t},{zero},{zero}")?;
            for (x, v) in state.grid.nodes().zip(&state.values) {
                writeln!(out, "{t},{},{}", fmt_f64(x), fmt_f64(*v))?;
            }
            writeln!(out, "{t},{},{zero}", fmt_f64(state.grid.length()))?;
        }
        Ok(())
    }
}

type SourceFn = Arc<dyn Fn(&Grid1D, f64) -> Field + Send + Sync>;

/// Source F(·, t), sampled at mesh nodes by the solvers. `epsilon` records
/// the assumed regularity F(t) ∈ D(A₀^ε).
#[derive(Clone)]
pub struct SourceTerm {
    eval: Option<SourceFn>,
    pub epsilon: f64,
}

impl SourceTerm {
    pub fn new(epsilon: f64, f: impl Fn(&Grid1D, f64) -> Field + Send + Sync + 'static) -> Self {
        Self {
            eval: Some(Arc::new(f)),
            epsilon,
        }
    }

    pub fn zero() -> Self {
        Self {
            eval: None,
            epsilon: 0.0,
        }
    }

    /// F(x, t) = g(x) h(t)
    pub fn separable(
        epsilon: f64,
        space: impl Fn(f64) -> f64 + Send + Sync + 'static,
        time: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(epsilon, move |grid, t| {
            let s = time(t);
            Field::from_fn(*grid, |x| s * space(x))
        })
    }

    pub fn is_zero(&self) -> bool {
        self.eval.is_none()
    }

    pub fn at(&self, grid: &Grid1D, t: f64) -> Result<Field> {
        match &self.eval {
            None => Ok(Field::zeros(*grid)),
            Some(f) => {
                let v = f(grid, t);
                grid.check_same(&v.grid)?;
                Ok(v)
            }
        }
    }
}

impl std::fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SourceTerm")
            .field("zero", &self.is_zero())
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

/// S(t)a = Σ (a,φₙ) E_{α,1}(−λₙt^α) φₙ
pub fn apply_s(basis: &SpectralBasis, alpha: FracOrder, t: f64, a: &Field) -> Result<Field> {
    if !(t >= 0.0) {
        return Err(invalid("t", format!("{t} must be non-negative")));
    }
    if t == 0.0 {
        basis.grid.check_same(&a.grid)?;
        return Ok(a.clone());
    }
    let factors = mode_factors(basis, alpha.value(), 1.0, t)?;
    basis.map_modes(a, |n, _| factors[n])
}

/// K(t)a = Σ t^{α−1} E_{α,α}(−λₙt^α) (a,φₙ) φₙ
pub fn apply_k(basis: &SpectralBasis, alpha: FracOrder, t: f64, a: &Field) -> Result<Field> {
    if t == 0.0 {
        return Err(Error::KernelSingular);
    }
    if !(t > 0.0) {
        return Err(invalid("t", format!("{t} must be positive")));
    }
    let alpha = alpha.value();
    let scale = t.powf(alpha - 1.0);
    let factors = mode_factors(basis, alpha, alpha, t)?;
    basis.map_modes(a, |n, _| scale * factors[n])
}

/// E_{α,β}(−λₙt^α) for every mode.
pub(crate) fn mode_factors(basis: &SpectralBasis, alpha: f64, beta: f64, t: f64) -> Result<Vec<f64>> {
    let params = MlParams::new(alpha, beta)?;
    let ta = t.powf(alpha);
    basis
        .eigenvalues
        .iter()
        .map(|&lambda| Ok(ml_eval(params, -lambda * ta)?.value))
        .collect()
}
