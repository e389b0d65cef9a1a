//! The acceptance suite. Each criterion runs at fixed, documented sizes and
//! reports a pass flag, a one-line summary and a JSON block of the measured
//! quantities.

mod backward;
mod forward;
mod ml;

use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::elliptic::{assemble, eigendecompose, DiscreteOperator, EllipticCoefficients, Field, Grid1D, SpectralBasis};
use crate::error::Result;
use crate::evolution::{ForwardSolver, FracOrder, SourceTerm, TimeMesh};

pub use ml::{ML_ORACLE, ML_ORACLE_COMPLEX, ML_ORACLE_FAR};

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub summary: String,
    pub seconds: f64,
    pub details: Value,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} {:<24} {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.summary,
            self.seconds
        )
    }
}

pub const CRITERIA: [(u32, &str); 9] = [
    (1, "ml accuracy"),
    (2, "ml bound, monotonicity"),
    (3, "smoothing estimates"),
    (4, "forward solver"),
    (5, "backward round trip"),
    (6, "injectivity"),
    (7, "two-sided stability"),
    (8, "nonhomogeneous backward"),
    (9, "jordan uniqueness"),
];

/// Result of one criterion body: pass flag, summary, details.
type Body = Result<(bool, String, Value)>;

pub fn run(id: u32) -> Option<Outcome> {
    let (_, name) = *CRITERIA.iter().find(|(i, _)| *i == id)?;
    let start = Instant::now();
    let body: Body = match id {
        1 => ml::accuracy(),
        2 => ml::bound_and_monotonicity(),
        3 => forward::smoothing(),
        4 => forward::solver(),
        5 => backward::round_trip(),
        6 => backward::injectivity(),
        7 => backward::stability(),
        8 => backward::nonhomogeneous(),
        9 => backward::jordan(),
        _ => unreachable!(),
    };
    let (passed, summary, details) = match body {
        Ok(v) => v,
        Err(e) => (false, format!("error: {e}"), Value::Null),
    };
    Some(Outcome {
        id,
        name,
        passed,
        summary,
        seconds: start.elapsed().as_secs_f64(),
        details,
    })
}

pub fn run_all(mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    CRITERIA
        .iter()
        .map(|(id, _)| {
            let o = run(*id).expect("listed criterion");
            report(&o);
            o
        })
        .collect()
}

/// a₁₁ = 1 + x/2, b₁ = 1, c = −1 on (0, 1).
pub fn reference_coefficients() -> EllipticCoefficients {
    EllipticCoefficients::new(|x| 1.0 + x / 2.0, |_| 1.0, |_| -1.0, 1.0)
}

pub(crate) fn setup(coeffs: &EllipticCoefficients, n: usize) -> Result<(DiscreteOperator, SpectralBasis)> {
    let op = assemble(Grid1D::new(1.0, n)?, coeffs)?;
    let basis = eigendecompose(&op)?;
    Ok((op, basis))
}

/// u(T) on a grid with 4(N+1) − 1 interior nodes and `refine`·M steps,
/// sampled back at the N coarse nodes.
pub(crate) fn fine_terminal(
    coeffs: &EllipticCoefficients,
    n: usize,
    alpha: FracOrder,
    mesh: TimeMesh,
    refine: usize,
    a: impl Fn(f64) -> f64,
    source: &SourceTerm,
) -> Result<Field> {
    let (op, basis) = setup(coeffs, 4 * (n + 1) - 1)?;
    let fine_mesh = TimeMesh::new(mesh.horizon(), refine * mesh.n_steps())?;
    let solver = ForwardSolver::new(&op, &basis, alpha, fine_mesh)?;
    let u = solver.solve_final(&Field::from_fn(op.grid, a), source)?;
    let coarse = Grid1D::new(1.0, n)?;
    Field::new(coarse, (0..n).map(|i| u.values[4 * (i + 1) - 1]).collect())
}

pub(crate) fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}
