use super::{FracOrder, SourceTerm, Trajectory};
use crate::elliptic::{norm_h, DiscreteOperator, Field};
use crate::error::{invalid, Result};
use crate::mittag_leffler::gamma_fn;

/// L1 approximation of the Caputo derivative of a scalar sequence g_0..g_M
/// on a uniform mesh of step τ. Entry m−1 approximates ∂ᵅg(t_m).
pub fn caputo_l1_scalar(values: &[f64], tau: f64, alpha: FracOrder) -> Result<Vec<f64>> {
    let m_steps = values.len().saturating_sub(1);
    if m_steps < 2 {
        return Err(invalid("M", "the L1 scheme needs at least two steps"));
    }
    let b = l1_weights(m_steps, alpha.value());
    let scale = tau.powf(-alpha.value()) / gamma_fn(2.0 - alpha.value())?;
    Ok((1..=m_steps)
        .map(|m| scale * (0..m).map(|j| b[j] * (values[m - j] - values[m - j - 1])).sum::<f64>())
        .collect())
}

/// b_j = (j+1)^{1−α} − j^{1−α}
fn l1_weights(count: usize, alpha: f64) -> Vec<f64> {
    (0..count)
        .map(|j| ((j + 1) as f64).powf(1.0 - alpha) - (j as f64).powf(1.0 - alpha))
        .collect()
}

/// L1 Caputo derivative of every node of a trajectory; entry m−1 belongs to
/// t_m (the derivative at t_0 is not defined by the scheme).
pub fn caputo_l1(traj: &Trajectory, alpha: FracOrder) -> Result<Vec<Field>> {
    let m_steps = traj.mesh.n_steps();
    if m_steps < 2 {
        return Err(invalid("M", "the L1 scheme needs at least two steps"));
    }
    let b = l1_weights(m_steps, alpha.value());
    let scale = traj.mesh.tau().powf(-alpha.value()) / gamma_fn(2.0 - alpha.value())?;
    let grid = traj.states[0].grid;
    let diffs: Vec<Vec<f64>> = (1..=m_steps)
        .map(|m| {
            let (u, v) = (&traj.states[m].values, &traj.states[m - 1].values);
            u.iter().zip(v).map(|(a, b)| a - b).collect()
        })
        .collect();
    Ok((1..=m_steps)
        .map(|m| {
            let mut acc = vec![0.0; grid.n_interior()];
            for j in 0..m {
                for (a, d) in acc.iter_mut().zip(&diffs[m - j - 1]) {
                    *a += b[j] * d;
                }
            }
            Field {
                values: acc.into_iter().map(|x| x * scale).collect(),
                grid,
            }
        })
        .collect())
}

/// max over nodes t_m, m ≥ 1, of ‖∂ᵅu_m + (A₀ − B)u_m − F_m‖_h with ∂ᵅ from
/// the L1 scheme.
pub fn residual_check(traj: &Trajectory, op: &DiscreteOperator, source: &SourceTerm, alpha: FracOrder) -> Result<f64> {
    residual_check_after(traj, op, source, alpha, 0.0)
}

/// As [`residual_check`], restricted to nodes t_m ≥ t_min. The L1 scheme is
/// only O(τ^α) accurate next to t = 0, where u has a t^α layer, so a window
/// away from the origin is what shrinks under refinement.
pub fn residual_check_after(
    traj: &Trajectory,
    op: &DiscreteOperator,
    source: &SourceTerm,
    alpha: FracOrder,
    t_min: f64,
) -> Result<f64> {
    let derivative = caputo_l1(traj, alpha)?;
    let grid = op.grid;
    let mut worst: f64 = 0.0;
    for (i, d) in derivative.iter().enumerate() {
        let m = i + 1;
        let t = traj.mesh.node(m);
        if t < t_min {
            continue;
        }
        let state = &traj.states[m];
        grid.check_same(&state.grid)?;
        let au = op.apply_full(&state.values);
        let f = source.at(&grid, t)?;
        let r = Field {
            values: (0..grid.n_interior()).map(|k| d.values[k] + au[k] - f.values[k]).collect(),
            grid,
        };
        worst = worst.max(norm_h(&r));
    }
    Ok(worst)
}
