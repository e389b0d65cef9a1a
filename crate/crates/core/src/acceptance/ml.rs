use serde_json::json;

use super::Body;
use crate::error::Result;
use crate::mittag_leffler::{ml_bound_check, ml_eval, MlParams};

/// alpha,beta,z,value on a 2000-point grid of [−100, 2], 50 digits.
pub const ML_ORACLE: &str = include_str!("../../data/ml_oracle.csv");
/// Far negative arguments and the positive end of the domain.
pub const ML_ORACLE_FAR: &str = include_str!("../../data/ml_oracle_far.csv");
/// alpha,beta,z_re,z_im,value_re,value_im
pub const ML_ORACLE_COMPLEX: &str = include_str!("../../data/ml_oracle_complex.csv");

const ALPHAS: [f64; 4] = [0.25, 0.5, 0.75, 0.95];

pub(crate) fn oracle_rows(text: &str) -> impl Iterator<Item = Vec<f64>> + '_ {
    text.lines()
        .skip(1)
        .filter(|l| !l.is_empty())
        .map(|l| l.split(',').map(|f| f.parse().unwrap_or(f64::NAN)).collect())
}

pub(super) fn accuracy() -> Body {
    let mut per_pair = Vec::new();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for &alpha in &ALPHAS {
        for beta in [alpha, 1.0] {
            let params = MlParams::new(alpha, beta)?;
            let mut pair_worst: f64 = 0.0;
            let mut pair_count = 0;
            for r in oracle_rows(ML_ORACLE).filter(|r| r[0] == alpha && r[1] == beta) {
                let got = ml_eval(params, r[2])?.value;
                pair_worst = pair_worst.max(((got - r[3]) / r[3]).abs());
                pair_count += 1;
            }
            worst = worst.max(pair_worst);
            count += pair_count;
            per_pair.push(json!({"alpha": alpha, "beta": beta, "points": pair_count, "max_rel_error": pair_worst}));
        }
    }
    let passed = count == 16_000 && worst <= 1e-10;
    Ok((
        passed,
        format!("max rel error {worst:.2e} over {count} points (need <= 1e-10)"),
        json!({"points": count, "max_rel_error": worst, "pairs": per_pair}),
    ))
}

/// {0} ∪ 9999 log-spaced points in [1e−3, 1e6].
pub(crate) fn eta_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend((0..9999).map(|i| 10f64.powf(-3.0 + 9.0 * i as f64 / 9998.0)));
    g
}

pub(crate) struct Monotonicity {
    pub positive: bool,
    pub decreasing: bool,
    /// divided differences negative and increasing
    pub convex: bool,
}

/// The grid is not uniform, so first differences are taken as divided
/// differences.
pub(crate) fn monotonicity(params: MlParams, grid: &[f64]) -> Result<Monotonicity> {
    let e: Vec<f64> = grid.iter().map(|&eta| Ok(ml_eval(params, -eta)?.value)).collect::<Result<_>>()?;
    let d: Vec<f64> = (1..grid.len()).map(|i| (e[i] - e[i - 1]) / (grid[i] - grid[i - 1])).collect();
    Ok(Monotonicity {
        positive: e.iter().all(|&v| v > 0.0),
        decreasing: e.windows(2).all(|w| w[1] < w[0]),
        convex: d.iter().all(|&v| v < 0.0) && d.windows(2).all(|w| w[1] > w[0]),
    })
}

pub(super) fn bound_and_monotonicity() -> Body {
    let grid = eta_grid();
    let mut rows = Vec::new();
    let mut passed = true;
    let mut shape = true;
    let mut bounds = Vec::new();
    for alpha in [0.25, 0.3, 0.5, 0.75, 0.95] {
        let params = MlParams::new(alpha, 1.0)?;
        let bound = ml_bound_check(params, &grid)?;
        let m = monotonicity(params, &grid)?;
        shape &= m.positive && m.decreasing && m.convex;
        passed &= bound.is_finite() && bound >= 1.0 && shape;
        bounds.push(bound);
        rows.push(json!({
            "alpha": alpha,
            "sup_e_times_1_plus_eta": bound,
            "positive": m.positive,
            "strictly_decreasing": m.decreasing,
            "differences_negative_increasing": m.convex,
        }));
    }
    Ok((
        passed,
        format!("sup E(1+eta) = [{}] for alpha 0.25..0.95; positive, decreasing, convex: {shape}", super::fmt_list(&bounds)),
        json!({"grid_points": grid.len(), "alphas": rows}),
    ))
}
