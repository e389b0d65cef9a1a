//! Two-parameter Mittag-Leffler function E_{α,β}(z) = Σ z^k / Γ(αk + β).
//!
//! Real arguments are evaluated by one of four methods depending on (α, β, z):
//! the Taylor series near the origin and on the positive axis, the algebraic
//! asymptotic expansion far out on the negative axis, the exponential when
//! α = β = 1, and a numerically inverted Laplace transform everywhere else.
//! The last one carries the intermediate negative range, where the series
//! loses all digits to cancellation and the expansion is not yet accurate.

mod asymptotic;
mod contour;
mod gamma;
mod matrix;
mod series;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{invalid, Error, Result};

pub use gamma::gamma_fn;
pub use matrix::{ml_matrix, JordanBlock};

/// Largest positive argument accepted by [`ml_eval`].
pub const Z_POS_MAX: f64 = 5.0;
/// The asymptotic expansion is only attempted for z < −Z_SWITCH.
pub const Z_SWITCH: f64 = 8.0;
/// The Taylor series is used on [−SERIES_NEG_MAX, Z_POS_MAX].
pub const SERIES_NEG_MAX: f64 = 1.0;

/// A result is handed back when its estimated error is within ACCEPT_REL
/// relative or ACCEPT_ABS absolute. The absolute floor admits values that
/// are tiny next to the O(1) scale of the function, e.g. E_{α,α}(−x) for α
/// just below 1, where only absolute accuracy is attainable.
const ACCEPT_REL: f64 = 1e-9;
const ACCEPT_ABS: f64 = 1e-14;
const ASYMPTOTIC_REL: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlParams {
    pub alpha: f64,
    pub beta: f64,
}

impl MlParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 1]")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(invalid("beta", format!("{beta} must be positive")));
        }
        Ok(Self { alpha, beta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Series,
    Contour,
    Asymptotic,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MlResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub regime: Regime,
}

/// E_{α,β}(z) for real z ≤ [`Z_POS_MAX`].
pub fn ml_eval(params: MlParams, z: f64) -> Result<MlResult> {
    if z.is_nan() {
        return Err(invalid("z", "NaN"));
    }
    if z > Z_POS_MAX {
        return Err(Error::Domain { z, max: Z_POS_MAX });
    }
    let MlParams { alpha, beta } = params;
    if z == 0.0 {
        return Ok(MlResult {
            value: 1.0 / gamma_fn(beta)?,
            abs_error_estimate: 0.0,
            regime: Regime::Series,
        });
    }
    if alpha == 1.0 && beta == 1.0 {
        return ml_eval_with(params, z, Regime::Exponential);
    }
    if z >= -SERIES_NEG_MAX {
        return ml_eval_with(params, z, Regime::Series);
    }
    if z < -Z_SWITCH && alpha < 1.0 {
        if let Some((value, err)) = asymptotic::eval(alpha, beta, z, ASYMPTOTIC_REL) {
            return Ok(MlResult {
                value,
                abs_error_estimate: err,
                regime: Regime::Asymptotic,
            });
        }
    }
    ml_eval_with(params, z, Regime::Contour)
}

/// Evaluate with a prescribed method, bypassing the automatic choice. Used to
/// compare neighbouring methods where the dispatcher switches between them.
pub fn ml_eval_with(params: MlParams, z: f64, regime: Regime) -> Result<MlResult> {
    let MlParams { alpha, beta } = params;
    let (value, err) = match regime {
        Regime::Series => series::eval_real(alpha, beta, z)?,
        Regime::Exponential => {
            if alpha != 1.0 || beta != 1.0 {
                return Err(invalid("regime", "exponential form needs alpha = beta = 1"));
            }
            let v = z.exp();
            (v, f64::EPSILON * v)
        }
        Regime::Asymptotic => {
            if z >= 0.0 || alpha >= 1.0 {
                return Err(invalid("regime", "asymptotic form needs z < 0 and alpha < 1"));
            }
            asymptotic::eval(alpha, beta, z, ACCEPT_REL).ok_or(Error::NonConvergence {
                what: "Mittag-Leffler asymptotic expansion",
                iterations: 0,
            })?
        }
        Regime::Contour => {
            if z < 0.0 {
                contour_negative(alpha, beta, z)?
            } else {
                let (v, e) = contour::eval(alpha, beta, Complex64::new(z, 0.0))?;
                (v.re, e)
            }
        }
    };
    if !value.is_finite() || err > (ACCEPT_REL * value.abs()).max(ACCEPT_ABS) {
        return Err(Error::NonConvergence {
            what: "Mittag-Leffler evaluation",
            iterations: 0,
        });
    }
    Ok(MlResult {
        value,
        abs_error_estimate: err,
        regime,
    })
}

/// For β > α + 1 the contour integrand is too singular at the origin, so β
/// is first lowered with E_{α,β}(z) = (E_{α,β−α}(z) − 1/Γ(β−α))/z. Only
/// used for |z| > 1, where this loses nothing.
fn contour_negative(alpha: f64, beta: f64, z: f64) -> Result<(f64, f64)> {
    if beta > alpha + 1.0 {
        let (v, e) = contour_negative(alpha, beta - alpha, z)?;
        let g = 1.0 / gamma_fn(beta - alpha)?;
        return Ok(((v - g) / z, (e + f64::EPSILON * g) / z.abs()));
    }
    Ok(contour::ParabolicRule::negative_real_axis(alpha, beta).eval_real(z))
}

fn contour_complex(alpha: f64, beta: f64, z: Complex64) -> Result<(Complex64, f64)> {
    if beta > alpha + 1.0 {
        let (v, e) = contour_complex(alpha, beta - alpha, z)?;
        let g = 1.0 / gamma_fn(beta - alpha)?;
        return Ok(((v - g) / z, (e + f64::EPSILON * g) / z.norm()));
    }
    contour::eval(alpha, beta, z)
}

/// E_{α,β}(z) for complex z. Real z is routed through [`ml_eval`].
pub fn ml_eval_complex(params: MlParams, z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 {
        return Ok(Complex64::new(ml_eval(params, z.re)?.value, 0.0));
    }
    let MlParams { alpha, beta } = params;
    if alpha == 1.0 && beta == 1.0 {
        return Ok(z.exp());
    }
    let (value, err) = if z.norm() <= SERIES_NEG_MAX {
        series::eval_complex(alpha, beta, z)?
    } else {
        contour_complex(alpha, beta, z)?
    };
    if !(value.re.is_finite() && value.im.is_finite()) || err > (ACCEPT_REL * value.norm()).max(ACCEPT_ABS) {
        return Err(Error::NonConvergence {
            what: "complex Mittag-Leffler evaluation",
            iterations: 0,
        });
    }
    Ok(value)
}

/// sup over the grid of E_{α,1}(−η)(1 + η).
pub fn ml_bound_check(params: MlParams, eta_grid: &[f64]) -> Result<f64> {
    if params.beta != 1.0 {
        return Err(invalid("beta", "bound check is stated for beta = 1"));
    }
    let mut sup: f64 = 0.0;
    for &eta in eta_grid {
        if !(eta >= 0.0) {
            return Err(invalid("eta_grid", format!("negative point {eta}")));
        }
        let e = ml_eval(params, -eta)?.value;
        sup = sup.max(e * (1.0 + eta));
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(alpha: f64, beta: f64) -> MlParams {
        MlParams::new(alpha, beta).unwrap()
    }

    #[test]
    fn large_beta_on_the_contour() {
        for (alpha, beta, z, want) in [
            (0.35, 2.35, -3.7, 0.20680057532035636016),
            (0.8, 2.8, -6.5, 0.12987423550447311816),
            (0.5, 2.5, -2.0, 0.31098074868730863854),
        ] {
            let r = ml_eval(p(alpha, beta), z).unwrap();
            assert_eq!(r.regime, Regime::Contour);
            assert!(((r.value - want) / want).abs() < 1e-13, "{alpha} {beta} {z}: {}", r.value);
        }
    }

    #[test]
    fn documented_values() {
        assert_eq!(ml_eval(p(0.5, 1.0), 0.0).unwrap().value, 1.0);
        let e = ml_eval(p(1.0, 1.0), -2.0).unwrap().value;
        assert!((e - 0.1353352832366127).abs() < 1e-16);
        let e = ml_eval(p(0.5, 1.0), -1.0).unwrap().value;
        assert!((e - 0.4275835761558070).abs() < 1e-15);
        let e = ml_eval(p(0.5, 0.5), 0.0).unwrap().value;
        assert!((e - 0.5641895835477563).abs() <= 1.2e-16);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MlParams::new(0.0, 1.0).is_err());
        assert!(MlParams::new(1.2, 1.0).is_err());
        assert!(MlParams::new(0.5, 0.0).is_err());
        assert_eq!(
            ml_eval(p(0.5, 1.0), 5.5),
            Err(Error::Domain { z: 5.5, max: Z_POS_MAX })
        );
    }

    #[test]
    fn regime_choice() {
        assert_eq!(ml_eval(p(0.5, 1.0), -0.5).unwrap().regime, Regime::Series);
        assert_eq!(ml_eval(p(0.5, 1.0), -4.0).unwrap().regime, Regime::Contour);
        assert_eq!(ml_eval(p(0.5, 1.0), -50.0).unwrap().regime, Regime::Asymptotic);
        assert_eq!(ml_eval(p(1.0, 1.0), -50.0).unwrap().regime, Regime::Exponential);
    }

    #[test]
    fn general_methods_reproduce_exponential() {
        for z in [-1.0, -0.3, 0.7, 2.0] {
            let v = ml_eval_with(p(1.0, 1.0), z, Regime::Series).unwrap().value;
            assert!((v - z.exp()).abs() <= 1e-15 * z.exp());
        }
        for z in [-1.5, -4.0, -9.0] {
            let v = ml_eval_with(p(1.0, 1.0), z, Regime::Contour).unwrap().value;
            assert!((v - z.exp()).abs() <= 1e-14, "{v}");
        }
    }

    #[test]
    fn bound_check_examples() {
        assert_eq!(ml_bound_check(p(0.5, 1.0), &[0.0]).unwrap(), 1.0);
        assert_eq!(ml_bound_check(p(1.0, 1.0), &[0.0, 1.0, 10.0]).unwrap(), 1.0);
    }

    #[test]
    fn neighbouring_methods_agree_at_switch_points() {
        for alpha in [0.25, 0.5, 0.75, 0.95] {
            for beta in [alpha, 1.0] {
                let s = ml_eval_with(p(alpha, beta), -SERIES_NEG_MAX, Regime::Series).unwrap();
                let c = ml_eval_with(p(alpha, beta), -SERIES_NEG_MAX, Regime::Contour).unwrap();
                assert!(((s.value - c.value) / s.value).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn complex_series_and_contour_agree() {
        let params = p(0.6, 1.0);
        let z = Complex64::from_polar(0.99, 2.5);
        let a = series::eval_complex(0.6, 1.0, z).unwrap().0;
        let b = contour::eval(0.6, 1.0, z).unwrap().0;
        assert!((a - b).norm() < 1e-13 * a.norm());
        assert_eq!(
            ml_eval_complex(params, Complex64::new(-3.0, 0.0)).unwrap().re,
            ml_eval(params, -3.0).unwrap().value
        );
    }

    proptest! {
        #[test]
        fn recurrence_holds(alpha in 0.2f64..0.99, beta in 0.2f64..2.0, z in -1e4f64..5.0) {
            // E_{α,β}(z) = z E_{α,α+β}(z) + 1/Γ(β)
            let lhs = ml_eval(p(alpha, beta), z).unwrap().value;
            let rhs = z * ml_eval(p(alpha, alpha + beta), z).unwrap().value
                + 1.0 / gamma_fn(beta).unwrap();
            let scale = lhs.abs().max(1.0 / gamma_fn(beta).unwrap().abs() * 1e-3);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale, "{} vs {}", lhs, rhs);
        }

        #[test]
        fn negative_axis_values_lie_in_unit_interval(alpha in 0.05f64..1.0, x in 0.0f64..1e8) {
            let v = ml_eval(p(alpha, 1.0), -x).unwrap();
            prop_assert!(v.value > 0.0 && v.value <= 1.0);
            prop_assert!(v.abs_error_estimate >= 0.0);
        }

        #[test]
        fn exponential_reduction(z in -30.0f64..2.0) {
            let v = ml_eval(p(1.0, 1.0), z).unwrap().value;
            prop_assert!((v - z.exp()).abs() <= 1e-12 * z.exp());
        }
    }
}
