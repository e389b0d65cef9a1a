//! Algebraic asymptotic expansion on the negative real axis,
//! E_{α,β}(z) ≈ −Σ_{k≥1} z^{−k} / Γ(β − αk), valid for 0 < α < 1.

use super::gamma::ln_rgamma_signed;
use crate::sum::CompensatedSum;

const MAX_TERMS: usize = 2000;

/// Optimally truncated expansion. Returns `None` when the smallest term, or
/// the neglected exponentially small part ~exp(−|z|^{1/α}), is too large
/// relative to the sum for the requested relative tolerance.
pub(crate) fn eval(alpha: f64, beta: f64, z: f64, rel_tol: f64) -> Option<(f64, f64)> {
    debug_assert!(z < 0.0 && alpha < 1.0);
    let x = -z;
    // exponentially small contribution dropped by the expansion
    let t = x.powf(1.0 / alpha);
    if t < 30.0 {
        return None;
    }
    let ln_x = x.ln();
    let mut acc = CompensatedSum::default();
    let mut smallest = f64::INFINITY;
    for k in 1..=MAX_TERMS {
        let Some((sign, ln_rg)) = ln_rgamma_signed(beta - alpha * k as f64) else {
            continue;
        };
        let mag = (ln_rg - k as f64 * ln_x).exp();
        if mag > 1e6 * smallest {
            break;
        }
        // z^{−k} = (−1)^k x^{−k}, and the series carries an overall minus sign
        let parity = if k % 2 == 0 { -1.0 } else { 1.0 };
        acc.add(parity * sign * mag);
        smallest = smallest.min(mag);
        if mag <= 1e-17 * acc.value().abs() {
            break;
        }
    }
    let value = acc.value();
    let tail = smallest + (-t).exp();
    if value == 0.0 || tail > rel_tol * value.abs() {
        return None;
    }
    let err = tail + 4.0 * f64::EPSILON * acc.abs_sum();
    Some((value, err))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_order_matches_erfc_asymptotics() {
        // E_{1/2,1}(−x) = e^{x²} erfc(x); mpmath at x = 50
        let (v, _) = eval(0.5, 1.0, -50.0, 1e-15).unwrap();
        let want = 0.011281536265323773;
        assert!(((v - want) / want).abs() < 1e-15, "{v}");
    }

    #[test]
    fn declines_near_switch_point_for_small_alpha() {
        // |z|^{1/α} = 8^4 is large, but for α = 0.95 at z = −8 the terms
        // never get small enough
        assert!(eval(0.95, 1.0, -8.0, 1e-15).is_none());
    }
}
