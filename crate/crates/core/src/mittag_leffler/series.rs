//! Taylor series E_{α,β}(z) = Σ z^k / Γ(αk + β).

use num_complex::Complex64;

use super::gamma::ln_gamma;
use crate::error::{Error, Result};
use crate::sum::{CompensatedComplexSum, CompensatedSum};

const MAX_TERMS: usize = 100_000;

/// Real argument. Terms are formed in log space so that large positive z
/// (where the sum reaches ~1e270 for small α) does not overflow term by term.
pub(crate) fn eval_real(alpha: f64, beta: f64, z: f64) -> Result<(f64, f64)> {
    let ln_abs_z = z.abs().ln();
    let negative = z < 0.0;
    let mut acc = CompensatedSum::default();
    let mut prev = f64::INFINITY;
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let mag = if k == 0 {
            (-ln_gamma(beta)).exp()
        } else {
            (k as f64 * ln_abs_z - ln_gamma(alpha * k as f64 + beta)).exp()
        };
        let term = if negative && k % 2 == 1 { -mag } else { mag };
        acc.add(term);
        if mag <= prev && mag <= 1e-17 * acc.value().abs() {
            small += 1;
            if small == 3 {
                let err = 4.0 * f64::EPSILON * acc.abs_sum() + mag;
                return Ok((acc.value(), err));
            }
        } else {
            small = 0;
        }
        prev = mag;
    }
    Err(Error::NonConvergence {
        what: "Mittag-Leffler series",
        iterations: MAX_TERMS,
    })
}

/// Complex argument, intended for |z| of order one.
pub(crate) fn eval_complex(alpha: f64, beta: f64, z: Complex64) -> Result<(Complex64, f64)> {
    let mut acc = CompensatedComplexSum::default();
    let mut zk = Complex64::new(1.0, 0.0);
    let mut prev = f64::INFINITY;
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let term = zk * (-ln_gamma(alpha * k as f64 + beta)).exp();
        acc.add(term);
        let mag = term.norm();
        if mag <= prev && mag <= 1e-17 * acc.value().norm() {
            small += 1;
            if small == 3 {
                let err = 4.0 * f64::EPSILON * acc.abs_sum() + mag;
                return Ok((acc.value(), err));
            }
        } else {
            small = 0;
        }
        prev = mag;
        zk *= z;
    }
    Err(Error::NonConvergence {
        what: "Mittag-Leffler complex series",
        iterations: MAX_TERMS,
    })
}
