use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{ml_eval_complex, MlParams};
use crate::error::{invalid, Error, Result};
use crate::sum::CompensatedComplexSum;

pub const MAX_BLOCK: usize = 8;
const MAX_TERMS: usize = 10_000;
/// Matrices whose scalar part |μ|t^α exceeds this are not summed as a power
/// series; derivatives of the scalar function are used instead.
const SERIES_RADIUS: f64 = 1.0;
const CAUCHY_POINTS: usize = 64;

/// μI − D with D the size×size upper shift matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JordanBlock {
    #[serde(serialize_with = "ser_complex")]
    pub mu: Complex64,
    pub size: usize,
}

fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

impl JordanBlock {
    pub fn new(mu: Complex64, size: usize) -> Result<Self> {
        if size == 0 || size > MAX_BLOCK {
            return Err(invalid("size", format!("{size} is outside 1..={MAX_BLOCK}")));
        }
        if !(mu.re > 0.0) || !mu.im.is_finite() {
            return Err(invalid("mu", format!("{mu} needs a positive real part")));
        }
        Ok(Self { mu, size })
    }

    /// The nilpotent part D.
    pub fn shift(&self) -> DMatrix<Complex64> {
        let d = self.size;
        DMatrix::from_fn(d, d, |i, j| {
            if j == i + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

/// E_{α,1}((−μ + D) t^α).
pub fn ml_matrix(alpha: f64, block: JordanBlock, t: f64) -> Result<DMatrix<Complex64>> {
    let params = MlParams::new(alpha, 1.0)?;
    if !(t > 0.0) {
        return Err(invalid("t", format!("{t} must be positive")));
    }
    let s = t.powf(alpha);
    let z = -block.mu * s;
    let mut m = if z.norm() <= SERIES_RADIUS {
        power_series(alpha, block, s)?
    } else {
        taylor_in_shift(params, block, z, s)?
    };
    if block.mu.im == 0.0 {
        // the circle samples come in conjugate pairs; drop their rounding residue
        m.iter_mut().for_each(|v| v.im = 0.0);
    }
    Ok(m)
}

fn power_series(alpha: f64, block: JordanBlock, s: f64) -> Result<DMatrix<Complex64>> {
    let d = block.size;
    let m = (block.shift() - DMatrix::identity(d, d) * block.mu) * Complex64::new(s, 0.0);
    let mut acc = vec![CompensatedComplexSum::default(); d * d];
    let mut power = DMatrix::<Complex64>::identity(d, d);
    let mut running: f64 = 0.0;
    let mut small = 0;
    for k in 0..MAX_TERMS {
        let scale = (-libm::lgamma(alpha * k as f64 + 1.0)).exp();
        let term = &power * Complex64::new(scale, 0.0);
        for (a, x) in acc.iter_mut().zip(term.iter()) {
            a.add(*x);
        }
        let sum_norm = acc.iter().map(|a| a.value().norm()).fold(0.0, f64::max);
        running = running.max(sum_norm);
        let term_norm = term.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if term_norm < 1e-16 * running {
            small += 1;
            if small == 3 {
                let values: Vec<Complex64> = acc.iter().map(|a| a.value()).collect();
                return Ok(DMatrix::from_column_slice(d, d, &values));
            }
        } else {
            small = 0;
        }
        power = &power * &m;
    }
    Err(Error::NonConvergence {
        what: "matrix Mittag-Leffler series",
        iterations: MAX_TERMS,
    })
}

/// Entry (i, i+k) is f^{(k)}(z) s^k / k! with f = E_{α,1}. All Taylor
/// coefficients, the diagonal included, come from the trapezoidal rule on a
/// circle around z, so the diagonal is an independent check on the scalar
/// evaluation at z.
fn taylor_in_shift(params: MlParams, block: JordanBlock, z: Complex64, s: f64) -> Result<DMatrix<Complex64>> {
    let d = block.size;
    let radius = z.norm() / 4.0;
    let samples: Vec<Complex64> = (0..CAUCHY_POINTS)
        .map(|j| {
            let w = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / CAUCHY_POINTS as f64);
            ml_eval_complex(params, z + w * radius)
        })
        .collect::<Result<_>>()?;
    let coeffs: Vec<Complex64> = (0..d)
        .map(|k| {
            let mut acc = CompensatedComplexSum::default();
            for (j, f) in samples.iter().enumerate() {
                let angle = -2.0 * PI * (j * k) as f64 / CAUCHY_POINTS as f64;
                acc.add(f * Complex64::from_polar(1.0, angle));
            }
            // scaled straight to c_k s^k so large s cannot overflow radius^k
            acc.value() * ((s / radius).powi(k as i32) / CAUCHY_POINTS as f64)
        })
        .collect();
    Ok(DMatrix::from_fn(d, d, |i, j| {
        if j >= i {
            coeffs[j - i]
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mittag_leffler::ml_eval;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn scalar_block_reduces_to_ml_eval() {
        let b = JordanBlock::new(c(3.7, 0.0), 1).unwrap();
        let m = ml_matrix(0.6, b, 1.3).unwrap();
        let want = ml_eval(MlParams::new(0.6, 1.0).unwrap(), -3.7 * 1.3f64.powf(0.6)).unwrap();
        assert!((m[(0, 0)].re - want.value).abs() < 1e-14);
    }

    #[test]
    fn exponential_of_jordan_block() {
        let b = JordanBlock::new(c(1.0, 0.0), 2).unwrap();
        let m = ml_matrix(1.0, b, 1.0).unwrap();
        let e = (-1.0f64).exp();
        for (got, want) in [(m[(0, 0)], e), (m[(0, 1)], e), (m[(1, 1)], e), (m[(1, 0)], 0.0)] {
            assert!((got - c(want, 0.0)).norm() < 1e-15, "{got} {want}");
        }
    }

    /// Off-diagonal Σ_{k≥1} k(−1)^{k−1}/Γ(k/2+1) at α = 1/2, from mpmath.
    #[test]
    fn half_order_derivative() {
        let b = JordanBlock::new(c(1.0, 0.0), 2).unwrap();
        let m = ml_matrix(0.5, b, 1.0).unwrap();
        assert!((m[(0, 0)].re - 0.42758357615580700).abs() < 1e-15);
        assert!((m[(0, 1)].re - 0.27321201478389857).abs() < 1e-14, "{}", m[(0, 1)]);
    }

    #[test]
    fn both_methods_agree_near_the_switch() {
        // the same block straddling the radius used to choose the method
        for (mu, alpha) in [(c(0.8, 0.5), 0.4), (c(0.95, -0.2), 0.8)] {
            let b = JordanBlock::new(mu, 4).unwrap();
            let s = 1.0;
            let series = power_series(alpha, b, s).unwrap();
            let params = MlParams::new(alpha, 1.0).unwrap();
            let cauchy = taylor_in_shift(params, b, -mu * s, s).unwrap();
            let diff = (series - cauchy).norm();
            assert!(diff < 1e-12, "{diff}");
        }
    }

    #[test]
    fn rejects_invalid_blocks() {
        assert!(JordanBlock::new(c(-1.0, 0.0), 2).is_err());
        assert!(JordanBlock::new(c(1.0, 0.0), 0).is_err());
        assert!(JordanBlock::new(c(1.0, 0.0), 9).is_err());
        let d = JordanBlock::new(c(1.0, 0.0), 5).unwrap().shift();
        assert_eq!(d.pow(5), DMatrix::zeros(5, 5));
    }
}
