//! Numerical inversion of the Laplace transform
//!
//! ```text
//!   L[t^{β−1} E_{α,β}(λ t^α)](s) = s^{α−β} / (s^α − λ)
//! ```
//!
//! on an optimal parabolic contour s(u) = μ(1 + iu)², sampled by the
//! trapezoidal rule, with residues added for the poles s* = λ^{1/α} lying to
//! the right of the contour. Parameter selection follows R. Garrappa,
//! "Numerical evaluation of two and three parameter Mittag-Leffler
//! functions", SIAM J. Numer. Anal. 53 (2015), for the two-parameter case.
//! Evaluated at t = 1 this gives E_{α,β}(λ).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// ln of the target accuracy.
const LOG_TARGET: f64 = -34.538776394910684; // ln(1e-15)
const MAX_NODES: usize = 200;

fn log_eps() -> f64 {
    f64::EPSILON.ln()
}

/// Quadrature rule on one parabolic contour. Valid for every λ whose poles
/// all lie left of the parabola (in particular every real λ < 0 when α < 1).
#[derive(Debug, Clone)]
pub(crate) struct ParabolicRule {
    /// h/(2πi) · e^{s_k} s_k^{α−β} s'_k for k = 0..=n (k ≥ 1 stands for ±k).
    weights: Vec<Complex64>,
    /// s_k^α
    nodes_pow: Vec<Complex64>,
}

impl ParabolicRule {
    fn new(alpha: f64, beta: f64, mu: f64, h: f64, n: usize) -> Self {
        let mut weights = Vec::with_capacity(n + 1);
        let mut nodes_pow = Vec::with_capacity(n + 1);
        let i = Complex64::i();
        for k in 0..=n {
            let u = h * k as f64;
            let s = mu * (i * u + 1.0).powi(2);
            let ds = Complex64::new(-2.0 * mu * u, 2.0 * mu);
            let w = s.exp() * s.powf(alpha - beta) * ds * h / (2.0 * PI * i);
            weights.push(w);
            nodes_pow.push(s.powf(alpha));
        }
        Self {
            weights,
            nodes_pow,
        }
    }

    /// The contour used for every negative real argument (no poles on the
    /// principal sheet when 0 < α < 1).
    pub(crate) fn negative_real_axis(alpha: f64, beta: f64) -> Self {
        let p = (-2.0 * (alpha - beta + 1.0)).max(0.0);
        let (mu, h, n) = optimal_param_unbounded(1.0, 0.0, p, LOG_TARGET)
            .expect("unbounded region always admits a contour");
        Self::new(alpha, beta, mu, h, n)
    }

    /// Returns the quadrature sum and Σ|terms|.
    pub(crate) fn eval(&self, lambda: Complex64) -> (Complex64, f64) {
        let mut sum = self.weights[0] / (self.nodes_pow[0] - lambda);
        let mut abs = sum.norm();
        for k in 1..self.weights.len() {
            let w = self.weights[k];
            let p = self.nodes_pow[k];
            let plus = w / (p - lambda);
            // node −k is the mirror image s(−u) = conj(s(u))
            let minus = w.conj() / (p.conj() - lambda);
            abs += plus.norm() + minus.norm();
            sum += plus + minus;
        }
        (sum, abs)
    }

    /// Real λ: the two halves of the contour are complex conjugates.
    /// Returns the value and an absolute error estimate.
    pub(crate) fn eval_real(&self, lambda: f64) -> (f64, f64) {
        let mut sum = (self.weights[0] / (self.nodes_pow[0] - lambda)).re;
        let mut abs = sum.abs();
        for k in 1..self.weights.len() {
            let v = self.weights[k] / (self.nodes_pow[k] - lambda);
            sum += 2.0 * v.re;
            abs += 2.0 * v.norm();
        }
        (sum, error_estimate(LOG_TARGET, sum.abs(), abs))
    }
}

/// E_{α,β}(λ) for arbitrary complex λ. Returns the value and an estimate of
/// its absolute error.
pub(crate) fn eval(alpha: f64, beta: f64, lambda: Complex64) -> Result<(Complex64, f64)> {
    let t = 1.0;
    let theta = lambda.arg();
    let kmin = (-alpha / 2.0 - theta / (2.0 * PI)).ceil() as i64;
    let kmax = (alpha / 2.0 - theta / (2.0 * PI)).floor() as i64;
    let modulus = lambda.norm().powf(1.0 / alpha);

    // Singularities: poles on the principal sheet, ordered by φ(s) = (Re s + |s|)/2.
    let mut poles: Vec<(f64, Complex64)> = (kmin..=kmax)
        .map(|k| {
            let s = Complex64::from_polar(modulus, (theta + 2.0 * PI * k as f64) / alpha);
            ((s.re + s.norm()) / 2.0, s)
        })
        .filter(|(phi, _)| *phi > 1e-15)
        .collect();
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));

    // index 0 is the branch point at the origin
    let mut phi = vec![0.0];
    let mut sing = vec![Complex64::new(0.0, 0.0)];
    for (p, s) in &poles {
        phi.push(*p);
        sing.push(*s);
    }
    let j1 = sing.len();
    let gamma = 1.0;
    let mut p = vec![gamma; j1];
    p[0] = (-2.0 * (alpha * gamma - beta + 1.0)).max(0.0);
    let mut q = vec![gamma; j1];
    q[j1 - 1] = f64::INFINITY;
    phi.push(f64::INFINITY);

    let bound = (LOG_TARGET - log_eps()) / t;
    let admissible: Vec<usize> = (0..j1)
        .filter(|&j| phi[j] < bound && phi[j] < phi[j + 1])
        .collect();

    let mut log_target = LOG_TARGET;
    let (mut best_n, mut best) = (usize::MAX, None);
    for _ in 0..20 {
        for &j in &admissible {
            let params = if j < j1 - 1 {
                optimal_param_bounded(t, phi[j], phi[j + 1], p[j], q[j], log_target)
            } else {
                optimal_param_unbounded(t, phi[j], p[j], log_target)
            };
            if let Some((mu, h, n)) = params {
                if n < best_n {
                    best_n = n;
                    best = Some((j, mu, h, n));
                }
            }
        }
        if best_n <= MAX_NODES {
            break;
        }
        // relax the target accuracy by one digit
        log_target += 10f64.ln();
        best_n = usize::MAX;
        best = None;
    }
    let (region, mu, h, n) = best.ok_or(Error::NonConvergence {
        what: "Mittag-Leffler contour parameter selection",
        iterations: 20,
    })?;

    let rule = ParabolicRule::new(alpha, beta, mu, h, n);
    let (integral, abs) = rule.eval(lambda);
    let mut residues = Complex64::new(0.0, 0.0);
    for s in &sing[region + 1..] {
        residues += s.powf(1.0 - beta) * (s * t).exp() / alpha;
    }
    let value = integral + residues;
    Ok((value, error_estimate(log_target, value.norm(), abs)))
}

fn error_estimate(log_target: f64, value: f64, abs_sum: f64) -> f64 {
    log_target.exp() * value + 8.0 * f64::EPSILON * abs_sum
}

/// Parameters (μ, h, N) for a region bounded on both sides by singularities.
fn optimal_param_bounded(
    t: f64,
    phi_j: f64,
    phi_j1: f64,
    pj: f64,
    qj: f64,
    log_target: f64,
) -> Option<(f64, f64, usize)> {
    let log_eps = log_eps();
    let fac = 1.01;
    let f_max = (log_target - log_eps).exp();
    let sq_phi_j = phi_j.sqrt();
    let threshold = 2.0 * ((log_target - log_eps) / t).sqrt();
    let sq_phi_j1 = phi_j1.sqrt().min(threshold - sq_phi_j);

    let (sq_bar_j, sq_bar_j1, f_bar) = if pj < 1e-14 && qj < 1e-14 {
        (sq_phi_j, sq_phi_j1, 1.0)
    } else if pj < 1e-14 {
        let f_min = if sq_phi_j > 0.0 {
            fac * (sq_phi_j / (sq_phi_j1 - sq_phi_j)).powf(qj)
        } else {
            fac
        };
        if f_min >= f_max {
            return None;
        }
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fq = f_bar.powf(-1.0 / qj);
        let bar_j1 = (2.0 * sq_phi_j1 - fq * sq_phi_j) / (2.0 + fq);
        (sq_phi_j, bar_j1, f_bar)
    } else if qj < 1e-14 {
        let f_min = fac * (sq_phi_j1 / (sq_phi_j1 - sq_phi_j)).powf(pj);
        if f_min >= f_max {
            return None;
        }
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        let bar_j = (2.0 * sq_phi_j + fp * sq_phi_j1) / (2.0 - fp);
        (bar_j, sq_phi_j1, f_bar)
    } else {
        let f_min = fac * (sq_phi_j + sq_phi_j1) / (sq_phi_j1 - sq_phi_j).powf(pj.max(qj));
        if f_min >= f_max {
            return None;
        }
        let f_min = f_min.max(1.5);
        let f_bar = f_min + f_min / f_max * (f_max - f_min);
        let fp = f_bar.powf(-1.0 / pj);
        let fq = f_bar.powf(-1.0 / qj);
        let w = -phi_j1 * t / log_target;
        let den = 2.0 + w - (1.0 + w) * fp + fq;
        let bar_j = ((2.0 + w + fq) * sq_phi_j + fp * sq_phi_j1) / den;
        let bar_j1 = (-(1.0 + w) * fq * sq_phi_j + (2.0 + w - (1.0 + w) * fp) * sq_phi_j1) / den;
        (bar_j, bar_j1, f_bar)
    };

    let log_target = log_target - f_bar.ln();
    let w = -sq_bar_j1 * sq_bar_j1 * t / log_target;
    let mu = (((1.0 + w) * sq_bar_j + sq_bar_j1) / (2.0 + w)).powi(2);
    let h = -2.0 * PI / log_target * (sq_bar_j1 - sq_bar_j) / ((1.0 + w) * sq_bar_j + sq_bar_j1);
    let n = ((1.0 - log_target / t / mu).sqrt() / h).ceil();
    if !(mu > 0.0 && h > 0.0 && n.is_finite()) {
        return None;
    }
    Some((mu, h, n as usize))
}

/// Parameters for the rightmost (unbounded) region.
fn optimal_param_unbounded(t: f64, phi_j: f64, pj: f64, log_target: f64) -> Option<(f64, f64, usize)> {
    let sq_phi_j = phi_j.sqrt();
    let mut phi_bar = if phi_j > 0.0 { phi_j * 1.01 } else { 0.01 };
    let mut sq_phi_bar = phi_bar.sqrt();
    let (f_min, f_max, f_tar) = (1.0f64, 10.0f64, 5.0f64);

    let mut iterations = 0;
    let (mut n, mut a, mut sq_mu);
    loop {
        let phi_t = phi_bar * t;
        let ratio = log_target / phi_t;
        n = (phi_t / PI * (1.0 - 3.0 * ratio / 2.0 + (1.0 - 2.0 * ratio).sqrt())).ceil();
        a = PI * n / phi_t;
        sq_mu = sq_phi_bar * (4.0 - a).abs() / (7.0 - (1.0 + 12.0 * a).sqrt()).abs();
        let f_bar = ((sq_phi_bar - sq_phi_j) / sq_mu).powf(-pj);
        if pj < 1e-14 || (f_min < f_bar && f_bar < f_max) {
            break;
        }
        sq_phi_bar = f_tar.powf(-1.0 / pj) * sq_mu + sq_phi_j;
        phi_bar = sq_phi_bar * sq_phi_bar;
        iterations += 1;
        if iterations > 100 {
            return None;
        }
    }
    let mut mu = sq_mu * sq_mu;
    let mut h = (-3.0 * a - 2.0 + 2.0 * (1.0 + 12.0 * a).sqrt()) / (4.0 - a) / n;

    // keep round-off under control: e^{μt} must not swamp the target
    let log_eps = log_eps();
    let threshold = (log_target - log_eps) / t;
    if mu > threshold {
        let q = if pj.abs() < 1e-14 {
            0.0
        } else {
            f_tar.powf(-1.0 / pj) * mu.sqrt()
        };
        let phi_bar = (q + phi_j.sqrt()).powi(2);
        if phi_bar < threshold {
            let w = (log_eps / (log_eps - log_target)).sqrt();
            let u = (-phi_bar * t / log_eps).sqrt();
            mu = threshold;
            n = (w * log_target / 2.0 / PI / (u * w - 1.0)).ceil();
            h = w / n;
        } else {
            return None;
        }
    }
    if !(n.is_finite() && n > 0.0) {
        return None;
    }
    Some((mu, h, n as usize))
}
