use num_complex::Complex64;

/// Neumaier's variant of Kahan compensated summation. Also tracks Σ|xᵢ| so
/// callers can bound the rounding error of the result.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    comp: f64,
    abs: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
        self.abs += x.abs();
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }

    pub fn abs_sum(&self) -> f64 {
        self.abs
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn add(&mut self, x: Complex64) {
        self.re.add(x.re);
        self.im.add(x.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn abs_sum(&self) -> f64 {
        self.re.abs_sum() + self.im.abs_sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let mut s = CompensatedSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
        assert_eq!(s.abs_sum(), 2e100 + 2.0);
    }
}
