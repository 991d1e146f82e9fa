//! Truncated formal power series in the coupling constant.
//!
//! All arithmetic is exact truncation at a fixed order `K`: the coefficient
//! of order `m <= K` of a sum/product/reciprocal is the exact coefficient of
//! the corresponding formal power series operation.

use num_complex::Complex64;

/// A truncated power series `c[0] + c[1] x + ... + c[K] x^K`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesJet {
    coeffs: Vec<Complex64>,
}

impl SeriesJet {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty());
        Self { coeffs }
    }

    /// The constant series `c` truncated at order `order`.
    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; order + 1];
        coeffs[0] = Complex64::new(c, 0.0);
        Self { coeffs }
    }

    /// The identity series `x` truncated at order `order`.
    pub fn variable(order: usize) -> Self {
        let mut coeffs = vec![Complex64::ZERO; order + 1];
        if order >= 1 {
            coeffs[1] = Complex64::ONE;
        }
        Self { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, m: usize) -> Complex64 {
        self.coeffs[m]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn set_coeff(&mut self, m: usize, c: Complex64) {
        self.coeffs[m] = c;
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip(rhs, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn neg(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn add_scalar(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let k = self.order().min(rhs.order());
        let mut coeffs = vec![Complex64::ZERO; k + 1];
        for (m, c) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for i in 0..=m {
                acc += self.coeffs[i] * rhs.coeffs[m - i];
            }
            *c = acc;
        }
        Self::new(coeffs)
    }

    /// Multiplicative inverse; the constant term must be nonzero.
    pub fn recip(&self) -> Self {
        let c0 = self.coeffs[0];
        assert!(c0.norm() > 0.0, "series has no reciprocal: zero constant term");
        let k = self.order();
        let mut inv = vec![Complex64::ZERO; k + 1];
        inv[0] = 1.0 / c0;
        for m in 1..=k {
            let mut acc = Complex64::ZERO;
            for i in 1..=m {
                acc += self.coeffs[i] * inv[m - i];
            }
            inv[m] = -acc / c0;
        }
        Self::new(inv)
    }

    pub fn div(&self, rhs: &Self) -> Self {
        self.mul(&rhs.recip())
    }

    /// Horner evaluation at a point.
    pub fn eval(&self, x: f64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    fn zip(&self, rhs: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        let k = self.order().min(rhs.order());
        Self::new((0..=k).map(|m| f(self.coeffs[m], rhs.coeffs[m])).collect())
    }
}
