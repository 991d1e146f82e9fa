//! Structured inversion of Cauchy matrices `H_{kl} = 1/(a_k - b_l)` via the
//! closed product formula
//!
//! ```text
//! (H^-1)_{kl} = (a_l - b_k) A_l(b_k) B_k(a_l)
//! ```
//!
//! with node polynomials `A(x) = prod_i (x - a_i)`, `B(y) = prod_j (y - b_j)`
//! and their Lagrange interpolation factors, together with the row/column-sum
//! and partial-fraction identities the inverse satisfies.

use num_complex::Complex64;

use crate::curve::balanced_product;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CauchyNodes {
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    scale: f64,
}

#[derive(Debug, Clone)]
pub struct CauchyInverse {
    pub nodes: CauchyNodes,
    /// `entries[k][l] = (H^-1)_{kl}`.
    pub entries: Vec<Vec<Complex64>>,
    /// Set when some `|a_i - b_j|` is below the conditioning guard; the
    /// closed formula is still evaluated.
    pub conditioning_warning: Option<String>,
}

/// Residuals of the Schechter identities at a probe point `x`.
#[derive(Debug, Clone)]
pub struct SchechterReport {
    /// Residual of `B_k(x) A(b_k)/A(x) = sum_l (H^-1)_{kl}/(a_l - x)`, max over k.
    pub row_identity: f64,
    /// Residual of `A_l(x) B(a_l)/B(x) = sum_k (H^-1)_{kl}/(x - b_k)`, max over l.
    pub col_identity: f64,
    /// Residual of `sum_k A(b_k)/((b_k - a_j) B'(b_k)) = 1`, max over j.
    pub row_sum_to_one: f64,
    /// Residual of `sum_l B(a_l)/((a_l - b_j) A'(a_l)) = 1`, max over j.
    pub col_sum_to_one: f64,
    pub conditioning_warning: Option<String>,
}

const CONDITIONING_GUARD: f64 = 1e-6;

impl CauchyNodes {
    pub fn new(a: Vec<Complex64>, b: Vec<Complex64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::NodeCollision("a and b must be nonempty, same length".into()));
        }
        let scale = a
            .iter()
            .chain(&b)
            .map(|z| z.norm())
            .fold(1.0_f64, f64::max);
        let min_sep = 1e-12 * scale;
        for (i, &ai) in a.iter().enumerate() {
            for (j, &aj) in a.iter().enumerate().skip(i + 1) {
                if (ai - aj).norm() < min_sep {
                    return Err(Error::NodeCollision(format!("a[{i}] = {ai} collides with a[{j}] = {aj}")));
                }
            }
        }
        for (i, &bi) in b.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate().skip(i + 1) {
                if (bi - bj).norm() < min_sep {
                    return Err(Error::NodeCollision(format!("b[{i}] = {bi} collides with b[{j}] = {bj}")));
                }
            }
        }
        for (i, &ai) in a.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                if (ai - bj).norm() < min_sep {
                    return Err(Error::NodeCollision(format!("a[{i}] = {ai} collides with b[{j}] = {bj}")));
                }
            }
        }
        Ok(Self { a, b, scale })
    }

    pub fn d(&self) -> usize {
        self.a.len()
    }

    fn warning(&self) -> Option<String> {
        for (i, &ai) in self.a.iter().enumerate() {
            for (j, &bj) in self.b.iter().enumerate() {
                if (ai - bj).norm() < CONDITIONING_GUARD * self.scale {
                    return Some(format!(
                        "nodes a[{i}] and b[{j}] are within {:e}; inverse entries may be large",
                        (ai - bj).norm()
                    ));
                }
            }
        }
        None
    }

    /// `A(x) = prod_i (x - a_i)`, balanced.
    pub fn a_poly(&self, x: Complex64) -> Complex64 {
        let f: Vec<Complex64> = self.a.iter().map(|&ai| x - ai).collect();
        balanced_product(&f)
    }

    /// `B(y) = prod_j (y - b_j)`, balanced.
    pub fn b_poly(&self, y: Complex64) -> Complex64 {
        let f: Vec<Complex64> = self.b.iter().map(|&bj| y - bj).collect();
        balanced_product(&f)
    }

    /// `A'(a_l)` by the leave-one-out product.
    pub fn a_prime(&self, l: usize) -> Complex64 {
        let f: Vec<Complex64> = self
            .a
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != l)
            .map(|(_, &ai)| self.a[l] - ai)
            .collect();
        balanced_product(&f)
    }

    /// `B'(b_k)` by the leave-one-out product.
    pub fn b_prime(&self, k: usize) -> Complex64 {
        let f: Vec<Complex64> = self
            .b
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &bj)| self.b[k] - bj)
            .collect();
        balanced_product(&f)
    }

    /// Lagrange factor `A_l(x) = A(x) / ((x - a_l) A'(a_l))`.
    pub fn lagrange_a(&self, l: usize, x: Complex64) -> Complex64 {
        let f: Vec<Complex64> = self
            .a
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != l)
            .map(|(_, &ai)| x - ai)
            .collect();
        balanced_product(&f) / self.a_prime(l)
    }

    /// Lagrange factor `B_k(y) = B(y) / ((y - b_k) B'(b_k))`.
    pub fn lagrange_b(&self, k: usize, y: Complex64) -> Complex64 {
        let f: Vec<Complex64> = self
            .b
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &bj)| y - bj)
            .collect();
        balanced_product(&f) / self.b_prime(k)
    }

    /// The Cauchy matrix `H_{kl} = 1/(a_k - b_l)`.
    pub fn matrix(&self) -> Vec<Vec<Complex64>> {
        let d = self.d();
        (0..d)
            .map(|k| (0..d).map(|l| 1.0 / (self.a[k] - self.b[l])).collect())
            .collect()
    }
}

/// Explicit inverse by the product formula; never by elimination.
pub fn cauchy_inverse(nodes: &CauchyNodes) -> CauchyInverse {
    let d = nodes.d();
    let mut entries = vec![vec![Complex64::ZERO; d]; d];
    for (k, row) in entries.iter_mut().enumerate() {
        for (l, e) in row.iter_mut().enumerate() {
            *e = (nodes.a[l] - nodes.b[k])
                * nodes.lagrange_a(l, nodes.b[k])
                * nodes.lagrange_b(k, nodes.a[l]);
        }
    }
    CauchyInverse { nodes: nodes.clone(), entries, conditioning_warning: nodes.warning() }
}

/// Closed-form row sums `-A(b_k)/B'(b_k)` and column sums `B(a_l)/A'(a_l)`.
pub fn cauchy_sums(nodes: &CauchyNodes) -> (Vec<Complex64>, Vec<Complex64>) {
    let d = nodes.d();
    let row = (0..d).map(|k| -nodes.a_poly(nodes.b[k]) / nodes.b_prime(k)).collect();
    let col = (0..d).map(|l| nodes.b_poly(nodes.a[l]) / nodes.a_prime(l)).collect();
    (row, col)
}

/// Residuals of the interpolation and sum-to-one identities at `x`.
pub fn verify_schechter(nodes: &CauchyNodes, x: Complex64) -> Result<SchechterReport> {
    let d = nodes.d();
    let min_sep = 1e-12 * nodes.scale;
    for &z in nodes.a.iter().chain(&nodes.b) {
        if (z - x).norm() < min_sep {
            return Err(Error::NodeCollision(format!("probe point {x} collides with node {z}")));
        }
    }
    let inv = cauchy_inverse(nodes);
    // Residuals are measured against the largest summand: inverse entries
    // grow combinatorially with conditioning and the identities hold through
    // cancellation, so this is the rounding-limited scale.
    let rel_to_terms = |lhs: Complex64, terms: &[Complex64]| {
        let rhs: Complex64 = terms.iter().sum();
        let m = terms.iter().map(|t| t.norm()).fold(lhs.norm().max(1.0), f64::max);
        (lhs - rhs).norm() / m
    };

    let mut row_identity = 0.0_f64;
    for k in 0..d {
        let lhs = nodes.lagrange_b(k, x) * nodes.a_poly(nodes.b[k]) / nodes.a_poly(x);
        let terms: Vec<Complex64> =
            (0..d).map(|l| inv.entries[k][l] / (nodes.a[l] - x)).collect();
        row_identity = row_identity.max(rel_to_terms(lhs, &terms));
    }
    let mut col_identity = 0.0_f64;
    for l in 0..d {
        let lhs = nodes.lagrange_a(l, x) * nodes.b_poly(nodes.a[l]) / nodes.b_poly(x);
        let terms: Vec<Complex64> =
            (0..d).map(|k| inv.entries[k][l] / (x - nodes.b[k])).collect();
        col_identity = col_identity.max(rel_to_terms(lhs, &terms));
    }
    let mut row_sum_to_one = 0.0_f64;
    let mut col_sum_to_one = 0.0_f64;
    for j in 0..d {
        // Relative to the largest summand: the identities cancel terms that
        // can be huge for ill-conditioned node sets, and the meaningful
        // residual is the one measured against that cancellation scale.
        let t1: Vec<Complex64> = (0..d)
            .map(|k| nodes.a_poly(nodes.b[k]) / ((nodes.b[k] - nodes.a[j]) * nodes.b_prime(k)))
            .collect();
        let m1 = t1.iter().map(|t| t.norm()).fold(1.0_f64, f64::max);
        let s1: Complex64 = t1.into_iter().sum();
        row_sum_to_one = row_sum_to_one.max((s1 - Complex64::ONE).norm() / m1);
        let t2: Vec<Complex64> = (0..d)
            .map(|l| nodes.b_poly(nodes.a[l]) / ((nodes.a[l] - nodes.b[j]) * nodes.a_prime(l)))
            .collect();
        let m2 = t2.iter().map(|t| t.norm()).fold(1.0_f64, f64::max);
        let s2: Complex64 = t2.into_iter().sum();
        col_sum_to_one = col_sum_to_one.max((s2 - Complex64::ONE).norm() / m2);
    }
    Ok(SchechterReport {
        row_identity,
        col_identity,
        row_sum_to_one,
        col_sum_to_one,
        conditioning_warning: nodes.warning(),
    })
}

/// Componentwise-relative multiply-back check: the deviation of
/// `(H * H^-1)_{ij}` from the identity, measured against the largest term in
/// that inner product (Cauchy inverses have huge entries for ill-conditioned
/// node sets, so the absolute residual is dominated by benign cancellation).
pub fn multiply_back_error(nodes: &CauchyNodes) -> f64 {
    let d = nodes.d();
    let h = nodes.matrix();
    let inv = cauchy_inverse(nodes);
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let mut acc = Complex64::ZERO;
            let mut biggest = 1.0_f64;
            for k in 0..d {
                let term = h[i][k] * inv.entries[k][j];
                biggest = biggest.max(term.norm());
                acc += term;
            }
            let id = if i == j { Complex64::ONE } else { Complex64::ZERO };
            worst = worst.max((acc - id).norm() / biggest);
        }
    }
    worst
}
