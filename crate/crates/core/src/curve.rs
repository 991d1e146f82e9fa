//! The degree-(d+1) rational cover `R(z) = z - c * sum_k rho_k / (eps_k + z)`
//! of the Riemann sphere, with preimage fans, the positive roots of the odd
//! part `R(z) - R(-z)`, and the product factorization of `R(z) - R(u)`.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Degree-(d+1) rational function with simple poles at `-eps_k` and infinity.
///
/// `coupling` is the ratio lambda/N multiplying every pole weight.
#[derive(Debug, Clone)]
pub struct RationalR {
    eps: Vec<f64>,
    rho: Vec<f64>,
    coupling: f64,
    scale: f64,
}

/// A base preimage `u` together with the `d` other roots of `R(z) = R(u)`,
/// branch-ordered: `hats[l]` lies in the real interval `(-eps_{l+2}, -eps_{l+1})`
/// (last one in `(-inf, -eps_d)`), or is its continuation off the real axis.
#[derive(Debug, Clone)]
pub struct PreimageFan {
    pub base: Complex64,
    pub hats: Vec<Complex64>,
    pub value: Complex64,
}

/// The positive roots `alpha_k` of `R(z) - R(-z) = 0`, ascending.
#[derive(Debug, Clone)]
pub struct AlphaRoots {
    pub alpha: Vec<f64>,
}

const POLE_GUARD: f64 = 1e-13;
const FIBER_GUARD: f64 = 1e-8;
const BASE_MATCH: f64 = 1e-8;
const CONTINUATION_STEPS: usize = 16;
const AMBIGUITY_GUARD: f64 = 1e-6;

/// Product of a slice of factors, multiplied pairwise as a balanced tree to
/// limit rounding accumulation for clustered factors.
pub fn balanced_product(factors: &[Complex64]) -> Complex64 {
    match factors.len() {
        0 => Complex64::ONE,
        1 => factors[0],
        n => {
            let (a, b) = factors.split_at(n / 2);
            balanced_product(a) * balanced_product(b)
        }
    }
}

impl RationalR {
    pub fn new(eps: Vec<f64>, rho: Vec<f64>, coupling: f64) -> Result<Self> {
        if eps.is_empty() || eps.len() != rho.len() {
            return Err(Error::InvalidInput("eps and rho must be nonempty, same length".into()));
        }
        if coupling < 0.0 || !coupling.is_finite() {
            return Err(Error::InvalidInput("coupling must be finite and >= 0".into()));
        }
        let scale = eps.iter().cloned().fold(1.0_f64, f64::max);
        for (i, &e) in eps.iter().enumerate() {
            if !(e > 0.0) {
                return Err(Error::InvalidInput(format!("eps[{i}] = {e} must be > 0")));
            }
            for (j, &e2) in eps.iter().enumerate().skip(i + 1) {
                if (e - e2).abs() <= 1e-12 * e.abs().max(e2.abs()) {
                    return Err(Error::InvalidInput(format!(
                        "eps[{i}] = {e} and eps[{j}] = {e2} are not distinct"
                    )));
                }
            }
        }
        if let Some((i, &r)) = rho.iter().enumerate().find(|(_, &r)| !(r > 0.0)) {
            return Err(Error::InvalidInput(format!("rho[{i}] = {r} must be > 0")));
        }
        Ok(Self { eps, rho, coupling, scale })
    }

    pub fn degree(&self) -> usize {
        self.eps.len() + 1
    }

    pub fn d(&self) -> usize {
        self.eps.len()
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn check_pole(&self, z: Complex64) -> Result<()> {
        for &e in &self.eps {
            let dist = (z + e).norm();
            if dist < POLE_GUARD * self.scale {
                return Err(Error::PoleHit { point: format!("{z}"), pole: -e, dist });
            }
        }
        Ok(())
    }

    /// `R(z) = z - c * sum_k rho_k / (eps_k + z)`.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z)?;
        let mut sum = Complex64::ZERO;
        for (&e, &r) in self.eps.iter().zip(&self.rho) {
            sum += r / (z + e);
        }
        Ok(z - self.coupling * sum)
    }

    /// `R'(z) = 1 + c * sum_k rho_k / (eps_k + z)^2`.
    pub fn eval_prime(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z)?;
        let mut sum = Complex64::ZERO;
        for (&e, &r) in self.eps.iter().zip(&self.rho) {
            let q = z + e;
            sum += r / (q * q);
        }
        Ok(Complex64::ONE + self.coupling * sum)
    }

    fn eval_real(&self, x: f64) -> f64 {
        let mut sum = 0.0;
        for (&e, &r) in self.eps.iter().zip(&self.rho) {
            sum += r / (x + e);
        }
        x - self.coupling * sum
    }

    /// eps sorted ascending, as `(index, value)` pairs.
    fn eps_sorted(&self) -> Vec<f64> {
        let mut v = self.eps.clone();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    /// The d+1 roots of `R(z) = v`. Real `v` with positive data takes the
    /// bracketed per-interval path; complex `v` uses Aberth iteration on the
    /// cleared-denominator polynomial. Both finish with Newton polish on
    /// `R(z) - v` directly. Roots are returned ascending (real path) or in
    /// polynomial-root order (complex path).
    pub fn preimages(&self, v: Complex64) -> Result<Vec<Complex64>> {
        if self.coupling == 0.0 {
            return Err(Error::ZeroCoupling);
        }
        let mut roots = if v.im == 0.0 {
            self.preimages_real(v.re)?
        } else {
            self.preimages_complex(v)?
        };
        for z in roots.iter_mut() {
            for _ in 0..2 {
                let rp = self.eval_prime(*z)?;
                let rv = self.eval(*z)?;
                *z -= (rv - v) / rp;
            }
            let resid = (self.eval(*z)? - v).norm();
            if resid > 1e-9 * v.norm().max(1.0) {
                return Err(Error::DomainViolation(format!(
                    "preimage polish failed: |R(root) - v| = {resid:e}"
                )));
            }
        }
        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                let dist = (roots[i] - roots[j]).norm();
                if dist < FIBER_GUARD * self.scale {
                    return Err(Error::DegenerateFiber {
                        a: format!("{}", roots[i]),
                        b: format!("{}", roots[j]),
                        dist,
                    });
                }
            }
        }
        Ok(roots)
    }

    /// One real root per component of R \ {-eps_1, ..., -eps_d}, ascending.
    fn preimages_real(&self, v: f64) -> Result<Vec<Complex64>> {
        let eps = self.eps_sorted();
        let d = eps.len();
        let mut roots = Vec::with_capacity(d + 1);
        // Interval walls in z, ascending: -inf, -eps_d, ..., -eps_1, +inf.
        for i in 0..=d {
            let lo_wall = if i == 0 { f64::NEG_INFINITY } else { -eps[d - i] };
            let hi_wall = if i == d { f64::INFINITY } else { -eps[d - i - 1] };
            let (mut lo, mut hi) = self.bracket_in_interval(lo_wall, hi_wall, v)?;
            // R - v is negative at lo, positive at hi; R' > 0 on the interval.
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.eval_real(mid) - v > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(Complex64::new(0.5 * (lo + hi), 0.0));
        }
        Ok(roots)
    }

    fn bracket_in_interval(&self, lo_wall: f64, hi_wall: f64, v: f64) -> Result<(f64, f64)> {
        let find_side = |start: f64, toward: f64, want_positive: bool| -> Result<f64> {
            // Move from `start` toward the wall `toward` until the sign is right.
            let mut t = 0.25;
            for _ in 0..400 {
                let x = if toward.is_infinite() {
                    // Expand outward: |x| doubles each time.
                    start + toward.signum() * (1.0_f64 / t - 1.0).max(1.0)
                } else {
                    start + (toward - start) * (1.0 - t)
                };
                let val = self.eval_real(x) - v;
                if val.is_finite() && ((val > 0.0) == want_positive) {
                    return Ok(x);
                }
                t *= 0.5;
            }
            Err(Error::RootCountMismatch { found: 0, expected: self.d() + 1 })
        };
        let inner = if lo_wall.is_infinite() || hi_wall.is_infinite() {
            if lo_wall.is_infinite() && hi_wall.is_infinite() {
                0.0
            } else if lo_wall.is_infinite() {
                hi_wall - 1.0
            } else {
                lo_wall + 1.0
            }
        } else {
            0.5 * (lo_wall + hi_wall)
        };
        let lo = find_side(inner, lo_wall, false)?;
        let hi = find_side(inner, hi_wall, true)?;
        Ok((lo, hi))
    }

    /// Monic coefficients (ascending) of
    /// `P(z) = (z - v) prod_k (z + eps_k) - c sum_k rho_k prod_{j != k} (z + eps_j)`.
    fn fiber_polynomial(&self, v: Complex64) -> Vec<Complex64> {
        let d = self.d();
        let full = real_poly_from_roots_negated(&self.eps);
        let mut p = vec![Complex64::ZERO; d + 2];
        // (z - v) * full
        for (i, &c) in full.iter().enumerate() {
            p[i + 1] += c;
            p[i] -= v * c;
        }
        for k in 0..d {
            let others: Vec<f64> =
                self.eps.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &e)| e).collect();
            let part = real_poly_from_roots_negated(&others);
            for (i, &c) in part.iter().enumerate() {
                p[i] -= self.coupling * self.rho[k] * c;
            }
        }
        p
    }

    fn preimages_complex(&self, v: Complex64) -> Result<Vec<Complex64>> {
        let poly = self.fiber_polynomial(v);
        aberth_roots(&poly).ok_or_else(|| {
            Error::DomainViolation("root iteration for the fiber polynomial did not converge".into())
        })
    }

    /// Preimage fan of `R(u)`: the root matching `u` becomes the base, the
    /// other `d` roots the hats in branch order. Complex `u` is tracked by
    /// nearest-neighbor continuation from the real anchor `Re(u)`.
    pub fn hat_fan(&self, u: Complex64) -> Result<PreimageFan> {
        if self.coupling == 0.0 {
            // Degree collapse: R = id, single preimage; hats are the
            // continuous limit -eps_k of the pole-zero cancellation.
            let eps = self.eps_sorted();
            return Ok(PreimageFan {
                base: u,
                hats: eps.iter().map(|&e| Complex64::new(-e, 0.0)).collect(),
                value: u,
            });
        }
        if u.im == 0.0 {
            let value = self.eval(u)?;
            let roots = self.preimages(value)?;
            self.assemble_fan(u, value, roots)
        } else {
            self.hat_fan_continued(u)
        }
    }

    fn assemble_fan(&self, u: Complex64, value: Complex64, roots: Vec<Complex64>) -> Result<PreimageFan> {
        let (bi, dist) = nearest(&roots, u);
        if dist > BASE_MATCH * self.scale {
            return Err(Error::BaseNotFound { base: format!("{u}"), dist });
        }
        let base = roots[bi];
        let mut hats: Vec<Complex64> =
            roots.into_iter().enumerate().filter(|&(i, _)| i != bi).map(|(_, z)| z).collect();
        // Branch order: hats[0] in (-eps_2, -eps_1), ..., hats[d-1] in (-inf, -eps_d).
        hats.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
        Ok(PreimageFan { base, hats, value })
    }

    fn hat_fan_continued(&self, u: Complex64) -> Result<PreimageFan> {
        let anchor = Complex64::new(u.re, 0.0);
        let fan0 = self.hat_fan(anchor)?;
        let mut tracked: Vec<Complex64> = std::iter::once(fan0.base).chain(fan0.hats).collect();
        for step in 1..=CONTINUATION_STEPS {
            let t = step as f64 / CONTINUATION_STEPS as f64;
            let ut = Complex64::new(u.re, t * u.im);
            let value = self.eval(ut)?;
            let roots = self.preimages(value)?;
            let mut taken = vec![false; roots.len()];
            let mut next = Vec::with_capacity(tracked.len());
            for &z in &tracked {
                let mut best = usize::MAX;
                let mut best_dist = f64::INFINITY;
                let mut second = f64::INFINITY;
                for (i, &r) in roots.iter().enumerate() {
                    let dist = (r - z).norm();
                    if dist < best_dist {
                        second = best_dist;
                        best_dist = dist;
                        best = i;
                    } else if dist < second {
                        second = dist;
                    }
                }
                if taken[best] || second - best_dist < AMBIGUITY_GUARD * self.scale {
                    return Err(Error::DegenerateFiber {
                        a: format!("{z}"),
                        b: format!("{}", roots[best]),
                        dist: second - best_dist,
                    });
                }
                taken[best] = true;
                next.push(roots[best]);
            }
            tracked = next;
        }
        let base = tracked[0];
        let dist = (base - u).norm();
        if dist > BASE_MATCH * self.scale {
            return Err(Error::BaseNotFound { base: format!("{u}"), dist });
        }
        Ok(PreimageFan { base, hats: tracked[1..].to_vec(), value: self.eval(u)? })
    }

    /// Roots of the secular equation `1 - c sum_k rho_k / (s - eps_k^2) = 0`
    /// in `s = z^2`; returns `alpha_k = sqrt(s_k)` ascending. The full root
    /// list of `R(z) - R(-z)` is then `{0, +-alpha_1, ..., +-alpha_d}`.
    pub fn alpha_roots(&self) -> Result<AlphaRoots> {
        let eps = self.eps_sorted();
        let d = eps.len();
        if self.coupling == 0.0 {
            return Ok(AlphaRoots { alpha: eps });
        }
        let c = self.coupling;
        let rho_by_eps: Vec<(f64, f64)> = {
            let mut v: Vec<(f64, f64)> = self.eps.iter().cloned().zip(self.rho.iter().cloned()).collect();
            v.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            v
        };
        let h = |s: f64| -> f64 {
            1.0 - c * rho_by_eps.iter().map(|&(e, r)| r / (s - e * e)).sum::<f64>()
        };
        let mut alpha = Vec::with_capacity(d);
        for k in 0..d {
            let lo_wall = eps[k] * eps[k];
            let hi_wall = if k + 1 < d { eps[k + 1] * eps[k + 1] } else { f64::INFINITY };
            // h -> -inf at lo_wall+, h -> +inf at hi_wall- (or -> 1 at +inf).
            let mut lo = f64::NAN;
            let mut t = 0.25;
            for _ in 0..400 {
                let x = if hi_wall.is_infinite() {
                    lo_wall + t * lo_wall.max(1.0)
                } else {
                    lo_wall + t * (hi_wall - lo_wall)
                };
                if h(x) < 0.0 {
                    lo = x;
                    break;
                }
                t *= 0.5;
            }
            let mut hi = f64::NAN;
            let mut t = 0.25;
            for _ in 0..400 {
                let x = if hi_wall.is_infinite() {
                    lo_wall + (1.0 / t) * lo_wall.max(1.0)
                } else {
                    hi_wall - t * (hi_wall - lo_wall)
                };
                if h(x) > 0.0 {
                    hi = x;
                    break;
                }
                t *= 0.5;
            }
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::RootCountMismatch { found: alpha.len(), expected: d });
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if h(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            alpha.push((0.5 * (lo + hi)).sqrt());
        }
        Ok(AlphaRoots { alpha })
    }

    /// Relative residual of the factorization
    /// `R(z) - R(u) = (z - u) prod_k (z - hat_u^k) / (z + eps_k)` at `z`.
    pub fn check_factorization(&self, u: Complex64, z: Complex64) -> Result<f64> {
        let fan = self.hat_fan(u)?;
        let lhs = self.eval(z)? - fan.value;
        let rhs = self.factorized_difference(&fan, z)?;
        Ok((lhs - rhs).norm() / lhs.norm().max(1.0))
    }

    /// `(z - u) prod_k (z - hat^k) / (z + eps_k)` for a fan at `u`.
    pub fn factorized_difference(&self, fan: &PreimageFan, z: Complex64) -> Result<Complex64> {
        self.check_pole(z)?;
        let num: Vec<Complex64> = fan.hats.iter().map(|&h| z - h).collect();
        let den: Vec<Complex64> = self.eps.iter().map(|&e| z + e).collect();
        Ok((z - fan.base) * balanced_product(&num) / balanced_product(&den))
    }
}

fn nearest(points: &[Complex64], target: Complex64) -> (usize, f64) {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, &p) in points.iter().enumerate() {
        let dist = (p - target).norm();
        if dist < best_dist {
            best_dist = dist;
            best = i;
        }
    }
    (best, best_dist)
}

/// Ascending coefficients of `prod_k (x + r_k)` for real `r_k`.
fn real_poly_from_roots_negated(r: &[f64]) -> Vec<Complex64> {
    let mut coeffs = vec![Complex64::ONE];
    for &rk in r {
        let mut next = vec![Complex64::ZERO; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] += c * rk;
        }
        coeffs = next;
    }
    coeffs
}

/// All roots of a monic polynomial (ascending coefficients, leading 1) by
/// Aberth-Ehrlich iteration. Returns None if the iteration stalls.
fn aberth_roots(coeffs: &[Complex64]) -> Option<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    debug_assert!((coeffs[n] - Complex64::ONE).norm() < 1e-12);
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::ZERO;
        let mut dp = Complex64::ZERO;
        for &c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    };
    // Cauchy bound for the root radius.
    let radius = 1.0 + coeffs[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.25) / n as f64 + 0.4;
            radius * Complex64::new(theta.cos(), theta.sin())
        })
        .collect();
    // Scale of the polynomial evaluated with all-positive terms; |p(z)| at or
    // below rounding noise relative to this means the root is as good as
    // floating point allows (componentwise backward error).
    let poly_scale = |x: Complex64| -> f64 {
        let mut acc = 0.0_f64;
        let mut pw = 1.0_f64;
        for &c in coeffs.iter() {
            acc += c.norm() * pw;
            pw *= x.norm();
        }
        acc.max(f64::MIN_POSITIVE)
    };
    let mut converged = vec![false; n];
    for _ in 0..500 {
        let mut all_done = true;
        for i in 0..n {
            if converged[i] {
                continue;
            }
            let (p, dp) = eval(z[i]);
            if p.norm() <= 4.0 * f64::EPSILON * poly_scale(z[i]) {
                converged[i] = true;
                continue;
            }
            if dp.norm() == 0.0 {
                let nudge = Complex64::new(1e-8 * (1.0 + z[i].norm()), 1e-8);
                z[i] += nudge;
                all_done = false;
                continue;
            }
            let newton = p / dp;
            let mut repulse = Complex64::ZERO;
            for j in 0..n {
                if j != i {
                    repulse += 1.0 / (z[i] - z[j]);
                }
            }
            let den = Complex64::ONE - newton * repulse;
            let step = if den.norm() > 1e-12 { newton / den } else { newton };
            z[i] -= step;
            if step.norm() < 1e-14 * (1.0 + z[i].norm()) {
                converged[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return Some(z);
        }
    }
    if converged.iter().all(|&c| c) {
        Some(z)
    } else {
        None
    }
}
