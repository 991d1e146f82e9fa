//! Residual checks of the functional equations and identities satisfied by
//! the closed-form correlators, plus an independent power-series oracle that
//! solves the planar two-point equation order-by-order in the coupling
//! without using any closed formula.

use num_complex::Complex64;

use crate::correlators::{
    g0_oneone, g0_oneone_at_node, g0_pair, g0_pair_at_node, g_matrix, OneOneFormula, PairFormula,
};
use crate::curve::RationalR;
use crate::error::{Error, Result};
use crate::series::SeriesJet;
use crate::spectral::{series_spectral, ModelInput, SpectralData};

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub name: String,
    pub max_residual: f64,
    pub sample_count: usize,
    pub worst_point: String,
}

impl ResidualReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), max_residual: 0.0, sample_count: 0, worst_point: String::new() }
    }

    fn record(&mut self, residual: f64, point: String) {
        self.sample_count += 1;
        if residual > self.max_residual {
            self.max_residual = residual;
            self.worst_point = point;
        }
    }
}

/// Relative residual with floor 1 in the denominator.
fn rel(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(1.0)
}

const STENCIL_H: f64 = 1e-5;
const COLLISION_GUARD: f64 = 1e-6;

/// Deterministic complex sample points in the right half-plane, off the
/// real axis, scaled to the instance.
pub fn sample_points(scale: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|i| {
            let t = i as f64;
            let fr = |x: f64| x - x.floor();
            let re = scale * (0.3 + 1.2 * fr(0.618_033_988_7 * t + 0.17));
            let im = scale * (0.15 + 0.6 * fr(0.754_877_666_2 * t + 0.31));
            Complex64::new(re, im)
        })
        .collect()
}

/// Principal-branch inverse of `R`: the preimage in the right half-plane
/// reached by Newton iteration from the target itself.
pub fn invert_r(curve: &RationalR, target: Complex64) -> Result<Complex64> {
    if curve.coupling() == 0.0 {
        return Ok(target);
    }
    let scale = curve.scale();
    let mut z = target;
    for _ in 0..60 {
        let f = curve.eval(z)? - target;
        if f.norm() < 1e-13 * target.norm().max(scale) {
            break;
        }
        z -= f / curve.eval_prime(z)?;
    }
    let resid = (curve.eval(z)? - target).norm();
    if resid > 1e-9 * target.norm().max(1.0) {
        return Err(Error::BranchInversionFailure {
            target: format!("{target}"),
            why: format!("Newton stalled with |R(z) - target| = {resid:e}"),
        });
    }
    if z.re <= 0.0 {
        return Err(Error::BranchInversionFailure {
            target: format!("{target}"),
            why: format!("inverse {z} left the right half-plane"),
        });
    }
    Ok(z)
}

fn stencil_derivative(
    f: &dyn Fn(Complex64) -> Result<Complex64>,
    x: Complex64,
    h: f64,
) -> Result<Complex64> {
    let fp2 = f(x + 2.0 * h)?;
    let fp1 = f(x + h)?;
    let fm1 = f(x - h)?;
    let fm2 = f(x - 2.0 * h)?;
    Ok((-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h))
}

/// Residual of the holomorphic two-point functional equation at `(zeta, eta)`.
pub fn residual_extension(s: &SpectralData, zeta: Complex64, eta: Complex64) -> Result<f64> {
    let curve = s.curve();
    let c = s.input.coupling();
    let scale = s.input.scale();
    let z = invert_r(&curve, zeta)?;
    let wv = invert_r(&curve, eta)?;
    let node_vals: Vec<Complex64> = s
        .eps
        .iter()
        .map(|&e| curve.eval(Complex64::new(e, 0.0)))
        .collect::<Result<_>>()?;
    // When zeta or eta sits on a node value the generic closed form is a
    // removable 0/0; switch to the explicit limit.
    let snap = 1e-9 * scale;
    let g = if let Some(k) = (0..s.input.d).find(|&k| (zeta - node_vals[k]).norm() < snap) {
        g0_pair_at_node(s, k, wv)?
    } else if let Some(k) = (0..s.input.d).find(|&k| (eta - node_vals[k]).norm() < snap) {
        g0_pair_at_node(s, k, z)?
    } else {
        g0_pair(s, z, wv, PairFormula::HatProduct)?.value
    };
    let mut self_energy = Complex64::ZERO;
    for k in 0..s.input.d {
        // G(zeta, E_k) via symmetry of the two-point function.
        self_energy += s.input.r[k] * g0_pair_at_node(s, k, z)?;
    }
    let lhs = (zeta + eta + c * self_energy) * g;
    let mut quotient_sum = Complex64::ZERO;
    for k in 0..s.input.d {
        let gap = node_vals[k] - zeta;
        let term = if gap.norm() > COLLISION_GUARD * scale {
            let g_k_eta = g0_pair_at_node(s, k, wv)?;
            (g_k_eta - g) / gap
        } else {
            let f = |t: Complex64| -> Result<Complex64> {
                let zt = invert_r(&curve, t)?;
                g0_pair(s, zt, wv, PairFormula::HatProduct).map(|v| v.value)
            };
            stencil_derivative(&f, zeta, STENCIL_H * scale)?
        };
        quotient_sum += s.input.r[k] * term;
    }
    let rhs = Complex64::ONE + c * quotient_sum;
    Ok(rel(lhs, rhs))
}

/// Residual of the two-point equation on the node lattice, all index pairs.
pub fn residual_lattice_2pt(s: &SpectralData) -> Result<ResidualReport> {
    let mut report = ResidualReport::new("lattice_2pt");
    let d = s.input.d;
    if s.input.lambda == 0.0 {
        report.sample_count = d * d;
        return Ok(report);
    }
    let curve = s.curve();
    let c = s.input.coupling();
    let scale = s.input.scale();
    let g = g_matrix(s)?;
    for a in 0..d {
        // Derivative limit of the a-th difference quotient: the first-slot
        // derivative of the two-point function with the second slot at node b.
        let self_energy: f64 = (0..d).map(|k| s.input.r[k] * g[a][k]).sum();
        for b in 0..d {
            let f = |t: Complex64| -> Result<Complex64> {
                let zt = invert_r(&curve, t)?;
                g0_pair_at_node(s, b, zt)
            };
            let diag_term =
                stencil_derivative(&f, Complex64::new(s.input.e[a], 0.0), STENCIL_H * scale)?;
            let mut quotient_sum = s.input.r[a] * diag_term;
            for k in 0..d {
                if k != a {
                    quotient_sum +=
                        s.input.r[k] * (g[k][b] - g[a][b]) / (s.input.e[k] - s.input.e[a]);
                }
            }
            let lhs = Complex64::new((s.input.e[a] + s.input.e[b] + c * self_energy) * g[a][b], 0.0);
            let rhs = Complex64::ONE + c * quotient_sum;
            report.record(rel(lhs, rhs), format!("(a, b) = ({a}, {b})"));
        }
    }
    Ok(report)
}

/// Residual of the reflection identity
/// `R(z) + c sum r_k G(z, node_k) + c sum r_k/(R(node_k) - R(z)) = -R(-z)`.
pub fn residual_reflection(s: &SpectralData, z: Complex64) -> Result<f64> {
    let curve = s.curve();
    let c = s.input.coupling();
    let rz = curve.eval(z)?;
    let mut acc = rz + curve.eval(-z)?;
    for k in 0..s.input.d {
        let node_val = curve.eval(Complex64::new(s.eps[k], 0.0))?;
        acc += c * s.input.r[k] * g0_pair_at_node(s, k, z)?;
        acc += c * s.input.r[k] / (node_val - rz);
    }
    Ok(acc.norm() / rz.norm().max(1.0))
}

/// Residual of the partial-fraction identity linking the hat fan of `w`
/// to the roots of the odd part of `R`.
pub fn residual_fractions(s: &SpectralData, w: Complex64) -> Result<f64> {
    let curve = s.curve();
    let fan = curve.hat_fan(w)?;
    let alpha = curve.alpha_roots()?;
    let rw = fan.value;
    let mut lhs = 1.0 / (rw - curve.eval(-w)?);
    for &h in &fan.hats {
        lhs += 1.0 / (rw - curve.eval(-h)?);
    }
    let mut rhs = 1.0 / (2.0 * (rw - curve.eval(Complex64::ZERO)?));
    for &a in &alpha.alpha {
        rhs += 1.0 / (rw - curve.eval(Complex64::new(a, 0.0))?);
    }
    Ok(rel(lhs, rhs))
}

/// Residual of the 1+1-point functional equation at `(z, w)`.
pub fn residual_oneone_functional(s: &SpectralData, z: Complex64, w: Complex64) -> Result<f64> {
    if s.input.lambda == 0.0 {
        return Ok(0.0);
    }
    let curve = s.curve();
    let c = s.input.coupling();
    let rz = curve.eval(z)?;
    let rw = curve.eval(w)?;
    let g11_zw = g0_oneone(s, z, w, OneOneFormula::Symmetric)?.value;
    let mut node_sum = Complex64::ZERO;
    for k in 0..s.input.d {
        let node_val = curve.eval(Complex64::new(s.eps[k], 0.0))?;
        let g11_k = g0_oneone_at_node(s, k, w)?;
        node_sum += s.input.r[k] * g11_k / (node_val - rz);
    }
    let lhs = (rz - curve.eval(-z)?) * g11_zw - c * node_sum;
    let g_zw = g0_pair(s, z, w, PairFormula::HatProduct)?.value;
    let g_ww = g0_pair(s, w, w, PairFormula::HatProduct)?.value;
    let rhs = s.input.lambda * (g_zw - g_ww) / (rz - rw);
    Ok(rel(lhs, rhs))
}

/// Residual of the constraint obtained by evaluating the 1+1-point
/// functional equation at the positive roots of the odd part of `R`.
pub fn residual_oneone_alpha(s: &SpectralData, w: Complex64) -> Result<f64> {
    if s.input.lambda == 0.0 {
        return Ok(0.0);
    }
    let curve = s.curve();
    let c = s.input.coupling();
    let alpha = curve.alpha_roots()?;
    let rw = curve.eval(w)?;
    let g_ww = g0_pair(s, w, w, PairFormula::HatProduct)?.value;
    let g11_nodes: Vec<Complex64> = (0..s.input.d)
        .map(|l| g0_oneone_at_node(s, l, w))
        .collect::<Result<_>>()?;
    let node_vals: Vec<Complex64> = s
        .eps
        .iter()
        .map(|&e| curve.eval(Complex64::new(e, 0.0)))
        .collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for &ak in &alpha.alpha {
        let ra = curve.eval(Complex64::new(ak, 0.0))?;
        let mut lhs = Complex64::ZERO;
        for l in 0..s.input.d {
            lhs += c * s.input.r[l] * g11_nodes[l] / (ra - node_vals[l]);
        }
        let g_aw = g0_pair(s, Complex64::new(ak, 0.0), w, PairFormula::HatProduct)?.value;
        let rhs = s.input.lambda * (g_aw - g_ww) / (ra - rw);
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Independent series oracle
// ---------------------------------------------------------------------------

/// Truncated bivariate power series in (coupling, delta) where delta is the
/// offset of the first argument from its node value.
#[derive(Debug, Clone)]
struct BiJet {
    /// c[m][j]: coefficient of lambda^m delta^j.
    c: Vec<Vec<Complex64>>,
}

impl BiJet {
    fn zero(k: usize, d: usize) -> Self {
        Self { c: vec![vec![Complex64::ZERO; d + 1]; k + 1] }
    }

    fn constant(x: Complex64, k: usize, d: usize) -> Self {
        let mut out = Self::zero(k, d);
        out.c[0][0] = x;
        out
    }

    fn orders(&self) -> (usize, usize) {
        (self.c.len() - 1, self.c[0].len() - 1)
    }

    fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (row, rrow) in out.c.iter_mut().zip(&rhs.c) {
            for (a, b) in row.iter_mut().zip(rrow) {
                *a += b;
            }
        }
        out
    }

    fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (row, rrow) in out.c.iter_mut().zip(&rhs.c) {
            for (a, b) in row.iter_mut().zip(rrow) {
                *a -= b;
            }
        }
        out
    }

    fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for row in out.c.iter_mut() {
            for a in row.iter_mut() {
                *a *= s;
            }
        }
        out
    }

    fn mul(&self, rhs: &Self) -> Self {
        let (k, d) = self.orders();
        let mut out = Self::zero(k, d);
        for m1 in 0..=k {
            for j1 in 0..=d {
                let a = self.c[m1][j1];
                if a == Complex64::ZERO {
                    continue;
                }
                for m2 in 0..=(k - m1) {
                    for j2 in 0..=(d - j1) {
                        out.c[m1 + m2][j1 + j2] += a * rhs.c[m2][j2];
                    }
                }
            }
        }
        out
    }

    /// Reciprocal by Newton iteration; constant term must be nonzero.
    fn recip(&self) -> Self {
        let (k, d) = self.orders();
        let a00 = self.c[0][0];
        assert!(a00.norm() > 0.0);
        let mut x = Self::constant(1.0 / a00, k, d);
        let two = Self::constant(Complex64::new(2.0, 0.0), k, d);
        let iters = (usize::BITS - (k + d + 1).leading_zeros()) as usize + 1;
        for _ in 0..iters {
            x = x.mul(&two.sub(&self.mul(&x)));
        }
        x
    }

    /// `(f - f|_{delta=0}) / delta`: shifts the delta index down by one.
    fn shift_div_delta(&self) -> Self {
        let (k, d) = self.orders();
        let mut out = Self::zero(k, d);
        for m in 0..=k {
            for j in 0..d {
                out.c[m][j] = self.c[m][j + 1];
            }
        }
        out
    }

    /// Multiply by the coupling variable: shifts the lambda index up by one.
    fn mul_lambda(&self) -> Self {
        let (k, d) = self.orders();
        let mut out = Self::zero(k, d);
        for m in 1..=k {
            out.c[m] = self.c[m - 1].clone();
        }
        out
    }

    /// The restriction to delta = 0, broadcast as a delta-constant.
    fn at_delta_zero(&self) -> Self {
        let (k, d) = self.orders();
        let mut out = Self::zero(k, d);
        for m in 0..=k {
            out.c[m][0] = self.c[m][0];
        }
        out
    }
}

/// Solves the lattice two-point equation order-by-order in the coupling,
/// tracking each node-pair value together with its offset expansion in the
/// first argument (needed for the diagonal difference-quotient term).
/// Returns the d x d matrix of coupling jets of the node values. This
/// routine never touches the closed-form machinery.
pub fn series_oracle(input: &ModelInput, order: usize) -> Result<Vec<Vec<SeriesJet>>> {
    if order > 8 {
        return Err(Error::InvalidInput(format!("oracle order {order} exceeds 8")));
    }
    let k = order;
    let depth = order + 1;
    let d = input.d;
    let e = &input.e;
    let r = &input.r;
    // delta series of 1/(E_a + E_b + delta).
    let mut delta = BiJet::zero(k, depth);
    delta.c[0][1] = Complex64::ONE;
    let mut g: Vec<Vec<BiJet>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| {
                    BiJet::constant(Complex64::new(e[a] + e[b], 0.0), k, depth)
                        .add(&delta)
                        .recip()
                })
                .collect()
        })
        .collect();
    // Each sweep makes one more coupling order exact.
    for _ in 0..k {
        let mut next = Vec::with_capacity(d);
        for a in 0..d {
            let mut row = Vec::with_capacity(d);
            for b in 0..d {
                let mut self_energy = BiJet::zero(k, depth);
                for j in 0..d {
                    self_energy = self_energy.add(&g[a][j].scale(r[j]));
                }
                let mut quotient = g[a][b].shift_div_delta().scale(r[a]);
                for j in 0..d {
                    if j != a {
                        let gap = BiJet::constant(Complex64::new(e[j] - e[a], 0.0), k, depth)
                            .sub(&delta);
                        let diff = g[j][b].at_delta_zero().sub(&g[a][b]);
                        quotient = quotient.add(&diff.mul(&gap.recip()).scale(r[j]));
                    }
                }
                let num = BiJet::constant(Complex64::ONE, k, depth)
                    .add(&quotient.scale(1.0 / input.n).mul_lambda());
                let den = BiJet::constant(Complex64::new(e[a] + e[b], 0.0), k, depth)
                    .add(&delta)
                    .add(&self_energy.scale(1.0 / input.n).mul_lambda());
                row.push(num.mul(&den.recip()));
            }
            next.push(row);
        }
        g = next;
    }
    Ok((0..d)
        .map(|a| {
            (0..d)
                .map(|b| SeriesJet::new((0..=k).map(|m| g[a][b].c[m][0]).collect()))
                .collect()
        })
        .collect())
}

/// Coupling jets of the node-matrix values composed from the spectral jets
/// and the closed product formula, in truncated-series arithmetic.
pub fn series_closed_form(input: &ModelInput, order: usize) -> Result<Vec<Vec<SeriesJet>>> {
    let k = order;
    let d = input.d;
    let (eps, rho) = series_spectral(input, k)?;
    let c = SeriesJet::variable(k).scale(1.0 / input.n);
    // Hat jets: for each node index a and pole index j, the root of
    // R(z) = E_a near -eps_j, written z = -eps_j + w with w = O(coupling).
    let mut hats: Vec<Vec<SeriesJet>> = Vec::with_capacity(d);
    for a in 0..d {
        let mut row = Vec::with_capacity(d);
        for j in 0..d {
            let mut w = SeriesJet::constant(0.0, k);
            for _ in 0..(k + 3) {
                // phi(w) = (w - eps_j - E_a) w - c rho_j
                //          - c sum_{m != j} rho_m w / (eps_m - eps_j + w)
                let base = w.sub(&eps[j]).add_scalar(-input.e[a]);
                let mut phi = base.mul(&w).sub(&c.mul(&rho[j]));
                let mut dphi = base.add(&w);
                for m in 0..d {
                    if m != j {
                        let q = eps[m].sub(&eps[j]).add(&w).recip();
                        phi = phi.sub(&c.mul(&rho[m]).mul(&w).mul(&q));
                        dphi = dphi.sub(&c.mul(&rho[m]).mul(&q).mul(
                            &SeriesJet::constant(1.0, k).sub(&w.mul(&q)),
                        ));
                    }
                }
                w = w.sub(&phi.div(&dphi));
            }
            row.push(w.sub(&eps[j]));
        }
        hats.push(row);
    }
    // R'(eps_a) = r_a / rho_a as jets (exact identity of the spectral system).
    let rprime: Vec<SeriesJet> =
        (0..d).map(|a| rho[a].recip().scale(input.r[a])).collect();
    let mut out: Vec<Vec<SeriesJet>> = vec![vec![SeriesJet::constant(0.0, k); d]; d];
    for a in 0..d {
        for b in a..d {
            let mut prod = SeriesJet::constant(1.0, k);
            for j in 0..d {
                for m in 0..d {
                    let num = hats[a][j].add(&hats[b][m]).neg();
                    let den = eps[j].add(&eps[m]);
                    prod = prod.mul(&num.div(&den));
                }
            }
            for j in 0..d {
                if j != a {
                    // R(eps_a) - R(eps_j) = E_a - E_j exactly, at every order.
                    prod = prod.mul(&eps[a].sub(&eps[j]).scale(1.0 / (input.e[a] - input.e[j])));
                }
                if j != b {
                    prod = prod.mul(&eps[b].sub(&eps[j]).scale(1.0 / (input.e[b] - input.e[j])));
                }
            }
            let den = rprime[a].mul(&rprime[b]).mul(&eps[a].add(&eps[b]));
            let val = prod.div(&den);
            out[a][b] = val.clone();
            out[b][a] = val;
        }
    }
    Ok(out)
}

/// Coefficient-wise deviation between the closed-form jets and the oracle.
pub fn compare_series(input: &ModelInput, order: usize) -> Result<ResidualReport> {
    let oracle = series_oracle(input, order)?;
    let closed = series_closed_form(input, order)?;
    let mut report = ResidualReport::new("series_compare");
    for a in 0..input.d {
        for b in 0..input.d {
            for m in 0..=order {
                let o = oracle[a][b].coeff(m);
                let c = closed[a][b].coeff(m);
                let dev = (o - c).norm() / o.norm().max(1.0);
                report.record(dev, format!("(a, b, order) = ({a}, {b}, {m})"));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{solve_spectral, SolveOptions};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn solved(e: Vec<f64>, r: Vec<f64>, lambda: f64) -> SpectralData {
        let input = ModelInput::new(e, r, None, lambda).unwrap();
        solve_spectral(&input, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn inversion_roundtrip() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        let curve = s.curve();
        for &t in &[c(1.1, 0.0), c(2.3, 0.4), c(0.8, -0.2)] {
            let z = invert_r(&curve, t).unwrap();
            assert!((curve.eval(z).unwrap() - t).norm() < 1e-9);
            assert!(z.re > 0.0);
        }
    }

    #[test]
    fn extension_residual_lambda_zero() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.0);
        let res = residual_extension(&s, c(1.1, 0.0), c(2.2, 0.0)).unwrap();
        assert!(res < 1e-14);
    }

    #[test]
    fn extension_residual_small_on_solved_instance() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        for &(ze, et) in &[
            (c(1.05, 0.0), c(1.95, 0.0)),
            (c(1.1, 0.02), c(2.1, -0.03)),
            (c(0.95, 0.0), c(1.02, 0.0)),
        ] {
            let res = residual_extension(&s, ze, et).unwrap();
            assert!(res < 1e-9, "residual {res} at ({ze}, {et})");
        }
    }

    #[test]
    fn extension_residual_with_collision_limit() {
        // zeta pinned onto a node value: the difference quotient becomes the
        // derivative limit and the equation still holds.
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        let res = residual_extension(&s, c(1.0, 0.0), c(1.9, 0.0)).unwrap();
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn extension_residual_detects_perturbation() {
        let mut s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        s.eps[0] += 1e-3;
        let res = residual_extension(&s, c(1.05, 0.0), c(1.95, 0.0)).unwrap();
        assert!(res > 1e-6, "residual {res} too forgiving");
    }

    #[test]
    fn lattice_residual_small() {
        for d in [1usize, 2, 3] {
            let e: Vec<f64> = (0..d).map(|i| 0.9 + 0.8 * i as f64).collect();
            let r: Vec<f64> = (0..d).map(|i| 1.0 + 0.3 * i as f64).collect();
            let s = solved(e, r, 0.15);
            let rep = residual_lattice_2pt(&s).unwrap();
            assert!(rep.max_residual < 1e-9, "d = {d}: {rep:?}");
            assert_eq!(rep.sample_count, d * d);
        }
    }

    #[test]
    fn lattice_residual_zero_at_lambda_zero() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.0);
        let rep = residual_lattice_2pt(&s).unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn reflection_residual_small_and_at_large_z() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        for &z in &[c(0.6, 0.3), c(1.4, -0.5), c(2.5, 0.1)] {
            assert!(residual_reflection(&s, z).unwrap() < 1e-9);
        }
        assert!(residual_reflection(&s, c(1e5, 0.0)).unwrap() < 1e-7);
        let s0 = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.0);
        assert!(residual_reflection(&s0, c(0.6, 0.3)).unwrap() < 1e-15);
    }

    #[test]
    fn fractions_residual_small() {
        let s = solved(vec![0.8, 1.9, 3.1], vec![1.0, 2.0, 1.2], 0.12);
        for &w in &[c(0.7, 0.2), c(1.5, -0.4), c(3.0, 0.6)] {
            assert!(residual_fractions(&s, w).unwrap() < 1e-9, "at {w}");
        }
        // Near a root of the odd part both sides are large; the residual of
        // the difference stays controlled by the shared pole.
        let curve = s.curve();
        let a1 = curve.alpha_roots().unwrap().alpha[0];
        assert!(residual_fractions(&s, c(a1 * (1.0 + 1e-4), 0.0)).unwrap() < 1e-6);
    }

    #[test]
    fn fractions_residual_zero_at_lambda_zero() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.0);
        assert!(residual_fractions(&s, c(0.7, 0.2)).unwrap() < 1e-15);
    }

    #[test]
    fn oneone_functional_residual_small() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        for &(z, w) in &[(c(0.7, 0.0), c(1.3, 0.0)), (c(0.5, 0.4), c(1.6, -0.2))] {
            let res = residual_oneone_functional(&s, z, w).unwrap();
            assert!(res < 1e-8, "residual {res} at ({z}, {w})");
        }
    }

    #[test]
    fn oneone_alpha_constraint_small() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        for &w in &[c(1.3, 0.0), c(0.9, 0.5)] {
            let res = residual_oneone_alpha(&s, w).unwrap();
            assert!(res < 1e-8, "residual {res} at {w}");
        }
    }

    #[test]
    fn oracle_order_zero_is_gaussian() {
        let input = ModelInput::new(vec![1.0, 2.0], vec![1.0, 1.5], None, 0.0).unwrap();
        let jets = series_oracle(&input, 3).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let expect = 1.0 / (input.e[a] + input.e[b]);
                assert!((jets[a][b].coeff(0).re - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn oracle_first_order_d1() {
        // d=1, E=1, r=1, N=1: node value 1/2 - coupling/4 + O(coupling^2).
        let input = ModelInput::new(vec![1.0], vec![1.0], Some(1.0), 0.0).unwrap();
        let jets = series_oracle(&input, 4).unwrap();
        assert!((jets[0][0].coeff(0).re - 0.5).abs() < 1e-15);
        assert!((jets[0][0].coeff(1).re + 0.25).abs() < 1e-13);
    }

    #[test]
    fn closed_form_jets_match_oracle() {
        for (e, r) in [
            (vec![1.0], vec![1.0]),
            (vec![1.0, 2.0], vec![1.0, 1.5]),
            (vec![0.8, 1.9, 3.3], vec![1.0, 2.0, 1.2]),
        ] {
            let input = ModelInput::new(e, r, None, 0.0).unwrap();
            let rep = compare_series(&input, 5).unwrap();
            assert!(rep.max_residual < 1e-8, "d = {}: {rep:?}", input.d);
        }
    }

    #[test]
    fn compare_series_detects_corruption() {
        let input = ModelInput::new(vec![1.0, 2.0], vec![1.0, 1.5], None, 0.0).unwrap();
        let oracle = series_oracle(&input, 5).unwrap();
        let mut closed = series_closed_form(&input, 5).unwrap();
        let bad = closed[0][1].coeff(3) + Complex64::new(1e-4, 0.0);
        closed[0][1].set_coeff(3, bad);
        let dev = (oracle[0][1].coeff(3) - closed[0][1].coeff(3)).norm();
        assert!(dev > 1e-5);
    }

    #[test]
    fn closed_form_jets_match_numeric_matrix() {
        // Independent check: jets evaluated at a small coupling reproduce
        // the numerically solved node matrix.
        let input0 = ModelInput::new(vec![1.0, 2.0], vec![1.0, 1.5], None, 0.0).unwrap();
        let jets = series_closed_form(&input0, 6).unwrap();
        let lambda = 0.02;
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], lambda);
        let g = crate::correlators::g_matrix(&s).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let approx = jets[a][b].eval(lambda).re;
                assert!((approx - g[a][b]).abs() < 1e-9, "({a}, {b}): {approx} vs {}", g[a][b]);
            }
        }
    }
}
