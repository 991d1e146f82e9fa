//! Solves the implicit 2d-dimensional system
//!
//! ```text
//! f_l = eps_l - E_l - (lambda/N) sum_k rho_k / (eps_k + eps_l)      = 0
//! g_l = 1 - r_l/rho_l + (lambda/N) sum_k rho_k / (eps_k + eps_l)^2  = 0
//! ```
//!
//! for the branch points `eps_k` and weights `rho_k`, by Newton iteration
//! with an adaptive homotopy in `lambda` starting from the exact solution
//! `(E, r)` at `lambda = 0`. The same system is solved order-by-order in
//! `lambda` to produce truncated power-series jets.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::curve::RationalR;
use crate::error::{Error, Result};
use crate::series::SeriesJet;

/// The physical data defining the measure.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub d: usize,
    pub e: Vec<f64>,
    pub r: Vec<f64>,
    pub n: f64,
    pub lambda: f64,
}

impl ModelInput {
    /// `n = None` defaults to `sum_k r_k`.
    pub fn new(e: Vec<f64>, r: Vec<f64>, n: Option<f64>, lambda: f64) -> Result<Self> {
        if e.is_empty() || e.len() != r.len() {
            return Err(Error::InvalidInput("E and r must be nonempty, same length".into()));
        }
        let d = e.len();
        for (i, &ei) in e.iter().enumerate() {
            if !(ei > 0.0) {
                return Err(Error::InvalidInput(format!("E[{i}] = {ei} must be > 0")));
            }
            for (j, &ej) in e.iter().enumerate().skip(i + 1) {
                if (ei - ej).abs() <= 1e-12 * ei.abs().max(ej.abs()) {
                    return Err(Error::InvalidInput(format!(
                        "E[{i}] = {ei} and E[{j}] = {ej} are not distinct"
                    )));
                }
            }
        }
        if let Some((i, &ri)) = r.iter().enumerate().find(|(_, &ri)| !(ri > 0.0)) {
            return Err(Error::InvalidInput(format!("r[{i}] = {ri} must be > 0")));
        }
        let n = n.unwrap_or_else(|| r.iter().sum());
        if !(n > 0.0) {
            return Err(Error::InvalidInput(format!("N = {n} must be > 0")));
        }
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lambda = {lambda} must be finite and >= 0")));
        }
        Ok(Self { d, e, r, n, lambda })
    }

    pub fn coupling(&self) -> f64 {
        self.lambda / self.n
    }

    pub fn scale(&self) -> f64 {
        self.e.iter().cloned().fold(1.0_f64, f64::max)
    }
}

/// Solved branch points and weights, with the worst residual of the system.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub input: ModelInput,
    pub eps: Vec<f64>,
    pub rho: Vec<f64>,
    pub residual_max: f64,
}

impl SpectralData {
    /// The rational cover defined by the solved data.
    pub fn curve(&self) -> RationalR {
        RationalR::new(self.eps.clone(), self.rho.clone(), self.input.coupling())
            .expect("solved data defines a valid curve")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Convergence tolerance, relative to `scale = max(1, max E_k)`.
    pub tol: f64,
    pub max_newton: usize,
    /// Minimum homotopy step as a fraction of the target lambda.
    pub min_homotopy_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-12, max_newton: 50, min_homotopy_step: 1e-6 }
    }
}

fn check_domain(input: &ModelInput, eps: &[f64], rho: &[f64]) -> Result<()> {
    let scale = input.scale();
    for (l, &el) in eps.iter().enumerate() {
        for &ek in eps.iter() {
            if (ek + el).abs() < 1e-13 * scale {
                return Err(Error::DomainViolation(format!(
                    "eps_k + eps_l vanishes near eps = {ek}, {el}"
                )));
            }
        }
        if rho[l].abs() < 1e-13 * scale {
            return Err(Error::DomainViolation(format!("rho[{l}] vanishes")));
        }
    }
    Ok(())
}

/// Componentwise residuals `(f, g)` of the system at `(eps, rho)`.
pub fn residuals(input: &ModelInput, eps: &[f64], rho: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    check_domain(input, eps, rho)?;
    let c = input.coupling();
    let d = input.d;
    let mut f = Vec::with_capacity(d);
    let mut g = Vec::with_capacity(d);
    for l in 0..d {
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for k in 0..d {
            let q = eps[k] + eps[l];
            s1 += rho[k] / q;
            s2 += rho[k] / (q * q);
        }
        f.push(eps[l] - input.e[l] - c * s1);
        g.push(1.0 - input.r[l] / rho[l] + c * s2);
    }
    Ok((f, g))
}

/// Analytic Jacobian of `(f, g)` with respect to `(eps_1..eps_d, rho_1..rho_d)`.
pub fn jacobian(input: &ModelInput, eps: &[f64], rho: &[f64]) -> Result<DMatrix<f64>> {
    check_domain(input, eps, rho)?;
    let c = input.coupling();
    let d = input.d;
    let mut jac = DMatrix::zeros(2 * d, 2 * d);
    for l in 0..d {
        for m in 0..d {
            let q_lm = eps[m] + eps[l];
            // d f_l / d eps_m
            let mut v = c * rho[m] / (q_lm * q_lm);
            if l == m {
                let sum: f64 = (0..d).map(|k| rho[k] / (eps[k] + eps[l]).powi(2)).sum();
                v += 1.0 + c * sum;
            }
            jac[(l, m)] = v;
            // d f_l / d rho_m
            jac[(l, d + m)] = -c / q_lm;
            // d g_l / d eps_m
            let mut w = -2.0 * c * rho[m] / (q_lm * q_lm * q_lm);
            if l == m {
                let sum: f64 = (0..d).map(|k| rho[k] / (eps[k] + eps[l]).powi(3)).sum();
                w -= 2.0 * c * sum;
            }
            jac[(d + l, m)] = w;
            // d g_l / d rho_m
            let mut u = c / (q_lm * q_lm);
            if l == m {
                u += input.r[l] / (rho[l] * rho[l]);
            }
            jac[(d + l, d + m)] = u;
        }
    }
    Ok(jac)
}

fn residual_max(input: &ModelInput, eps: &[f64], rho: &[f64]) -> Result<f64> {
    let (f, g) = residuals(input, eps, rho)?;
    Ok(f.iter().chain(g.iter()).fold(0.0_f64, |a, &b| a.max(b.abs())))
}

/// Newton iteration at a fixed lambda; returns the converged point or None.
fn newton_at(
    input: &ModelInput,
    lambda: f64,
    start: (&[f64], &[f64]),
    opts: &SolveOptions,
) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let local = ModelInput { lambda, ..input.clone() };
    let d = input.d;
    let tol = opts.tol * input.scale();
    let mut eps = start.0.to_vec();
    let mut rho = start.1.to_vec();
    for _ in 0..opts.max_newton {
        let (f, g) = match residuals(&local, &eps, &rho) {
            Ok(fg) => fg,
            Err(Error::DomainViolation(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let res = f.iter().chain(g.iter()).fold(0.0_f64, |a, &b| a.max(b.abs()));
        if !res.is_finite() {
            return Ok(None);
        }
        if res < tol {
            return Ok(Some((eps, rho)));
        }
        let jac = jacobian(&local, &eps, &rho)?;
        let rhs = DVector::from_iterator(2 * d, f.iter().chain(g.iter()).map(|&x| -x));
        let delta = match jac.lu().solve(&rhs) {
            Some(x) => x,
            None => return Ok(None),
        };
        for l in 0..d {
            eps[l] += delta[l];
            rho[l] += delta[d + l];
        }
    }
    Ok(None)
}

/// Adaptive lambda-homotopy Newton solve starting at the exact point
/// `(E, r)` for `lambda = 0`.
pub fn solve_spectral(input: &ModelInput, opts: &SolveOptions) -> Result<SpectralData> {
    let mut eps = input.e.clone();
    let mut rho = input.r.clone();
    if input.lambda == 0.0 {
        return Ok(SpectralData { input: input.clone(), eps, rho, residual_max: 0.0 });
    }
    let target = input.lambda;
    let min_step = opts.min_homotopy_step * target;
    let mut lambda = 0.0_f64;
    let mut step = target / 8.0;
    while lambda < target {
        let lambda_try = (lambda + step).min(target);
        match newton_at(input, lambda_try, (&eps, &rho), opts)? {
            Some((e2, r2)) => {
                if let Some(l) = e2.iter().chain(r2.iter()).find(|&&x| x <= 0.0) {
                    return Err(Error::ChamberExit {
                        lambda: lambda_try,
                        what: format!("component reached {l}"),
                    });
                }
                eps = e2;
                rho = r2;
                lambda = lambda_try;
                step *= 2.0;
            }
            None => {
                step *= 0.5;
                if step < min_step {
                    return Err(Error::Divergence { lambda: lambda_try, step });
                }
            }
        }
    }
    let residual_max = residual_max(input, &eps, &rho)?;
    Ok(SpectralData { input: input.clone(), eps, rho, residual_max })
}

/// Jets of `(eps_k(lambda), rho_k(lambda))` to order `K`, solved
/// order-by-order against the lambda = 0 Jacobian (which is block
/// `[[I, 0], [0, diag(1/r_l)]]`).
pub fn series_spectral(input: &ModelInput, order: usize) -> Result<(Vec<SeriesJet>, Vec<SeriesJet>)> {
    if order > 12 {
        return Err(Error::InvalidInput(format!("series order {order} exceeds 12")));
    }
    let d = input.d;
    let mut eps: Vec<SeriesJet> = input.e.iter().map(|&e| SeriesJet::constant(e, order)).collect();
    let mut rho: Vec<SeriesJet> = input.r.iter().map(|&r| SeriesJet::constant(r, order)).collect();
    let c = SeriesJet::variable(order).scale(1.0 / input.n);
    for m in 1..=order {
        // With orders < m correct and order m still zero, the order-m residual
        // is J0 times the needed correction.
        for l in 0..d {
            let mut s1 = SeriesJet::constant(0.0, order);
            let mut s2 = SeriesJet::constant(0.0, order);
            for k in 0..d {
                let q = eps[k].add(&eps[l]);
                let iq = q.recip();
                s1 = s1.add(&rho[k].mul(&iq));
                s2 = s2.add(&rho[k].mul(&iq).mul(&iq));
            }
            let f = eps[l].add_scalar(-input.e[l]).sub(&c.mul(&s1));
            let g = rho[l].recip().scale(-input.r[l]).add_scalar(1.0).add(&c.mul(&s2));
            let fe = f.coeff(m);
            let gr = g.coeff(m);
            eps[l].set_coeff(m, -fe);
            rho[l].set_coeff(m, -Complex64::new(input.r[l], 0.0) * gr);
        }
    }
    Ok((eps, rho))
}
