//! Closed-form planar correlators built on the rational cover `R`:
//! the two-point function in four equivalent forms, its node matrix
//! `G_kl`, the diagonal value, and the 1+1-point function in two forms.

use num_complex::Complex64;

use crate::cauchy::{cauchy_inverse, CauchyNodes};
use crate::curve::{balanced_product, PreimageFan, RationalR};
use crate::error::{Error, Result};
use crate::spectral::SpectralData;

/// Which closed form(s) of the two-point function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFormula {
    /// Single hat-fan product over `R(w)`-preimages.
    HatProduct,
    /// Manifestly symmetric double product over both hat fans.
    Symmetric,
    /// Sum over node fans divided by `R(w) - R(-z)`.
    NodeSum,
    /// Node-matrix partial-fraction form.
    Matrix,
    /// Evaluate every form and record the spread.
    All,
}

/// Which closed form(s) of the 1+1-point function to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneOneFormula {
    /// Double sum with structured Cauchy-inverse coefficients.
    CauchySum,
    /// Manifestly symmetric product form.
    Symmetric,
    All,
}

#[derive(Debug, Clone)]
pub struct CorrelatorValue {
    pub value: Complex64,
    pub formula: &'static str,
    /// Max pairwise relative deviation across the evaluated formulas.
    pub cross_check_spread: f64,
}

const SINGULAR_GUARD: f64 = 1e-10;
/// Below this separation the 1+1-point function takes the coincidence
/// limit path instead of direct evaluation.
const COINCIDENCE_GUARD: f64 = 1e-8;
const COINCIDENCE_DELTA: f64 = 1e-5;

fn guard(x: Complex64, scale: f64, what: &str) -> Result<Complex64> {
    if x.norm() < SINGULAR_GUARD * scale {
        Err(Error::SingularPoint(format!("{what} vanishes: |{x}| below guard")))
    } else {
        Ok(x)
    }
}

fn spread_of(values: &[Complex64]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, &a) in values.iter().enumerate() {
        for &b in values.iter().skip(i + 1) {
            let den = a.norm().max(b.norm());
            if den > 0.0 {
                worst = worst.max((a - b).norm() / den);
            }
        }
    }
    worst
}

fn r_at_eps(curve: &RationalR) -> Result<Vec<Complex64>> {
    curve.eps().iter().map(|&e| curve.eval(Complex64::new(e, 0.0))).collect()
}

fn eps_fans(curve: &RationalR) -> Result<Vec<PreimageFan>> {
    curve.eps().iter().map(|&e| curve.hat_fan(Complex64::new(e, 0.0))).collect()
}

/// Planar two-point function at `(z, w)`.
pub fn g0_pair(
    s: &SpectralData,
    z: Complex64,
    w: Complex64,
    formula: PairFormula,
) -> Result<CorrelatorValue> {
    let scale = s.input.scale();
    if s.input.coupling() == 0.0 {
        let den = guard(z + w, scale, "z + w")?;
        return Ok(CorrelatorValue { value: 1.0 / den, formula: "gaussian", cross_check_spread: 0.0 });
    }
    let curve = s.curve();
    let (tags, values): (Vec<&'static str>, Vec<Complex64>) = match formula {
        PairFormula::HatProduct => (vec!["hat_product"], vec![pair_hat_product(s, &curve, z, w)?]),
        PairFormula::Symmetric => (vec!["symmetric"], vec![pair_symmetric(s, &curve, z, w)?]),
        PairFormula::NodeSum => (vec!["node_sum"], vec![pair_node_sum(s, &curve, z, w)?]),
        PairFormula::Matrix => (vec!["matrix"], vec![pair_matrix_form(s, &curve, z, w)?]),
        PairFormula::All => (
            vec!["hat_product", "symmetric", "node_sum", "matrix"],
            vec![
                pair_hat_product(s, &curve, z, w)?,
                pair_symmetric(s, &curve, z, w)?,
                pair_node_sum(s, &curve, z, w)?,
                pair_matrix_form(s, &curve, z, w)?,
            ],
        ),
    };
    Ok(CorrelatorValue {
        value: values[0],
        formula: tags[0],
        cross_check_spread: spread_of(&values),
    })
}

fn pair_hat_product(
    s: &SpectralData,
    curve: &RationalR,
    z: Complex64,
    w: Complex64,
) -> Result<Complex64> {
    let scale = s.input.scale();
    let fan_w = curve.hat_fan(w)?;
    let rz = curve.eval(z)?;
    let den0 = guard(fan_w.value - curve.eval(-z)?, scale, "R(w) - R(-z)")?;
    let re = r_at_eps(curve)?;
    let mut num = Vec::with_capacity(fan_w.hats.len());
    let mut den = Vec::with_capacity(fan_w.hats.len());
    for (j, &h) in fan_w.hats.iter().enumerate() {
        num.push(rz - curve.eval(-h)?);
        den.push(guard(rz - re[j], scale, "R(z) - R at node")?);
    }
    Ok(balanced_product(&num) / (den0 * balanced_product(&den)))
}

fn pair_symmetric(
    s: &SpectralData,
    curve: &RationalR,
    z: Complex64,
    w: Complex64,
) -> Result<Complex64> {
    let scale = s.input.scale();
    let fan_z = curve.hat_fan(z)?;
    let fan_w = curve.hat_fan(w)?;
    let rz = curve.eval(z)?;
    let rw = curve.eval(w)?;
    let re = r_at_eps(curve)?;
    let d = curve.d();
    let mut double = Vec::with_capacity(d * d);
    for &hw in &fan_w.hats {
        for &hz in &fan_z.hats {
            double.push(-hw - hz);
        }
    }
    for &ek in curve.eps() {
        for &el in curve.eps() {
            double.push(1.0 / Complex64::new(ek + el, 0.0));
        }
    }
    let mut single = Vec::with_capacity(2 * d);
    for (k, &ek) in curve.eps().iter().enumerate() {
        single.push((ek - z) / guard(re[k] - rz, scale, "R at node - R(z)")?);
        single.push((ek - w) / guard(re[k] - rw, scale, "R at node - R(w)")?);
    }
    Ok(balanced_product(&double) * balanced_product(&single) / guard(z + w, scale, "z + w")?)
}

fn pair_node_sum(
    s: &SpectralData,
    curve: &RationalR,
    z: Complex64,
    w: Complex64,
) -> Result<Complex64> {
    let scale = s.input.scale();
    let c = s.input.coupling();
    let rz = curve.eval(z)?;
    let rw = curve.eval(w)?;
    let re = r_at_eps(curve)?;
    let fans = eps_fans(curve)?;
    let mut sum = Complex64::ZERO;
    for (k, fan) in fans.iter().enumerate() {
        let mut prod = Vec::with_capacity(fan.hats.len());
        for (j, &h) in fan.hats.iter().enumerate() {
            prod.push((rw - curve.eval(-h)?) / guard(rw - re[j], scale, "R(w) - R at node")?);
        }
        let den = guard(rz - re[k], scale, "R(z) - R at node")?
            * guard(re[k] - curve.eval(-w)?, scale, "R at node - R(-w)")?;
        sum += s.input.r[k] / den * balanced_product(&prod);
    }
    let den0 = guard(rw - curve.eval(-z)?, scale, "R(w) - R(-z)")?;
    Ok((Complex64::ONE - c * sum) / den0)
}

fn pair_matrix_form(
    s: &SpectralData,
    curve: &RationalR,
    z: Complex64,
    w: Complex64,
) -> Result<Complex64> {
    let scale = s.input.scale();
    let c = s.input.coupling();
    let d = curve.d();
    let g = g_matrix(s)?;
    let rz = curve.eval(z)?;
    let rw = curve.eval(w)?;
    let re = r_at_eps(curve)?;
    let mut acc = rz + rw;
    let mut dz = Vec::with_capacity(d);
    let mut dw = Vec::with_capacity(d);
    for k in 0..d {
        dz.push(guard(re[k] - rz, scale, "R at node - R(z)")?);
        dw.push(guard(re[k] - rw, scale, "R at node - R(w)")?);
        acc += c * s.input.r[k] * (1.0 / dz[k] + 1.0 / dw[k]);
    }
    for k in 0..d {
        for l in 0..d {
            acc += c * c * s.input.r[k] * s.input.r[l] * g[k][l] / (dz[k] * dw[l]);
        }
    }
    let den = guard(rw - curve.eval(-z)?, scale, "R(w) - R(-z)")?
        * guard(rz - curve.eval(-w)?, scale, "R(z) - R(-w)")?;
    Ok(acc / den)
}

/// Two-point function with the first argument at the node `eps_k`,
/// where the direct product forms are 0/0; the closed limit is
/// `-(N / (lambda r_k)) prod_j (R(eps_k) - R(-hat_w^j)) / prod_{j != k} (R(eps_k) - R(eps_j))`.
pub fn g0_pair_at_node(s: &SpectralData, k: usize, w: Complex64) -> Result<Complex64> {
    let curve = s.curve();
    let scale = s.input.scale();
    if s.input.coupling() == 0.0 {
        let z = Complex64::new(s.eps[k], 0.0);
        return Ok(1.0 / guard(z + w, scale, "z + w")?);
    }
    let fan_w = curve.hat_fan(w)?;
    let re = r_at_eps(&curve)?;
    let mut num = Vec::with_capacity(curve.d());
    for &h in &fan_w.hats {
        num.push(re[k] - curve.eval(-h)?);
    }
    let mut den = Vec::with_capacity(curve.d() - 1);
    for j in 0..curve.d() {
        if j != k {
            den.push(guard(re[k] - re[j], scale, "node value separation")?);
        }
    }
    let prefactor = -1.0 / (s.input.coupling() * s.input.r[k]);
    Ok(prefactor * balanced_product(&num) / balanced_product(&den))
}

/// The node matrix `G_kl` (values of the two-point function at node pairs).
/// Symmetric by construction; the upper triangle is computed and mirrored.
pub fn g_matrix(s: &SpectralData) -> Result<Vec<Vec<f64>>> {
    let d = s.input.d;
    if s.input.coupling() == 0.0 {
        return Ok((0..d)
            .map(|k| (0..d).map(|l| 1.0 / (s.input.e[k] + s.input.e[l])).collect())
            .collect());
    }
    let curve = s.curve();
    let scale = s.input.scale();
    let re = r_at_eps(&curve)?;
    let fans = eps_fans(&curve)?;
    let rprime: Vec<Complex64> = s
        .eps
        .iter()
        .map(|&e| curve.eval_prime(Complex64::new(e, 0.0)))
        .collect::<Result<_>>()?;
    let mut g = vec![vec![0.0_f64; d]; d];
    for k in 0..d {
        for l in k..d {
            let mut factors = Vec::with_capacity(d * d + 2 * d);
            for &hk in &fans[k].hats {
                for &hl in &fans[l].hats {
                    factors.push(-hk - hl);
                }
            }
            for &ej in s.eps.iter() {
                for &em in s.eps.iter() {
                    factors.push(1.0 / Complex64::new(ej + em, 0.0));
                }
            }
            for j in 0..d {
                if j != k {
                    factors
                        .push((s.eps[k] - s.eps[j]) / guard(re[k] - re[j], scale, "node values")?);
                }
                if j != l {
                    factors
                        .push((s.eps[l] - s.eps[j]) / guard(re[l] - re[j], scale, "node values")?);
                }
            }
            let val = balanced_product(&factors)
                / (rprime[k] * rprime[l] * (s.eps[k] + s.eps[l]));
            g[k][l] = val.re;
            g[l][k] = val.re;
        }
    }
    Ok(g)
}

/// Diagonal two-point function at `(z, z)`.
pub fn g0_diag(s: &SpectralData, z: Complex64) -> Result<CorrelatorValue> {
    let scale = s.input.scale();
    if s.input.coupling() == 0.0 {
        let den = guard(2.0 * z, scale, "2z")?;
        return Ok(CorrelatorValue { value: 1.0 / den, formula: "gaussian", cross_check_spread: 0.0 });
    }
    let curve = s.curve();
    let alpha = curve.alpha_roots()?;
    let rz = curve.eval(z)?;
    let r0 = curve.eval(Complex64::ZERO)?;
    let odd = guard(rz - curve.eval(-z)?, scale, "R(z) - R(-z)")?;
    let re = r_at_eps(&curve)?;
    let mut factors = Vec::with_capacity(2 * curve.d());
    for (k, &ak) in alpha.alpha.iter().enumerate() {
        let ra = curve.eval(Complex64::new(ak, 0.0))?;
        let q = (rz - ra) / guard(rz - re[k], scale, "R(z) - R at node")?;
        factors.push(q);
        factors.push(q);
    }
    let value = 2.0 * (rz - r0) / (odd * odd) * balanced_product(&factors);
    Ok(CorrelatorValue { value, formula: "diagonal", cross_check_spread: 0.0 })
}

/// Planar 1+1-point function at `(z | w)`. Near coincidence `z = w` the
/// value is the Richardson-extrapolated limit along `z = w(1 + delta)`.
pub fn g0_oneone(
    s: &SpectralData,
    z: Complex64,
    w: Complex64,
    formula: OneOneFormula,
) -> Result<CorrelatorValue> {
    let scale = s.input.scale();
    if s.input.lambda == 0.0 {
        return Ok(CorrelatorValue { value: Complex64::ZERO, formula: "gaussian", cross_check_spread: 0.0 });
    }
    let eval = |zz: Complex64| -> Result<Vec<Complex64>> {
        match formula {
            OneOneFormula::CauchySum => Ok(vec![oneone_cauchy_sum(s, zz, w)?]),
            OneOneFormula::Symmetric => Ok(vec![oneone_symmetric(s, zz, w)?]),
            OneOneFormula::All => {
                Ok(vec![oneone_cauchy_sum(s, zz, w)?, oneone_symmetric(s, zz, w)?])
            }
        }
    };
    let tag = match formula {
        OneOneFormula::CauchySum => "cauchy_sum",
        OneOneFormula::Symmetric => "symmetric",
        OneOneFormula::All => "cauchy_sum",
    };
    let values = if (z - w).norm() < COINCIDENCE_GUARD * scale {
        let shift = if w.norm() > 1e-3 * scale { w } else { Complex64::new(scale, 0.0) };
        let coarse = eval(w + shift * COINCIDENCE_DELTA)?;
        let fine = eval(w + shift * (0.5 * COINCIDENCE_DELTA))?;
        coarse.iter().zip(&fine).map(|(&c, &f)| 2.0 * f - c).collect()
    } else {
        eval(z)?
    };
    Ok(CorrelatorValue { value: values[0], formula: tag, cross_check_spread: spread_of(&values) })
}

/// Finite limit of the 1+1-point function as the first slot approaches the
/// k-th branch point. The symmetric closed form is 0/0 there: the factor
/// `1/(R(z) - R(node_k))` in the product blows up while `1/(R(z) - R(-z))`
/// vanishes, and their product tends to `-1/(c r_k)` because `R(-z)` has a
/// simple pole at `-node_k`.
pub fn g0_oneone_at_node(s: &SpectralData, k: usize, w: Complex64) -> Result<Complex64> {
    if s.input.lambda == 0.0 {
        return Ok(Complex64::ZERO);
    }
    let curve = s.curve();
    let scale = s.input.scale();
    let c = s.input.coupling();
    let alpha = curve.alpha_roots()?;
    let rw = curve.eval(w)?;
    let r0 = curve.eval(Complex64::ZERO)?;
    let odd_w = guard(rw - curve.eval(-w)?, scale, "R(w) - R(-w)")?;
    let re = r_at_eps(&curve)?;
    let ek = re[k];
    let ra: Vec<Complex64> = alpha
        .alpha
        .iter()
        .map(|&a| curve.eval(Complex64::new(a, 0.0)))
        .collect::<Result<_>>()?;
    // A_k = prod_j (E~_k - R(alpha_j)) / prod_{j != k} (E~_k - E~_j)
    let mut factors = Vec::with_capacity(2 * curve.d());
    for j in 0..curve.d() {
        factors.push(ek - ra[j]);
        if j != k {
            factors.push(1.0 / guard(ek - re[j], scale, "node value gap")?);
        }
    }
    let a_k = balanced_product(&factors);
    // P(w) = prod_j (R(w) - R(alpha_j)) / (R(w) - E~_j)
    let mut pw_factors = Vec::with_capacity(curve.d());
    for j in 0..curve.d() {
        pw_factors.push((rw - ra[j]) / guard(rw - re[j], scale, "R(w) - R at node")?);
    }
    let p_w = balanced_product(&pw_factors);
    let pair = g0_pair_at_node(s, k, w)?;
    let bracket = pair + (ek + rw - 2.0 * r0) * a_k * p_w / (c * s.input.r[k] * odd_w);
    let diff = guard(ek - rw, scale, "node value - R(w)")?;
    Ok(s.input.lambda * bracket / (diff * diff))
}

fn oneone_symmetric(s: &SpectralData, z: Complex64, w: Complex64) -> Result<Complex64> {
    let curve = s.curve();
    let scale = s.input.scale();
    let alpha = curve.alpha_roots()?;
    let rz = curve.eval(z)?;
    let rw = curve.eval(w)?;
    let r0 = curve.eval(Complex64::ZERO)?;
    let odd_z = guard(rz - curve.eval(-z)?, scale, "R(z) - R(-z)")?;
    let odd_w = guard(rw - curve.eval(-w)?, scale, "R(w) - R(-w)")?;
    let re = r_at_eps(&curve)?;
    let mut factors = Vec::with_capacity(2 * curve.d());
    for (k, &ak) in alpha.alpha.iter().enumerate() {
        let ra = curve.eval(Complex64::new(ak, 0.0))?;
        factors.push((rz - ra) / guard(rz - re[k], scale, "R(z) - R at node")?);
        factors.push((rw - ra) / guard(rw - re[k], scale, "R(w) - R at node")?);
    }
    let pair = pair_hat_product(s, &curve, z, w)?;
    let bracket =
        pair - (rz + rw - 2.0 * r0) / (odd_z * odd_w) * balanced_product(&factors);
    let diff = guard(rz - rw, scale, "R(z) - R(w)")?;
    Ok(s.input.lambda * bracket / (diff * diff))
}

fn oneone_cauchy_sum(s: &SpectralData, z: Complex64, w: Complex64) -> Result<Complex64> {
    let curve = s.curve();
    let scale = s.input.scale();
    let d = curve.d();
    let alpha = curve.alpha_roots()?;
    let rz = curve.eval(z)?;
    let rw = curve.eval(w)?;
    let re = r_at_eps(&curve)?;
    let ra: Vec<Complex64> = alpha
        .alpha
        .iter()
        .map(|&a| curve.eval(Complex64::new(a, 0.0)))
        .collect::<Result<_>>()?;
    let inv = cauchy_inverse(&CauchyNodes::new(ra.clone(), re.clone())?);
    let g_ww = pair_hat_product(s, &curve, w, w)?;
    let g_zw = pair_hat_product(s, &curve, z, w)?;
    let diff_zw = guard(rz - rw, scale, "R(z) - R(w)")?;
    let mut quotients = Vec::with_capacity(d);
    for l in 0..d {
        let g_al_w = pair_hat_product(s, &curve, Complex64::new(alpha.alpha[l], 0.0), w)?;
        quotients.push((g_al_w - g_ww) / guard(ra[l] - rw, scale, "R at odd root - R(w)")?);
    }
    let mut sum = Complex64::ZERO;
    for k in 0..d {
        let dk = guard(rz - re[k], scale, "R(z) - R at node")?;
        for l in 0..d {
            sum += inv.entries[k][l] / dk * quotients[l];
        }
    }
    let odd_z = guard(rz - curve.eval(-z)?, scale, "R(z) - R(-z)")?;
    Ok(s.input.lambda / odd_z * ((g_zw - g_ww) / diff_zw - sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{solve_spectral, ModelInput, SolveOptions};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn solved(e: Vec<f64>, r: Vec<f64>, lambda: f64) -> SpectralData {
        let input = ModelInput::new(e, r, None, lambda).unwrap();
        solve_spectral(&input, &SolveOptions::default()).unwrap()
    }

    fn sample_points() -> Vec<(Complex64, Complex64)> {
        vec![
            (c(0.7, 0.0), c(1.3, 0.0)),
            (c(0.4, 0.5), c(1.1, -0.3)),
            (c(2.2, 0.1), c(0.6, 0.9)),
            (c(0.9, -0.6), c(1.8, 0.4)),
        ]
    }

    #[test]
    fn pair_lambda_zero_exact() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.0);
        let v = g0_pair(&s, c(0.7, 0.2), c(1.1, 0.0), PairFormula::All).unwrap();
        assert_eq!(v.value, 1.0 / c(1.8, 0.2));
        assert_eq!(v.cross_check_spread, 0.0);
    }

    #[test]
    fn pair_four_formulas_agree() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        for &(z, w) in &sample_points() {
            let v = g0_pair(&s, z, w, PairFormula::All).unwrap();
            assert!(v.cross_check_spread < 1e-8, "spread {} at ({z}, {w})", v.cross_check_spread);
        }
    }

    #[test]
    fn pair_symmetry() {
        let s = solved(vec![0.8, 1.9, 3.1], vec![1.0, 2.0, 1.2], 0.15);
        for &(z, w) in &sample_points() {
            let a = g0_pair(&s, z, w, PairFormula::HatProduct).unwrap().value;
            let b = g0_pair(&s, w, z, PairFormula::HatProduct).unwrap().value;
            assert!((a - b).norm() / a.norm() < 1e-10);
        }
    }

    #[test]
    fn matrix_gaussian_limit() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.0);
        let g = g_matrix(&s).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                assert_eq!(g[k][l], 1.0 / (s.input.e[k] + s.input.e[l]));
            }
        }
        // Small coupling stays near the Gaussian value.
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 1e-5);
        let g = g_matrix(&s).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                assert!((g[k][l] - 1.0 / (s.input.e[k] + s.input.e[l])).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn matrix_is_symmetric_and_matches_near_node_limit() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        let g = g_matrix(&s).unwrap();
        assert_eq!(g[0][1], g[1][0]);
        // g0_pair at z near eps_k, w near eps_l approaches G_kl.
        let z = c(s.eps[0] + 1e-6, 0.0);
        let w = c(s.eps[1] + 1e-6, 0.0);
        let v = g0_pair(&s, z, w, PairFormula::HatProduct).unwrap().value;
        assert!((v.re - g[0][1]).abs() < 1e-4, "{} vs {}", v.re, g[0][1]);
    }

    #[test]
    fn at_node_limit_matches_approach() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        let w = c(0.9, 0.3);
        for k in 0..2 {
            let lim = g0_pair_at_node(&s, k, w).unwrap();
            let near = g0_pair(&s, c(s.eps[k] + 1e-6, 0.0), w, PairFormula::HatProduct)
                .unwrap()
                .value;
            assert!((lim - near).norm() / lim.norm() < 1e-4, "node {k}");
        }
    }

    #[test]
    fn partial_fraction_sum_is_one() {
        // prod_j (R(z)-R(-hat_w^j))/(R(z)-R(eps_j))
        //   + sum_k prod_j (R(eps_k)-R(-hat_w^j)) / ((R(eps_k)-R(z)) prod_{j!=k}(..)) = 1
        let s = solved(vec![0.8, 1.9, 3.1], vec![1.0, 2.0, 1.2], 0.12);
        let curve = s.curve();
        for &(z, w) in &sample_points() {
            let fan_w = curve.hat_fan(w).unwrap();
            let re = r_at_eps(&curve).unwrap();
            let rz = curve.eval(z).unwrap();
            let hat_vals: Vec<Complex64> =
                fan_w.hats.iter().map(|&h| curve.eval(-h).unwrap()).collect();
            let mut total = {
                let num: Vec<Complex64> = hat_vals.iter().map(|&hv| rz - hv).collect();
                let den: Vec<Complex64> = re.iter().map(|&x| rz - x).collect();
                balanced_product(&num) / balanced_product(&den)
            };
            for k in 0..3 {
                let num: Vec<Complex64> = hat_vals.iter().map(|&hv| re[k] - hv).collect();
                let mut den = vec![re[k] - rz];
                for j in 0..3 {
                    if j != k {
                        den.push(re[k] - re[j]);
                    }
                }
                total += balanced_product(&num) / balanced_product(&den);
            }
            assert!((total - Complex64::ONE).norm() < 1e-9, "sum {total} at ({z}, {w})");
        }
    }

    #[test]
    fn node_value_row_identity() {
        // -(lambda/N) r_k G(eps_k, w) = prod_j (R(eps_k)-R(-hat_w^j)) / prod_{j!=k} (R(eps_k)-R(eps_j))
        let s = solved(vec![0.8, 1.9, 3.1], vec![1.0, 2.0, 1.2], 0.12);
        let curve = s.curve();
        let w = c(1.1, 0.4);
        let fan_w = curve.hat_fan(w).unwrap();
        let re = r_at_eps(&curve).unwrap();
        for k in 0..3 {
            let lhs =
                -s.input.coupling() * s.input.r[k] * g0_pair_at_node(&s, k, w).unwrap();
            let num: Vec<Complex64> =
                fan_w.hats.iter().map(|&h| re[k] - curve.eval(-h).unwrap()).collect();
            let den: Vec<Complex64> = (0..3)
                .filter(|&j| j != k)
                .map(|j| re[k] - re[j])
                .collect();
            let rhs = balanced_product(&num) / balanced_product(&den);
            assert!((lhs - rhs).norm() / rhs.norm() < 1e-9);
        }
    }

    #[test]
    fn pair_large_z_asymptote() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        let curve = s.curve();
        let z = c(1e6, 0.0);
        let w = c(1.3, 0.0);
        let v = g0_pair(&s, z, w, PairFormula::HatProduct).unwrap().value;
        let norm = v * (curve.eval(w).unwrap() - curve.eval(-z).unwrap());
        assert!((norm - Complex64::ONE).norm() < 1e-5);
    }

    #[test]
    fn diag_lambda_zero_exact() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.0);
        let v = g0_diag(&s, c(0.7, 0.2)).unwrap();
        assert_eq!(v.value, 1.0 / c(1.4, 0.4));
    }

    #[test]
    fn diag_matches_pair_on_diagonal() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        for &(z, _) in &sample_points() {
            let a = g0_diag(&s, z).unwrap().value;
            let b = g0_pair(&s, z, z, PairFormula::HatProduct).unwrap().value;
            assert!((a - b).norm() / a.norm() < 1e-9, "at {z}");
        }
    }

    #[test]
    fn diag_large_z_asymptote() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        let z = c(1e6, 0.0);
        let v = g0_diag(&s, z).unwrap().value;
        assert!((v * 2.0 * z - Complex64::ONE).norm() < 1e-4);
    }

    #[test]
    fn oneone_lambda_zero_is_zero() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.0);
        let v = g0_oneone(&s, c(0.7, 0.0), c(1.3, 0.0), OneOneFormula::All).unwrap();
        assert_eq!(v.value, Complex64::ZERO);
    }

    #[test]
    fn oneone_two_formulas_agree() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        for &(z, w) in &sample_points() {
            let v = g0_oneone(&s, z, w, OneOneFormula::All).unwrap();
            assert!(v.cross_check_spread < 1e-8, "spread {} at ({z}, {w})", v.cross_check_spread);
        }
    }

    #[test]
    fn oneone_symmetry() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        for &(z, w) in &sample_points() {
            let a = g0_oneone(&s, z, w, OneOneFormula::Symmetric).unwrap().value;
            let b = g0_oneone(&s, w, z, OneOneFormula::Symmetric).unwrap().value;
            assert!((a - b).norm() / a.norm().max(1.0) < 1e-9);
        }
    }

    #[test]
    fn oneone_coincidence_limit_stable() {
        let s = solved(vec![1.0, 2.0], vec![1.0, 1.5], 0.1);
        let w = c(1.3, 0.0);
        let at_w = g0_oneone(&s, w, w, OneOneFormula::Symmetric).unwrap().value;
        // Nearby direct evaluations approach the extrapolated limit.
        let near3 = g0_oneone(&s, w * (1.0 + 1e-3), w, OneOneFormula::Symmetric).unwrap().value;
        let near4 = g0_oneone(&s, w * (1.0 + 1e-4), w, OneOneFormula::Symmetric).unwrap().value;
        // First-order convergence toward the extrapolated limit.
        assert!((near4 - at_w).norm() < 0.3 * (near3 - at_w).norm());
        assert!((near4 - at_w).norm() / at_w.norm() < 1e-2);
    }
}
