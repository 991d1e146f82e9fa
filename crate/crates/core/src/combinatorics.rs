//! Exact combinatorial machinery: set partitions with even blocks,
//! permutation cycle-type counting, and a Gaussian Wick-pairing oracle for
//! matrix-entry moments, all in arbitrary-precision rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// A partition of `{0, .., n-1}` into disjoint nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetPartition {
    pub n: usize,
    pub blocks: Vec<Vec<usize>>,
}

/// Cycle type of a permutation: `counts[i]` cycles of length `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleType {
    pub counts: Vec<usize>,
}

impl CycleType {
    pub fn n(&self) -> usize {
        self.counts.iter().enumerate().map(|(i, &l)| (i + 1) * l).sum()
    }

    /// All cycle types of permutations of `S_n` (the integer partitions
    /// of `n`, encoded as multiplicity vectors).
    pub fn all(n: usize) -> Vec<CycleType> {
        fn build(remaining: usize, max_len: usize, counts: &mut Vec<usize>, out: &mut Vec<CycleType>) {
            if remaining == 0 {
                out.push(CycleType { counts: counts.clone() });
                return;
            }
            for len in (1..=max_len.min(remaining)).rev() {
                counts[len - 1] += 1;
                build(remaining - len, len, counts, out);
                counts[len - 1] -= 1;
            }
        }
        let mut out = Vec::new();
        if n > 0 {
            build(n, n, &mut vec![0; n], &mut out);
        }
        out
    }
}

/// All partitions of `{0, .., n-1}` in which every block has even size.
pub fn even_partitions(n: usize) -> Result<Vec<SetPartition>> {
    if n % 2 != 0 {
        return Err(Error::OddN(n));
    }
    if n > 12 {
        return Err(Error::InvalidInput(format!("n = {n} exceeds the enumeration cap 12")));
    }
    let elements: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    let mut current: Vec<Vec<usize>> = Vec::new();
    build_even(&elements, &mut current, &mut out);
    Ok(out.into_iter().map(|blocks| SetPartition { n, blocks }).collect())
}

/// Recursively place the smallest remaining element into a block with an
/// odd number of the other remaining elements (so the block size is even).
fn build_even(remaining: &[usize], current: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
    if remaining.is_empty() {
        out.push(current.clone());
        return;
    }
    let first = remaining[0];
    let rest = &remaining[1..];
    let mut take = 1;
    while take <= rest.len() {
        let mut chosen = vec![0usize; take];
        choose_rec(rest, take, 0, &mut chosen, &mut |subset| {
            let mut block = vec![first];
            block.extend_from_slice(subset);
            let left: Vec<usize> =
                rest.iter().copied().filter(|x| !subset.contains(x)).collect();
            current.push(block);
            build_even(&left, current, out);
            current.pop();
        });
        take += 2;
    }
}

fn choose_rec(
    pool: &[usize],
    take: usize,
    start: usize,
    chosen: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    let filled = chosen.len() - take;
    if take == 0 {
        visit(&chosen[..filled]);
        return;
    }
    for i in start..=(pool.len() - take) {
        chosen[filled] = pool[i];
        choose_rec(pool, take - 1, i + 1, chosen, visit);
    }
}

fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

/// Number of permutations of `S_n` with the given cycle type:
/// `n! / prod_i i^{l_i} l_i!`.
pub fn cycle_type_count(t: &CycleType) -> Result<BigInt> {
    let n = t.n();
    if n == 0 {
        return Err(Error::InvalidType("empty cycle type".into()));
    }
    let mut den = BigInt::one();
    for (i, &l) in t.counts.iter().enumerate() {
        den *= BigInt::from(i + 1).pow(l as u32) * factorial(l);
    }
    Ok(factorial(n) / den)
}

/// A matrix-entry factor `e_{kl}` given by its row and column indices
/// (indices into the eigenvalue list `E`).
pub type EntryFactor = (usize, usize);

fn covariance(e: &[BigRational], n: &BigRational, a: EntryFactor, b: EntryFactor) -> BigRational {
    // <e_{kl} e_{mp}> = delta_{lm} delta_{kp} / (N (E_k + E_l))
    if a.1 == b.0 && a.0 == b.1 {
        let den = n * (&e[a.0] + &e[a.1]);
        BigRational::one() / den
    } else {
        BigRational::zero()
    }
}

/// Gaussian moment of a product of matrix-entry factors: the sum over all
/// perfect Wick pairings of products of covariances. Odd-length products
/// vanish identically.
pub fn gaussian_moment(e: &[BigRational], n: &BigRational, factors: &[EntryFactor]) -> BigRational {
    if factors.len() % 2 != 0 {
        return BigRational::zero();
    }
    let mut used = vec![false; factors.len()];
    wick(e, n, factors, &mut used)
}

fn wick(
    e: &[BigRational],
    n: &BigRational,
    factors: &[EntryFactor],
    used: &mut [bool],
) -> BigRational {
    let first = match used.iter().position(|&u| !u) {
        None => return BigRational::one(),
        Some(i) => i,
    };
    used[first] = true;
    let mut acc = BigRational::zero();
    for j in (first + 1)..factors.len() {
        if used[j] {
            continue;
        }
        let cov = covariance(e, n, factors[first], factors[j]);
        if !cov.is_zero() {
            used[j] = true;
            acc += cov * wick(e, n, factors, used);
            used[j] = false;
        }
    }
    used[first] = false;
    acc
}

/// Exact check of the moment-cumulant decomposition at vanishing coupling:
/// the Wick moment of `n` alternating factors `e_{01}, e_{10}, ...` must
/// equal the partition assembly in which only pair blocks carry a nonzero
/// (covariance) cumulant. Returns the absolute difference, which must be
/// exactly zero.
pub fn check_moment_cumulant(e: &[BigRational], n_val: &BigRational, n: usize) -> Result<BigRational> {
    if !matches!(n, 2 | 4 | 6) {
        return Err(Error::InvalidInput(format!("n = {n} not in {{2, 4, 6}}")));
    }
    if e.len() < 2 {
        return Err(Error::InvalidInput("need at least two eigenvalues".into()));
    }
    let factors: Vec<EntryFactor> =
        (0..n).map(|i| if i % 2 == 0 { (0, 1) } else { (1, 0) }).collect();
    let lhs = gaussian_moment(e, n_val, &factors);
    let mut rhs = BigRational::zero();
    for part in even_partitions(n)? {
        let mut prod = BigRational::one();
        for block in &part.blocks {
            if block.len() == 2 {
                prod *= covariance(e, n_val, factors[block[0]], factors[block[1]]);
            } else {
                // Connected cumulants of length > 2 vanish in the Gaussian
                // (zero-coupling) measure.
                prod = BigRational::zero();
            }
            if prod.is_zero() {
                break;
            }
        }
        rhs += prod;
    }
    let diff = lhs - rhs;
    if diff >= BigRational::zero() {
        Ok(diff)
    } else {
        Ok(-diff)
    }
}
