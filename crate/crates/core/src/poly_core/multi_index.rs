use std::fmt;

use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};

/// Multi-index α ∈ ℕ₀ⁿ. The order |α| is always recomputed from the entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit index e_j.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, j: usize) -> u32 {
        self.0[j]
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// α − β when β ≤ α componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            out.push(a.checked_sub(*b)?);
        }
        Some(MultiIndex(out))
    }

    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// α! = Π α_i!.
    pub fn factorial(&self) -> BigInt {
        self.0.iter().map(|&a| factorial(a)).product()
    }

    /// Multinomial |α|!/α!.
    pub fn multinomial(&self) -> BigInt {
        factorial(self.order()) / self.factorial()
    }

    /// Falling factorial α!/(α−β)!, the coefficient of ∂^β x^α.
    pub fn falling(&self, beta: &MultiIndex) -> BigInt {
        let mut out = BigInt::one();
        for (&a, &b) in self.0.iter().zip(&beta.0) {
            for t in 0..b {
                out *= BigInt::from(a - t);
            }
        }
        out
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&a, &xi)| xi.powi(a as i32)).product()
    }

    pub fn has_odd_entry(&self) -> bool {
        self.0.iter().any(|a| a % 2 == 1)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

pub fn factorial(a: u32) -> BigInt {
    (1..=a).map(BigInt::from).product()
}

pub fn binomial(a: u32, b: u32) -> BigInt {
    if b > a {
        return BigInt::from(0);
    }
    factorial(a) / (factorial(b) * factorial(a - b))
}

/// All α with |α| = degree, in descending lexicographic order (x₁^d first).
pub fn homogeneous_indices(n: usize, degree: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fill(n, 0, degree, &mut cur, &mut out);
    out
}

fn fill(n: usize, pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if n == 0 {
        if left == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return;
    }
    if pos == n - 1 {
        cur[pos] = left;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for a in (0..=left).rev() {
        cur[pos] = a;
        fill(n, pos + 1, left - a, cur, out);
    }
    cur[pos] = 0;
}

/// All α with |α| ≤ degree, grouped by increasing order.
pub fn indices_up_to(n: usize, degree: u32) -> Vec<MultiIndex> {
    (0..=degree).flat_map(|d| homogeneous_indices(n, d)).collect()
}

/// dim 𝒫_ℓ^h(ℝⁿ) = C(n+ℓ−1, ℓ).
pub fn homogeneous_dim(n: usize, degree: u32) -> usize {
    homogeneous_indices(n, degree).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomials() {
        for n in 1..4 {
            for d in 0..6 {
                let expect = binomial(n as u32 + d - 1, d);
                assert_eq!(BigInt::from(homogeneous_dim(n, d)), expect);
            }
        }
    }

    #[test]
    fn ordering_starts_with_pure_power() {
        let idx = homogeneous_indices(3, 2);
        assert_eq!(idx[0], MultiIndex::new(vec![2, 0, 0]));
        assert_eq!(idx.last().unwrap(), &MultiIndex::new(vec![0, 0, 2]));
    }

    #[test]
    fn falling_factorial() {
        let a = MultiIndex::new(vec![3, 2]);
        let b = MultiIndex::new(vec![2, 1]);
        assert_eq!(a.falling(&b), BigInt::from(6 * 2));
        assert_eq!(a.multinomial(), BigInt::from(10));
    }
}
