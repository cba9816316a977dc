//! Dense linear algebra over ℚ. Matrices are row-major `Vec<Vec<Rational>>`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;
pub type RMatrix = Vec<Vec<Rational>>;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rint(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

pub fn to_f64(r: &Rational) -> f64 {
    // Direct conversion loses range for huge numerators; split when needed.
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            let shift = r.numer().bits().max(r.denom().bits()) as i64 - 900;
            let num = r.numer() >> shift.max(0) as usize;
            let den = r.denom() >> shift.max(0) as usize;
            num.to_f64().unwrap_or(f64::NAN) / den.to_f64().unwrap_or(f64::NAN)
        }
    }
}

/// Best rational approximation of `x` with denominator at most 10¹², accurate to
/// 1e−14 relative; falls back to the exact binary value. Short continued-fraction
/// approximants recover entries like 2/3 that were written as decimals.
pub fn rationalize(x: f64) -> Rational {
    if x == 0.0 {
        return Rational::zero();
    }
    let tol = 1e-14 * x.abs().max(1.0);
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > 1_000_000_000_000 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Rational::new(BigInt::from(h1), BigInt::from(k1));
        }
        let frac = v - a;
        if frac == 0.0 {
            break;
        }
        v = 1.0 / frac;
    }
    Rational::from_float(x).expect("finite float")
}

pub fn zeros(r: usize, c: usize) -> RMatrix {
    vec![vec![Rational::zero(); c]; r]
}

pub fn identity(n: usize) -> RMatrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rational::one();
    }
    m
}

pub fn matmul(a: &RMatrix, b: &RMatrix) -> RMatrix {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    let mut out = zeros(a.len(), cols);
    for (i, row) in a.iter().enumerate() {
        for (l, alv) in row.iter().enumerate().take(inner) {
            if alv.is_zero() {
                continue;
            }
            for j in 0..cols {
                if !b[l][j].is_zero() {
                    out[i][j] += alv * &b[l][j];
                }
            }
        }
    }
    out
}

pub fn transpose(a: &RMatrix) -> RMatrix {
    if a.is_empty() {
        return Vec::new();
    }
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = v.clone();
        }
    }
    out
}

pub fn matvec(a: &RMatrix, x: &[Rational]) -> Vec<Rational> {
    a.iter()
        .map(|row| {
            row.iter()
                .zip(x)
                .filter(|(r, v)| !r.is_zero() && !v.is_zero())
                .fold(Rational::zero(), |acc, (r, v)| acc + r * v)
        })
        .collect()
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(m: &mut RMatrix) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = m[r].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &RMatrix) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of the right nullspace {x : m x = 0}, one vector per free column.
pub fn nullspace(m: &RMatrix, cols: usize) -> Vec<Vec<Rational>> {
    let mut a = m.clone();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Rational::zero(); cols];
            x[f] = Rational::one();
            for (r, &pc) in pivots.iter().enumerate() {
                if !a[r][f].is_zero() {
                    x[pc] = -a[r][f].clone();
                }
            }
            x
        })
        .collect()
}

/// Inverse of a square matrix, `None` if singular.
pub fn inverse(m: &RMatrix) -> Option<RMatrix> {
    let n = m.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut aug: RMatrix = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn is_identity(m: &RMatrix) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter()
            .enumerate()
            .all(|(j, v)| if i == j { v.is_one() } else { v.is_zero() })
    })
}

pub fn to_f64_matrix(m: &RMatrix) -> Vec<Vec<f64>> {
    m.iter().map(|r| r.iter().map(to_f64).collect()).collect()
}

pub fn max_abs(v: &[Rational]) -> Rational {
    v.iter().map(|x| x.abs()).max().unwrap_or_else(Rational::zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(2.0 / 3.0), rat(2, 3));
        assert_eq!(rationalize(-0.5), rat(-1, 2));
        assert_eq!(rationalize(1.0 / 3.0), rat(1, 3));
        let s = rationalize(std::f64::consts::FRAC_1_SQRT_2);
        assert!((to_f64(&s) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
    }

    #[test]
    fn nullspace_of_rank_one() {
        let m = vec![vec![rint(1), rint(2), rint(3)]];
        let ns = nullspace(&m, 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(matvec(&m, v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let m = vec![vec![rint(2), rint(1)], vec![rint(1), rint(1)]];
        let inv = inverse(&m).unwrap();
        assert!(is_identity(&matmul(&m, &inv)));
        assert!(inverse(&vec![vec![rint(1), rint(2)], vec![rint(2), rint(4)]]).is_none());
    }
}
