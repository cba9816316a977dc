use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Pow, Zero};
use serde::{Deserialize, Serialize};

use super::exact::{to_f64, Rational};
use super::multi_index::{binomial, MultiIndex};

/// Polynomial degree; the zero polynomial has degree −∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Degree {
    NegInfinity,
    Finite(u32),
}

impl Degree {
    pub fn at_most(self, d: u32) -> bool {
        match self {
            Degree::NegInfinity => true,
            Degree::Finite(x) => x <= d,
        }
    }
}

/// Scalar polynomial in n variables with exact rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub n: usize,
    pub coeffs: BTreeMap<MultiIndex, Rational>,
}

impl Poly {
    pub fn zero(n: usize) -> Self {
        Poly { n, coeffs: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: Rational) -> Self {
        let mut p = Poly::zero(n);
        p.add_term(MultiIndex::zero(n), c);
        p
    }

    pub fn monomial(alpha: MultiIndex, c: Rational) -> Self {
        let mut p = Poly::zero(alpha.n());
        p.add_term(alpha, c);
        p
    }

    /// The coordinate function x_j.
    pub fn var(n: usize, j: usize) -> Self {
        Poly::monomial(MultiIndex::unit(n, j), Rational::one())
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(alpha.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&alpha);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Degree {
        self.coeffs
            .keys()
            .map(|a| a.order())
            .max()
            .map_or(Degree::NegInfinity, Degree::Finite)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (a, c) in &other.coeffs {
            out.add_term(a.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, s: &Rational) -> Poly {
        if s.is_zero() {
            return Poly::zero(self.n);
        }
        Poly {
            n: self.n,
            coeffs: self.coeffs.iter().map(|(a, c)| (a.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.n);
        for (a, c) in &self.coeffs {
            for (b, d) in &other.coeffs {
                out.add_term(a.add(b), c * d);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut out = Poly::constant(self.n, Rational::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    pub fn derivative(&self, j: usize) -> Poly {
        let mut out = Poly::zero(self.n);
        for (a, c) in &self.coeffs {
            if a.get(j) == 0 {
                continue;
            }
            let mut e = a.entries().to_vec();
            let f = e[j];
            e[j] -= 1;
            out.add_term(MultiIndex::new(e), c * Rational::from_integer(BigInt::from(f)));
        }
        out
    }

    pub fn derivative_multi(&self, beta: &MultiIndex) -> Poly {
        let mut out = Poly::zero(self.n);
        for (a, c) in &self.coeffs {
            if let Some(rest) = a.checked_sub(beta) {
                out.add_term(rest, c * Rational::from_integer(a.falling(beta)));
            }
        }
        out
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Rational {
        self.coeffs.iter().fold(Rational::zero(), |acc, (a, c)| {
            let mut m = c.clone();
            for (xi, &e) in x.iter().zip(a.entries()) {
                if e > 0 {
                    m *= Pow::pow(xi, e);
                }
            }
            acc + m
        })
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(a, c)| to_f64(c) * a.eval_f64(x)).sum()
    }

    /// q(z) = p(c + r z), exact.
    pub fn affine_pullback(&self, center: &[Rational], radius: &Rational) -> Poly {
        let n = self.n;
        let mut out = Poly::zero(n);
        for (a, c) in &self.coeffs {
            // Expand Π_i (c_i + r z_i)^{a_i}.
            let mut acc = Poly::constant(n, c.clone());
            for i in 0..n {
                let ai = a.get(i);
                if ai == 0 {
                    continue;
                }
                let mut factor = Poly::zero(n);
                for j in 0..=ai {
                    let coef = Rational::from_integer(binomial(ai, j))
                        * Pow::pow(&center[i], ai - j)
                        * Pow::pow(radius, j);
                    let mut e = vec![0; n];
                    e[i] = j;
                    factor.add_term(MultiIndex::new(e), coef);
                }
                acc = acc.mul(&factor);
            }
            out = out.add(&acc);
        }
        out
    }
}

/// V-valued polynomial Σ_α c_α x^α with c_α ∈ ℚ^dim. Zero vectors are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VPolynomial {
    pub n: usize,
    pub dim: usize,
    pub coeffs: BTreeMap<MultiIndex, Vec<Rational>>,
}

impl VPolynomial {
    pub fn zero(n: usize, dim: usize) -> Self {
        VPolynomial { n, dim, coeffs: BTreeMap::new() }
    }

    /// c · x^α e_comp.
    pub fn monomial(dim: usize, alpha: MultiIndex, comp: usize, c: Rational) -> Self {
        let mut p = VPolynomial::zero(alpha.n(), dim);
        p.add_term(alpha, comp, c);
        p
    }

    pub fn from_components(comps: &[Poly]) -> Self {
        let n = comps.first().map_or(0, |p| p.n);
        let mut out = VPolynomial::zero(n, comps.len());
        for (i, p) in comps.iter().enumerate() {
            for (a, c) in &p.coeffs {
                out.add_term(a.clone(), i, c.clone());
            }
        }
        out
    }

    pub fn component(&self, i: usize) -> Poly {
        let mut p = Poly::zero(self.n);
        for (a, v) in &self.coeffs {
            p.add_term(a.clone(), v[i].clone());
        }
        p
    }

    pub fn components(&self) -> Vec<Poly> {
        (0..self.dim).map(|i| self.component(i)).collect()
    }

    pub fn add_term(&mut self, alpha: MultiIndex, comp: usize, c: Rational) {
        if c.is_zero() {
            return;
        }
        let dim = self.dim;
        let entry = self
            .coeffs
            .entry(alpha.clone())
            .or_insert_with(|| vec![Rational::zero(); dim]);
        entry[comp] += c;
        if entry.iter().all(|x| x.is_zero()) {
            self.coeffs.remove(&alpha);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Degree {
        self.coeffs
            .keys()
            .map(|a| a.order())
            .max()
            .map_or(Degree::NegInfinity, Degree::Finite)
    }

    pub fn is_homogeneous(&self, d: u32) -> bool {
        self.coeffs.keys().all(|a| a.order() == d)
    }

    pub fn add(&self, other: &VPolynomial) -> VPolynomial {
        let mut out = self.clone();
        for (a, v) in &other.coeffs {
            for (i, c) in v.iter().enumerate() {
                out.add_term(a.clone(), i, c.clone());
            }
        }
        out
    }

    pub fn sub(&self, other: &VPolynomial) -> VPolynomial {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, s: &Rational) -> VPolynomial {
        if s.is_zero() {
            return VPolynomial::zero(self.n, self.dim);
        }
        VPolynomial {
            n: self.n,
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .map(|(a, v)| (a.clone(), v.iter().map(|c| c * s).collect()))
                .collect(),
        }
    }

    pub fn derivative(&self, j: usize) -> VPolynomial {
        VPolynomial::from_components_sized(
            self.n,
            &self.components().iter().map(|p| p.derivative(j)).collect::<Vec<_>>(),
        )
    }

    pub fn derivative_multi(&self, beta: &MultiIndex) -> VPolynomial {
        let mut out = VPolynomial::zero(self.n, self.dim);
        for (a, v) in &self.coeffs {
            if let Some(rest) = a.checked_sub(beta) {
                let f = Rational::from_integer(a.falling(beta));
                for (i, c) in v.iter().enumerate() {
                    out.add_term(rest.clone(), i, c * &f);
                }
            }
        }
        out
    }

    /// Homogeneous part of degree d.
    pub fn homogeneous_part(&self, d: u32) -> VPolynomial {
        VPolynomial {
            n: self.n,
            dim: self.dim,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(a, _)| a.order() == d)
                .map(|(a, v)| (a.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn eval_exact(&self, x: &[Rational]) -> Vec<Rational> {
        self.components().iter().map(|p| p.eval_exact(x)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (a, v) in &self.coeffs {
            let m = a.eval_f64(x);
            for (o, c) in out.iter_mut().zip(v) {
                *o += to_f64(c) * m;
            }
        }
        out
    }

    pub fn affine_pullback(&self, center: &[Rational], radius: &Rational) -> VPolynomial {
        let comps: Vec<Poly> = self
            .components()
            .iter()
            .map(|p| p.affine_pullback(center, radius))
            .collect();
        VPolynomial::from_components_sized(self.n, &comps)
    }

    fn from_components_sized(n: usize, comps: &[Poly]) -> VPolynomial {
        let mut out = VPolynomial::zero(n, comps.len());
        for (i, p) in comps.iter().enumerate() {
            for (a, c) in &p.coeffs {
                out.add_term(a.clone(), i, c.clone());
            }
        }
        out
    }

    /// Coordinates in the basis (x^α e_i), α from `indices`, component-minor ordering.
    pub fn coordinates(&self, indices: &[MultiIndex]) -> Vec<Rational> {
        let mut out = Vec::with_capacity(indices.len() * self.dim);
        for a in indices {
            match self.coeffs.get(a) {
                Some(v) => out.extend(v.iter().cloned()),
                None => out.extend((0..self.dim).map(|_| Rational::zero())),
            }
        }
        out
    }

    pub fn from_coordinates(n: usize, dim: usize, indices: &[MultiIndex], x: &[Rational]) -> Self {
        let mut out = VPolynomial::zero(n, dim);
        for (ai, a) in indices.iter().enumerate() {
            for i in 0..dim {
                out.add_term(a.clone(), i, x[ai * dim + i].clone());
            }
        }
        out
    }

    pub fn to_f64(&self) -> VPolyF64 {
        VPolyF64 {
            n: self.n,
            dim: self.dim,
            terms: self
                .coeffs
                .iter()
                .map(|(a, v)| (a.clone(), v.iter().map(to_f64).collect()))
                .collect(),
        }
    }
}

/// Floating-point polynomial used on grid paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VPolyF64 {
    pub n: usize,
    pub dim: usize,
    pub terms: Vec<(MultiIndex, Vec<f64>)>,
}

impl VPolyF64 {
    pub fn zero(n: usize, dim: usize) -> Self {
        VPolyF64 { n, dim, terms: Vec::new() }
    }

    pub fn from_coordinates(n: usize, dim: usize, indices: &[MultiIndex], x: &[f64]) -> Self {
        let terms = indices
            .iter()
            .enumerate()
            .map(|(ai, a)| (a.clone(), x[ai * dim..(ai + 1) * dim].to_vec()))
            .collect();
        VPolyF64 { n, dim, terms }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (a, v) in &self.terms {
            let m = a.eval_f64(x);
            for (o, c) in out.iter_mut().zip(v) {
                *o += c * m;
            }
        }
        out
    }

    pub fn derivative_multi(&self, beta: &MultiIndex) -> VPolyF64 {
        let mut terms = Vec::new();
        for (a, v) in &self.terms {
            if let Some(rest) = a.checked_sub(beta) {
                let f = to_f64(&Rational::from_integer(a.falling(beta)));
                terms.push((rest, v.iter().map(|c| c * f).collect()));
            }
        }
        VPolyF64 { n: self.n, dim: self.dim, terms }
    }

    pub fn scale(&self, s: f64) -> VPolyF64 {
        VPolyF64 {
            n: self.n,
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(a, v)| (a.clone(), v.iter().map(|c| c * s).collect()))
                .collect(),
        }
    }

    pub fn add(&self, other: &VPolyF64) -> VPolyF64 {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        VPolyF64 { n: self.n, dim: self.dim, terms }
    }
}

#[cfg(test)]
mod tests {
    use super::super::exact::{rat, rint};
    use super::*;

    #[test]
    fn zero_has_neg_infinite_degree() {
        assert_eq!(VPolynomial::zero(2, 1).degree(), Degree::NegInfinity);
        assert!(Degree::NegInfinity < Degree::Finite(0));
    }

    #[test]
    fn pullback_matches_evaluation() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = x.mul(&x).add(&y.scale(&rint(3))).add(&x.mul(&y));
        let c = vec![rat(1, 2), rat(-1, 3)];
        let r = rat(2, 5);
        let q = p.affine_pullback(&c, &r);
        let z = vec![rat(3, 7), rat(-2, 9)];
        let x_at: Vec<_> = c.iter().zip(&z).map(|(ci, zi)| ci + &r * zi).collect();
        assert_eq!(q.eval_exact(&z), p.eval_exact(&x_at));
    }

    #[test]
    fn coordinates_roundtrip() {
        let idx = super::super::multi_index::indices_up_to(2, 2);
        let mut p = VPolynomial::zero(2, 2);
        p.add_term(MultiIndex::new(vec![1, 1]), 1, rat(5, 3));
        p.add_term(MultiIndex::new(vec![0, 0]), 0, rint(-2));
        let c = p.coordinates(&idx);
        assert_eq!(VPolynomial::from_coordinates(2, 2, &idx, &c), p);
    }
}
