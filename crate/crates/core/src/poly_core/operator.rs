use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::{Complex, Complex64};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::exact::{rationalize, RMatrix, Rational};
use super::multi_index::{homogeneous_indices, MultiIndex};
use super::polynomial::VPolynomial;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("malformed operator spec: {0}")]
    MalformedSpec(String),
    #[error("term {alpha} has order {order}, operator order is {k}")]
    InhomogeneousOrder { alpha: MultiIndex, order: u32, k: u32 },
    #[error("all coefficient matrices vanish")]
    ZeroOperator,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// On-disk operator description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub n: usize,
    pub k: u32,
    pub dim_v: usize,
    pub dim_w: usize,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub alpha: Vec<u32>,
    /// dim_w rows, dim_v columns.
    pub matrix: Vec<Vec<f64>>,
}

/// 𝔸 = Σ_{|α|=k} A_α ∂^α with A_α ∈ Lin(V, W).
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOperator {
    pub n: usize,
    pub k: u32,
    pub dim_v: usize,
    pub dim_w: usize,
    /// Float coefficients as given.
    pub terms: BTreeMap<MultiIndex, Vec<Vec<f64>>>,
    /// Rationalized coefficients used by all exact computations.
    pub exact: BTreeMap<MultiIndex, RMatrix>,
}

/// 𝔸[ξ] together with the point ξ.
#[derive(Clone, Debug)]
pub struct SymbolMatrix {
    pub value: DMatrix<Complex64>,
    pub at: Vec<Complex64>,
}

pub type ComplexRational = Complex<Rational>;

pub fn make_operator(spec: &OperatorSpec) -> Result<DiffOperator, PolyError> {
    if spec.n == 0 || spec.k == 0 || spec.dim_v == 0 || spec.dim_w == 0 {
        return Err(PolyError::MalformedSpec("n, k, dim_v, dim_w must be positive".into()));
    }
    let mut terms = BTreeMap::new();
    for t in &spec.terms {
        if t.alpha.len() != spec.n {
            return Err(PolyError::MalformedSpec(format!(
                "alpha {:?} has length {}, expected {}",
                t.alpha,
                t.alpha.len(),
                spec.n
            )));
        }
        let alpha = MultiIndex::new(t.alpha.clone());
        if alpha.order() != spec.k {
            return Err(PolyError::InhomogeneousOrder { order: alpha.order(), alpha, k: spec.k });
        }
        if t.matrix.len() != spec.dim_w || t.matrix.iter().any(|r| r.len() != spec.dim_v) {
            return Err(PolyError::MalformedSpec(format!(
                "matrix for {alpha} must be {}x{}",
                spec.dim_w, spec.dim_v
            )));
        }
        if t.matrix.iter().flatten().any(|x| !x.is_finite()) {
            return Err(PolyError::MalformedSpec(format!("non-finite entry for {alpha}")));
        }
        if terms.insert(alpha.clone(), t.matrix.clone()).is_some() {
            return Err(PolyError::MalformedSpec(format!("duplicate term {alpha}")));
        }
    }
    if terms.values().flatten().flatten().all(|x| *x == 0.0) {
        return Err(PolyError::ZeroOperator);
    }
    let exact = terms
        .iter()
        .map(|(a, m)| {
            let rm: RMatrix = m.iter().map(|r| r.iter().map(|x| rationalize(*x)).collect()).collect();
            (a.clone(), rm)
        })
        .collect();
    Ok(DiffOperator {
        n: spec.n,
        k: spec.k,
        dim_v: spec.dim_v,
        dim_w: spec.dim_w,
        terms,
        exact,
    })
}

impl DiffOperator {
    pub fn from_json(text: &str) -> Result<Self, PolyError> {
        let spec: OperatorSpec =
            serde_json::from_str(text).map_err(|e| PolyError::MalformedSpec(e.to_string()))?;
        make_operator(&spec)
    }

    pub fn spec(&self) -> OperatorSpec {
        OperatorSpec {
            n: self.n,
            k: self.k,
            dim_v: self.dim_v,
            dim_w: self.dim_w,
            terms: self
                .terms
                .iter()
                .map(|(a, m)| TermSpec { alpha: a.entries().to_vec(), matrix: m.clone() })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.spec()).expect("spec serializes")
    }

    /// 𝔸[ξ] = Σ ξ^α A_α for complex ξ.
    pub fn symbol(&self, xi: &[Complex64]) -> Result<SymbolMatrix, PolyError> {
        if xi.len() != self.n {
            return Err(PolyError::DimensionMismatch { expected: self.n, got: xi.len() });
        }
        let mut value = DMatrix::<Complex64>::zeros(self.dim_w, self.dim_v);
        for (a, m) in &self.terms {
            let mut c = Complex64::new(1.0, 0.0);
            for (x, &e) in xi.iter().zip(a.entries()) {
                c *= x.powu(e);
            }
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    value[(i, j)] += c * v;
                }
            }
        }
        Ok(SymbolMatrix { value, at: xi.to_vec() })
    }

    pub fn symbol_real(&self, xi: &[f64]) -> DMatrix<f64> {
        let mut value = DMatrix::<f64>::zeros(self.dim_w, self.dim_v);
        for (a, m) in &self.terms {
            let c = a.eval_f64(xi);
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    value[(i, j)] += c * v;
                }
            }
        }
        value
    }

    /// 𝔸[ξ]v in exact complex-rational arithmetic on the rationalized coefficients.
    pub fn symbol_apply_exact(&self, xi: &[ComplexRational], v: &[ComplexRational]) -> Vec<ComplexRational> {
        let zero = ComplexRational::new(Rational::zero(), Rational::zero());
        let mut out = vec![zero.clone(); self.dim_w];
        for (a, m) in &self.exact {
            let mut c = ComplexRational::new(Rational::from_integer(1.into()), Rational::zero());
            for (x, &e) in xi.iter().zip(a.entries()) {
                for _ in 0..e {
                    c = &c * x;
                }
            }
            for (i, row) in m.iter().enumerate() {
                let mut acc = zero.clone();
                for (mij, vj) in row.iter().zip(v) {
                    if !mij.is_zero() {
                        acc = acc + vj.scale(mij.clone());
                    }
                }
                out[i] = &out[i] + &c * acc;
            }
        }
        out
    }

    /// Exact action on a V-valued polynomial.
    pub fn apply_to_polynomial(&self, p: &VPolynomial) -> Result<VPolynomial, PolyError> {
        if p.dim != self.dim_v {
            return Err(PolyError::DimensionMismatch { expected: self.dim_v, got: p.dim });
        }
        if p.n != self.n {
            return Err(PolyError::DimensionMismatch { expected: self.n, got: p.n });
        }
        let mut out = VPolynomial::zero(self.n, self.dim_w);
        for (alpha, m) in &self.exact {
            let d = p.derivative_multi(alpha);
            for (beta, v) in &d.coeffs {
                for (i, row) in m.iter().enumerate() {
                    let mut acc = Rational::zero();
                    for (mij, vj) in row.iter().zip(v) {
                        if !mij.is_zero() && !vj.is_zero() {
                            acc += mij * vj;
                        }
                    }
                    out.add_term(beta.clone(), i, acc);
                }
            }
        }
        Ok(out)
    }

    /// Coefficient matrix of 𝔸: 𝒫_ℓ^h(V) → 𝒫_{ℓ−k}^h(W) in monomial bases
    /// (component-minor ordering on both sides).
    pub fn coefficient_matrix(&self, degree: u32) -> (RMatrix, Vec<MultiIndex>) {
        let cols_idx = homogeneous_indices(self.n, degree);
        let ncols = cols_idx.len() * self.dim_v;
        if degree < self.k {
            return (Vec::new(), cols_idx);
        }
        let rows_idx = homogeneous_indices(self.n, degree - self.k);
        let row_pos: BTreeMap<&MultiIndex, usize> =
            rows_idx.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let mut mat = vec![vec![Rational::zero(); ncols]; rows_idx.len() * self.dim_w];
        for (bi, beta) in cols_idx.iter().enumerate() {
            for (alpha, m) in &self.exact {
                let Some(rest) = beta.checked_sub(alpha) else { continue };
                let f = Rational::from_integer(beta.falling(alpha));
                let r0 = row_pos[&rest] * self.dim_w;
                for (i, row) in m.iter().enumerate() {
                    for (j, mij) in row.iter().enumerate() {
                        if !mij.is_zero() {
                            mat[r0 + i][bi * self.dim_v + j] += mij * &f;
                        }
                    }
                }
            }
        }
        (mat, cols_idx)
    }

    /// Number of scalar components of D^k u, the output space of the full k-th gradient.
    pub fn gradient_dim(&self) -> usize {
        homogeneous_indices(self.n, self.k).len() * self.dim_v
    }
}

/// Evaluates ξ^α for exact complex ξ.
pub fn monomial_exact(alpha: &MultiIndex, xi: &[ComplexRational]) -> ComplexRational {
    let mut c = ComplexRational::new(Rational::from_integer(1.into()), Rational::zero());
    for (x, &e) in xi.iter().zip(alpha.entries()) {
        for _ in 0..e {
            c = &c * x;
        }
    }
    c
}
