//! Built-in operators. Symmetric-tensor targets use orthonormal coordinates, so
//! the Euclidean norm on W is the Frobenius norm of the full tensor.

use super::multi_index::{homogeneous_indices, MultiIndex};
use super::operator::{make_operator, DiffOperator, OperatorSpec, TermSpec};

/// Expected ℂ-ellipticity verdict of a gallery entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    CElliptic,
    NotCElliptic,
}

pub struct GalleryEntry {
    pub name: &'static str,
    pub op: DiffOperator,
    pub expected: Expected,
    pub note: &'static str,
}

fn build(n: usize, k: u32, dim_v: usize, dim_w: usize, rows: Vec<Vec<(MultiIndex, usize, f64)>>) -> DiffOperator {
    // rows[i] lists (α, column j, coefficient) contributions to output component i.
    let mut terms: std::collections::BTreeMap<MultiIndex, Vec<Vec<f64>>> = Default::default();
    for (i, row) in rows.iter().enumerate() {
        for (a, j, c) in row {
            let m = terms.entry(a.clone()).or_insert_with(|| vec![vec![0.0; dim_v]; dim_w]);
            m[i][*j] += c;
        }
    }
    let spec = OperatorSpec {
        n,
        k,
        dim_v,
        dim_w,
        terms: terms
            .into_iter()
            .map(|(a, matrix)| TermSpec { alpha: a.entries().to_vec(), matrix })
            .collect(),
    };
    make_operator(&spec).expect("gallery operator is valid")
}

/// k-th gradient D^k of ℝ^dim_v-valued maps on ℝⁿ; component α is scaled by
/// √(k!/α!) so that the coordinate norm equals the full tensor norm.
pub fn gradient(n: usize, dim_v: usize, k: u32) -> DiffOperator {
    let idx = homogeneous_indices(n, k);
    let mut rows = Vec::new();
    for j in 0..dim_v {
        for a in &idx {
            let w = (a.multinomial().to_string().parse::<f64>().unwrap()).sqrt();
            rows.push(vec![(a.clone(), j, w)]);
        }
    }
    build(n, k, dim_v, rows.len(), rows)
}

/// Orthonormal basis of symmetric n×n matrices: diagonal e_ii, then √2·sym(e_ij), i<j.
/// Each entry lists (row, col, weight) pairs of the basis matrix.
fn sym_basis(n: usize, trace_free: bool) -> Vec<Vec<(usize, usize, f64)>> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::new();
    if trace_free {
        // Orthonormal trace-free diagonals: (e_11+…+e_ll − l e_{l+1,l+1})/√(l(l+1)).
        for l in 1..n {
            let norm = ((l * (l + 1)) as f64).sqrt();
            let mut b: Vec<(usize, usize, f64)> = (0..l).map(|i| (i, i, 1.0 / norm)).collect();
            b.push((l, l, -(l as f64) / norm));
            out.push(b);
        }
    } else {
        for i in 0..n {
            out.push(vec![(i, i, 1.0)]);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(vec![(i, j, s), (j, i, s)]);
        }
    }
    out
}

fn sym_rows(n: usize, trace_free: bool) -> Vec<Vec<(MultiIndex, usize, f64)>> {
    // ⟨Du, B⟩ = Σ_{ij} B_ij ∂_j u_i for each basis matrix B.
    sym_basis(n, trace_free)
        .into_iter()
        .map(|b| b.into_iter().map(|(i, j, w)| (MultiIndex::unit(n, j), i, w)).collect())
        .collect()
}

/// Symmetric gradient ε(u) = (Du + Duᵀ)/2.
pub fn sym_grad(n: usize) -> DiffOperator {
    let rows = sym_rows(n, false);
    build(n, 1, n, rows.len(), rows)
}

/// Trace-free symmetric gradient ε^D(u) = ε(u) − (div u / n) I.
pub fn sym_grad_dev(n: usize) -> DiffOperator {
    let rows = sym_rows(n, true);
    build(n, 1, n, rows.len(), rows)
}

/// Scalar Laplacian.
pub fn laplacian(n: usize) -> DiffOperator {
    let row = (0..n).map(|j| (MultiIndex::unit(n, j).add(&MultiIndex::unit(n, j)), 0, 1.0)).collect();
    build(n, 2, 1, 1, vec![row])
}

/// D ε^D: all first partials of the trace-free symmetric gradient.
pub fn grad_sym_grad_dev(n: usize) -> DiffOperator {
    let inner = sym_rows(n, true);
    let mut rows = Vec::new();
    for row in &inner {
        for l in 0..n {
            rows.push(
                row.iter()
                    .map(|(a, j, w)| (a.add(&MultiIndex::unit(n, l)), *j, *w))
                    .collect(),
            );
        }
    }
    build(n, 2, n, rows.len(), rows)
}

/// Single partial derivative ∂_j of scalar functions; not elliptic for n ≥ 2.
pub fn partial(n: usize, j: usize) -> DiffOperator {
    build(n, 1, 1, 1, vec![vec![(MultiIndex::unit(n, j), 0, 1.0)]])
}

/// The nine gallery operators with their expected verdicts.
pub fn gallery() -> Vec<GalleryEntry> {
    vec![
        GalleryEntry { name: "grad_2d", op: gradient(2, 1, 1), expected: Expected::CElliptic, note: "kernel: constants" },
        GalleryEntry { name: "hessian_2d", op: gradient(2, 1, 2), expected: Expected::CElliptic, note: "kernel: affine functions" },
        GalleryEntry { name: "grad3_2d", op: gradient(2, 1, 3), expected: Expected::CElliptic, note: "kernel: quadratics" },
        GalleryEntry { name: "sym_grad_2d", op: sym_grad(2), expected: Expected::CElliptic, note: "kernel: rigid motions, dim 3" },
        GalleryEntry { name: "sym_grad_3d", op: sym_grad(3), expected: Expected::CElliptic, note: "kernel: rigid motions, dim 6" },
        GalleryEntry { name: "eps_dev_2d", op: sym_grad_dev(2), expected: Expected::NotCElliptic, note: "kernel: holomorphic fields" },
        GalleryEntry { name: "eps_dev_3d", op: sym_grad_dev(3), expected: Expected::CElliptic, note: "kernel: conformal Killing fields, dim 10" },
        GalleryEntry { name: "laplace_2d", op: laplacian(2), expected: Expected::NotCElliptic, note: "kernel: harmonic functions" },
        GalleryEntry { name: "grad_eps_dev_3d", op: grad_sym_grad_dev(3), expected: Expected::CElliptic, note: "composition of C-elliptic operators" },
    ]
}

pub fn by_name(name: &str) -> Option<DiffOperator> {
    match name {
        "partial1_2d" => Some(partial(2, 0)),
        _ => gallery().into_iter().find(|e| e.name == name).map(|e| e.op),
    }
}
