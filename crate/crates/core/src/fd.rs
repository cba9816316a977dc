//! Centered finite differences on lattice domains.
//!
//! Each partial ∂^α uses the tensor product of minimal centered 1-D stencils and is
//! exact on polynomials of total degree ≤ |α|+1. A node is stencil-valid for a set
//! of multi-indices when every stencil point lies in the mask.

use crate::domains::{GridDomain, GridFunction};
use crate::poly_core::{homogeneous_indices, DiffOperator, MultiIndex};

/// Centered stencil for d^order/dt^order on unit spacing, as (offset, weight).
pub fn stencil_1d(order: u32) -> Vec<(i64, f64)> {
    match order {
        0 => vec![(0, 1.0)],
        1 => vec![(-1, -0.5), (1, 0.5)],
        2 => vec![(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => vec![(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => vec![(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => {
            // Compose second differences with a lower-order stencil.
            let inner = stencil_1d(order - 2);
            let mut out: Vec<(i64, f64)> = Vec::new();
            for (o, w) in inner {
                for (p, v) in [(-1, 1.0), (0, -2.0), (1, 1.0)] {
                    match out.iter_mut().find(|e| e.0 == o + p) {
                        Some(e) => e.1 += w * v,
                        None => out.push((o + p, w * v)),
                    }
                }
            }
            out.sort_by_key(|e| e.0);
            out
        }
    }
}

/// 2-D stencil for ∂^α on unit spacing.
pub fn stencil(alpha: &MultiIndex) -> Vec<((i64, i64), f64)> {
    let sx = stencil_1d(alpha.get(0));
    let sy = stencil_1d(alpha.get(1));
    let mut out = Vec::with_capacity(sx.len() * sy.len());
    for &(oy, wy) in &sy {
        for &(ox, wx) in &sx {
            out.push(((ox, oy), wx * wy));
        }
    }
    out
}

/// Offsets touched by any of the stencils.
pub fn footprint(alphas: &[MultiIndex]) -> Vec<(i64, i64)> {
    let mut pts: Vec<(i64, i64)> = alphas.iter().flat_map(|a| stencil(a).into_iter().map(|e| e.0)).collect();
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Domain cells at which every stencil point of every α lies in the mask.
pub fn valid_cells(domain: &GridDomain, alphas: &[MultiIndex]) -> Vec<usize> {
    let fp = footprint(alphas);
    domain
        .cells()
        .into_iter()
        .filter(|&c| {
            let (i, j) = domain.grid.coords(c);
            fp.iter().all(|&(di, dj)| domain.inside(i as i64 + di, j as i64 + dj))
        })
        .collect()
}

/// ∂^α of component `comp` at a valid cell.
pub fn partial_at(f: &GridFunction, domain: &GridDomain, comp: usize, alpha: &MultiIndex, cell: usize) -> f64 {
    let (i, j) = domain.grid.coords(cell);
    let h = domain.grid.h;
    let mut s = 0.0;
    for ((di, dj), w) in stencil(alpha) {
        let (a, b) = domain.wrap(i as i64 + di, j as i64 + dj).expect("valid cell");
        s += w * f.at(domain.grid.index(a, b))[comp];
    }
    s / h.powi(alpha.order() as i32)
}

/// Cells at which 𝔸 can be evaluated.
pub fn operator_cells(op: &DiffOperator, domain: &GridDomain) -> Vec<usize> {
    let alphas: Vec<MultiIndex> = op.terms.keys().cloned().collect();
    valid_cells(domain, &alphas)
}

/// 𝔸f on the given cells (zero elsewhere).
pub fn apply_operator(op: &DiffOperator, f: &GridFunction, domain: &GridDomain, cells: &[usize]) -> GridFunction {
    let mut out = GridFunction::zeros(&domain.grid, op.dim_w);
    for &c in cells {
        let v = out.at_mut(c);
        for (alpha, m) in &op.terms {
            for j in 0..op.dim_v {
                let d = partial_at(f, domain, j, alpha, c);
                if d == 0.0 {
                    continue;
                }
                for (i, row) in m.iter().enumerate() {
                    v[i] += row[j] * d;
                }
            }
        }
    }
    out
}

/// Multi-indices of order ℓ with the √(ℓ!/α!) weights giving the full tensor norm.
pub fn gradient_indices(n: usize, l: u32) -> Vec<(MultiIndex, f64)> {
    homogeneous_indices(n, l)
        .into_iter()
        .map(|a| {
            let w = a.multinomial().to_string().parse::<f64>().unwrap_or(f64::INFINITY).sqrt();
            (a, w)
        })
        .collect()
}

/// D^ℓ f on the given cells, in weighted coordinates (dim · #α components).
pub fn apply_gradient(f: &GridFunction, l: u32, domain: &GridDomain, cells: &[usize]) -> GridFunction {
    let idx = gradient_indices(2, l);
    let mut out = GridFunction::zeros(&domain.grid, f.dim * idx.len());
    for &c in cells {
        let mut vals = Vec::with_capacity(f.dim * idx.len());
        for comp in 0..f.dim {
            for (a, w) in &idx {
                vals.push(w * partial_at(f, domain, comp, a, c));
            }
        }
        out.at_mut(c).copy_from_slice(&vals);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{make_domain, DomainKind};

    #[test]
    fn stencils_differentiate_monomials_exactly() {
        for order in 1..=6u32 {
            let s = stencil_1d(order);
            for deg in 0..=order + 1 {
                let v: f64 = s.iter().map(|&(o, w)| w * (3.0 + o as f64).powi(deg as i32)).sum();
                let exact = if deg < order {
                    0.0
                } else {
                    let fall: f64 = (0..order).map(|t| (deg - t) as f64).product();
                    fall * 3f64.powi((deg - order) as i32)
                };
                assert!((v - exact).abs() < 1e-9 * (1.0 + exact.abs()), "order {order} deg {deg}");
            }
        }
    }

    #[test]
    fn gradient_on_block_has_two_by_two_nodes() {
        let d = make_domain(DomainKind::Square { side: 4.0 }, 1.0).unwrap();
        let cells = valid_cells(&d, &[MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![0, 1])]);
        assert_eq!(cells.len(), 4);
        let f = GridFunction::from_fn(&d.grid, 1, |x| vec![2.0 * x[0] - 3.0 * x[1] + 1.0]);
        let g = apply_gradient(&f, 1, &d, &cells);
        for c in cells {
            assert!((g.at(c)[0] - 2.0).abs() < 1e-12 && (g.at(c)[1] + 3.0).abs() < 1e-12);
        }
    }
}
