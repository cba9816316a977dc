//! Small numerical building blocks shared across modules.

/// Van der Corput radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// The i-th point of the Halton sequence in [0,1)^d.
pub fn halton(i: u64, d: usize) -> Vec<f64> {
    (0..d).map(|j| radical_inverse(i + 1, PRIMES[j])).collect()
}

/// Quasi-random points on the unit sphere S^{d−1}: Halton points in [−1,1]^d,
/// rejected outside the unit ball, then normalized.
pub fn sphere_points(count: usize, d: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    while out.len() < count {
        let p: Vec<f64> = halton(i, d).into_iter().map(|x| 2.0 * x - 1.0).collect();
        i += 1;
        let r = norm(&p);
        if r > 1.0 || r < 1e-3 {
            continue;
        }
        out.push(p.iter().map(|x| x / r).collect());
    }
    out
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Gauss–Legendre nodes and weights on [−1, 1] (Newton on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// ∫_a^b f by Gauss–Legendre with precomputed nodes.
pub fn gl_integrate(nodes: &(Vec<f64>, Vec<f64>), a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let (x, w) = nodes;
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    x.iter().zip(w).map(|(xi, wi)| wi * f(c + h * xi)).sum::<f64>() * h
}

/// Nelder–Mead minimization; returns (argmin, min).
pub fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], step: f64, max_iter: usize, ftol: f64) -> (Vec<f64>, f64) {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..d {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }
    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if (simplex[d].1 - simplex[0].1).abs() <= ftol * (simplex[0].1.abs() + 1e-300) {
            break;
        }
        let mut centroid = vec![0.0; d];
        for (x, _) in &simplex[..d] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / d as f64;
            }
        }
        let worst = simplex[d].0.clone();
        let lerp = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst).map(|(c, w)| c + t * (w - c)).collect() };
        let xr = lerp(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = lerp(-2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let xc = if fr < simplex[d].1 { lerp(-0.5) } else { lerp(0.5) };
            let fc = f(&xc);
            if fc < fr.min(simplex[d].1) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best.iter().zip(&s.0).map(|(b, xi)| b + 0.5 * (xi - b)).collect();
                    let v = f(&x);
                    *s = (x, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, Default)]
pub struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Builds from per-row (column, value) lists; duplicate columns are summed.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Csr {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for mut r in rows.into_iter() {
            r.sort_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for (c, v) in r {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            indptr.push(indices.len());
        }
        Csr { rows: indptr.len() - 1, cols, indptr, indices, values }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k] * x[self.indices[k]])
                    .sum()
            })
            .collect()
    }

    pub fn mul_t_vec(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                out[self.indices[k]] += self.values[k] * y[r];
            }
        }
        out
    }

    /// Dense AᵀA.
    pub fn gram_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut g = nalgebra::DMatrix::<f64>::zeros(self.cols, self.cols);
        for r in 0..self.rows {
            let range = self.indptr[r]..self.indptr[r + 1];
            for a in range.clone() {
                for b in range.clone() {
                    g[(self.indices[a], self.indices[b])] += self.values[a] * self.values[b];
                }
            }
        }
        g
    }
}

/// Conjugate gradients for SPD `apply`; returns the iterate and the iteration count.
pub fn conjugate_gradient(
    apply: &dyn Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    rtol: f64,
    max_iter: usize,
) -> (Vec<f64>, usize) {
    let n = b.len();
    let mut x = x0.map_or_else(|| vec![0.0; n], |v| v.to_vec());
    let ax = apply(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let bnorm = norm(b).max(1e-300);
    for it in 0..max_iter {
        if rr.sqrt() <= rtol * bnorm {
            return (x, it);
        }
        let ap = apply(&p);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    (x, max_iter)
}

/// Least-squares solve of the normal equations G c = b for a small SPD Gram matrix.
pub fn solve_spd(g: &nalgebra::DMatrix<f64>, b: &nalgebra::DVector<f64>) -> Option<nalgebra::DVector<f64>> {
    g.clone().cholesky().map(|c| c.solve(b))
}

/// A quotient where 0/0 is meaningful: both sides vanish exactly.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ratio {
    Exact,
    Value(f64),
    Infinite,
}

impl Ratio {
    /// num/den with both sides compared against `tol·scale` for the 0/0 case.
    pub fn new(num: f64, den: f64, scale: f64, tol: f64) -> Ratio {
        let eps = tol * scale.abs().max(f64::MIN_POSITIVE);
        if den.abs() <= eps {
            if num.abs() <= eps {
                Ratio::Exact
            } else {
                Ratio::Infinite
            }
        } else {
            Ratio::Value(num / den)
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self, Ratio::Infinite)
    }
}

/// max/min of the finite values (spread of a family of ratios).
pub fn spread(values: &[Ratio]) -> f64 {
    let v: Vec<f64> = values.iter().filter_map(|r| r.value()).collect();
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if v.is_empty() {
        1.0
    } else {
        max / min
    }
}
