//! Lattice domains in the plane, grid functions, Whitney covers and emanating chains.
//!
//! A domain is a set of cells of side h; its lattice points are the cell centers
//! origin + (i+½, j+½)h. Geometry tests (containment, overlap) are done on these
//! lattice points, so every check is exact integer arithmetic.

mod whitney;

pub use whitney::{
    achieved_constants, check_chain_properties, cube_gap, emanating_chains, enlarge, overlap_ball, whitney_cover,
    AchievedConstants, ChainCheckReport, ChainCover, Cube, WhitneyError,
};

use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("domain mask is empty")]
    EmptyMask,
    #[error("domain mask is not edge-connected ({0} components)")]
    DisconnectedMask(usize),
    #[error("invalid domain parameters: {0}")]
    InvalidParams(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainKind {
    Square { side: f64 },
    Disk { radius: f64 },
    /// [0,1]² minus [½,1]².
    Lshape,
    /// [0,1]² minus the segment {½} × [0,½].
    Slit,
    /// Koch snowflake of the given iteration, scaled into [0,1]².
    Snowflake { iter: u32 },
    /// [0,width) × [0,depth), periodic in the first coordinate; y = 0 is the boundary.
    HalfspaceStrip { depth: f64, width: f64 },
    Custom,
}

impl DomainKind {
    /// Parses a CLI kind name with `k=v` parameters.
    pub fn parse(kind: &str, params: &[(String, f64)]) -> Result<DomainKind, DomainError> {
        let get = |k: &str, d: f64| params.iter().find(|(n, _)| n == k).map_or(d, |(_, v)| *v);
        Ok(match kind {
            "square" => DomainKind::Square { side: get("side", 1.0) },
            "disk" => DomainKind::Disk { radius: get("radius", 0.5) },
            "lshape" => DomainKind::Lshape,
            "slit" => DomainKind::Slit,
            "snowflake" => DomainKind::Snowflake { iter: get("iter", 3.0) as u32 },
            "halfspace_strip" => DomainKind::HalfspaceStrip { depth: get("depth", 1.0), width: get("width", 1.0) },
            other => return Err(DomainError::InvalidParams(format!("unknown domain kind {other}"))),
        })
    }
}

/// Uniform cell grid: nx × ny cells of side h, cell (i,j) centered at origin + (i+½, j+½)h.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

impl Grid {
    pub fn new(nx: usize, ny: usize, h: f64, origin: [f64; 2]) -> Grid {
        Grid { nx, ny, h, origin }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.h,
            self.origin[1] + (j as f64 + 0.5) * self.h,
        ]
    }

    pub fn center_of(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.coords(idx);
        self.center(i, j)
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Cell containing the point, if inside the grid box.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, usize)> {
        let fi = ((x[0] - self.origin[0]) / self.h).floor();
        let fj = ((x[1] - self.origin[1]) / self.h).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }
}

/// Component-valued samples at the cell centers of a grid; value c of cell idx is
/// `values[idx * dim + c]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Grid,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: &Grid, dim: usize) -> GridFunction {
        GridFunction { grid: grid.clone(), dim, values: vec![0.0; grid.len() * dim] }
    }

    pub fn from_fn(grid: &Grid, dim: usize, mut f: impl FnMut([f64; 2]) -> Vec<f64>) -> GridFunction {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for idx in 0..grid.len() {
            let v = f(grid.center_of(idx));
            debug_assert_eq!(v.len(), dim);
            values.extend(v);
        }
        GridFunction { grid: grid.clone(), dim, values }
    }

    /// Samples f on masked cells, zero elsewhere.
    pub fn from_fn_masked(domain: &GridDomain, dim: usize, mut f: impl FnMut([f64; 2]) -> Vec<f64>) -> GridFunction {
        let mut out = GridFunction::zeros(&domain.grid, dim);
        for idx in domain.cells() {
            let v = f(domain.grid.center_of(idx));
            out.values[idx * dim..(idx + 1) * dim].copy_from_slice(&v);
        }
        out
    }

    pub fn at(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn at_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.values[idx * self.dim..(idx + 1) * self.dim]
    }

    /// Euclidean norm of the value at a cell.
    pub fn abs_at(&self, idx: usize) -> f64 {
        self.at(idx).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &GridFunction) -> GridFunction {
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: f64) -> GridFunction {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// (Σ_cells |f|^p h²)^{1/p} over the given cells, optionally weighted.
    pub fn lp_norm(&self, cells: &[usize], p: f64, weight: Option<&[f64]>) -> f64 {
        let a = self.grid.cell_area();
        let s: f64 = cells
            .iter()
            .map(|&c| self.abs_at(c).powf(p) * weight.map_or(1.0, |w| w[c]) * a)
            .sum();
        s.powf(1.0 / p)
    }

    pub fn max_abs(&self, cells: &[usize]) -> f64 {
        cells.iter().map(|&c| self.abs_at(c)).fold(0.0, f64::max)
    }
}

/// A lattice domain: a mask over a grid box.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridDomain {
    pub n: usize,
    pub grid: Grid,
    pub mask: Vec<bool>,
    pub kind: DomainKind,
    pub periodic_x: bool,
    pub diam: f64,
}

impl GridDomain {
    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn cells(&self) -> Vec<usize> {
        (0..self.grid.len()).filter(|&c| self.mask[c]).collect()
    }

    pub fn num_cells(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn inside(&self, i: i64, j: i64) -> bool {
        match self.wrap(i, j) {
            Some((i, j)) => self.mask[self.grid.index(i, j)],
            None => false,
        }
    }

    /// Maps signed cell indices into the box (wrapping x when periodic).
    pub fn wrap(&self, i: i64, j: i64) -> Option<(usize, usize)> {
        let (nx, ny) = (self.grid.nx as i64, self.grid.ny as i64);
        let i = if self.periodic_x { i.rem_euclid(nx) } else { i };
        if i < 0 || j < 0 || i >= nx || j >= ny {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Chebyshev index distance from each cell to the nearest cell outside the mask
    /// (0 on exterior cells; cells outside the box count as exterior).
    pub fn distance_transform(&self) -> Vec<u32> {
        let g = &self.grid;
        // Pad by one exterior ring (not along a periodic axis) and run an 8-neighbour BFS.
        let px = if self.periodic_x { 0 } else { 1 };
        let (w, hgt) = (g.nx + 2 * px, g.ny + 2);
        let inside = |a: usize, b: usize| -> bool {
            let (i, j) = (a as i64 - px as i64, b as i64 - 1);
            self.inside(i, j)
        };
        let mut d = vec![u32::MAX; w * hgt];
        let mut queue = VecDeque::new();
        for b in 0..hgt {
            for a in 0..w {
                if !inside(a, b) {
                    d[b * w + a] = 0;
                    queue.push_back((a, b));
                }
            }
        }
        while let Some((a, b)) = queue.pop_front() {
            let cur = d[b * w + a];
            for db in -1i64..=1 {
                for da in -1i64..=1 {
                    let mut na = a as i64 + da;
                    let nb = b as i64 + db;
                    if self.periodic_x {
                        na = na.rem_euclid(w as i64);
                    }
                    if na < 0 || nb < 0 || na >= w as i64 || nb >= hgt as i64 {
                        continue;
                    }
                    let n = nb as usize * w + na as usize;
                    if d[n] > cur + 1 {
                        d[n] = cur + 1;
                        queue.push_back((na as usize, nb as usize));
                    }
                }
            }
        }
        (0..g.len())
            .map(|idx| {
                let (i, j) = g.coords(idx);
                d[(j + 1) * w + i + px]
            })
            .collect()
    }

    /// Edge-connected components of the mask.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let g = &self.grid;
        let mut seen = vec![false; g.len()];
        let mut out = Vec::new();
        for start in 0..g.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut q = VecDeque::from([start]);
            while let Some(idx) = q.pop_front() {
                let (i, j) = g.coords(idx);
                for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                    if let Some((a, b)) = self.wrap(i as i64 + di, j as i64 + dj) {
                        let n = g.index(a, b);
                        if self.mask[n] && !seen[n] {
                            seen[n] = true;
                            comp.push(n);
                            q.push_back(n);
                        }
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// Builds a domain from an explicit mask.
    pub fn from_mask(grid: Grid, mask: Vec<bool>, kind: DomainKind, periodic_x: bool) -> Result<GridDomain, DomainError> {
        let mut d = GridDomain { n: 2, grid, mask, kind, periodic_x, diam: 0.0 };
        if d.num_cells() == 0 {
            return Err(DomainError::EmptyMask);
        }
        let comps = d.components();
        if comps.len() > 1 {
            return Err(DomainError::DisconnectedMask(comps.len()));
        }
        d.diam = mask_diameter(&d);
        Ok(d)
    }
}

/// Diameter of the union of mask cells (max distance between cell corners, via the convex hull).
fn mask_diameter(d: &GridDomain) -> f64 {
    let g = &d.grid;
    let mut pts: Vec<(i64, i64)> = Vec::new();
    for idx in d.cells() {
        let (i, j) = g.coords(idx);
        let (i, j) = (i as i64, j as i64);
        pts.extend([(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)]);
    }
    let hull = convex_hull(pts);
    let mut best = 0i64;
    for a in 0..hull.len() {
        for b in a + 1..hull.len() {
            let (dx, dy) = (hull[a].0 - hull[b].0, hull[a].1 - hull[b].1);
            best = best.max(dx * dx + dy * dy);
        }
    }
    (best as f64).sqrt() * g.h
}

fn convex_hull(mut pts: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Koch snowflake polygon after `iter` refinements, counterclockwise.
pub fn koch_polygon(iter: u32) -> Vec<[f64; 2]> {
    let s3 = 3f64.sqrt();
    let mut poly = vec![[0.0, 0.0], [1.0, 0.0], [0.5, s3 / 2.0]];
    for _ in 0..iter {
        let mut next = Vec::with_capacity(poly.len() * 4);
        for e in 0..poly.len() {
            let a = poly[e];
            let b = poly[(e + 1) % poly.len()];
            let d = [(b[0] - a[0]) / 3.0, (b[1] - a[1]) / 3.0];
            let p1 = [a[0] + d[0], a[1] + d[1]];
            let p2 = [a[0] + 2.0 * d[0], a[1] + 2.0 * d[1]];
            // Outward for a counterclockwise polygon: rotate d by −60°.
            let (c, s) = (0.5, -s3 / 2.0);
            let tip = [p1[0] + c * d[0] - s * d[1], p1[1] + s * d[0] + c * d[1]];
            next.extend([a, p1, tip, p2]);
        }
        poly = next;
    }
    poly
}

pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for e in 0..n {
        let a = poly[e];
        let b = poly[(e + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn cells_per(len: f64, h: f64) -> Result<usize, DomainError> {
    let n = (len / h).round();
    if !(n >= 1.0) || !n.is_finite() {
        return Err(DomainError::InvalidParams(format!("length {len} not resolvable at h = {h}")));
    }
    Ok(n as usize)
}

/// Removes cells that no cell at distance ≥ 2 touches (features thinner than the
/// lattice resolves), then keeps the largest component.
fn regularize(mut d: GridDomain) -> GridDomain {
    loop {
        let dist = d.distance_transform();
        let g = d.grid.clone();
        let mut changed = false;
        let mut keep = d.mask.clone();
        for idx in d.cells() {
            let (i, j) = g.coords(idx);
            let mut ok = false;
            for dj in -1i64..=1 {
                for di in -1i64..=1 {
                    if let Some((a, b)) = d.wrap(i as i64 + di, j as i64 + dj) {
                        ok |= dist[g.index(a, b)] >= 2;
                    }
                }
            }
            if !ok {
                keep[idx] = false;
                changed = true;
            }
        }
        d.mask = keep;
        if !changed {
            break;
        }
    }
    let comps = d.components();
    if comps.len() > 1 {
        let largest = comps.iter().max_by_key(|c| c.len()).cloned().unwrap_or_default();
        let mut mask = vec![false; d.grid.len()];
        for c in largest {
            mask[c] = true;
        }
        d.mask = mask;
    }
    d
}

/// Builds one of the named lattice domains at spacing h.
pub fn make_domain(kind: DomainKind, h: f64) -> Result<GridDomain, DomainError> {
    if !(h > 0.0) {
        return Err(DomainError::InvalidParams("h must be positive".into()));
    }
    let (grid, mask, periodic) = match &kind {
        DomainKind::Square { side } => {
            let n = cells_per(*side, h)?;
            (Grid::new(n, n, h, [0.0, 0.0]), vec![true; n * n], false)
        }
        DomainKind::Disk { radius } => {
            let n = cells_per(2.0 * radius, h)?;
            let g = Grid::new(n, n, h, [-radius, -radius]);
            let mask = (0..g.len())
                .map(|c| {
                    let x = g.center_of(c);
                    x[0] * x[0] + x[1] * x[1] < radius * radius
                })
                .collect();
            (g, mask, false)
        }
        DomainKind::Lshape => {
            let n = cells_per(1.0, h)?;
            let g = Grid::new(n, n, h, [0.0, 0.0]);
            let mask = (0..g.len())
                .map(|c| {
                    let x = g.center_of(c);
                    !(x[0] > 0.5 && x[1] > 0.5)
                })
                .collect();
            (g, mask, false)
        }
        DomainKind::Slit => {
            let n = cells_per(1.0, h)?;
            let g = Grid::new(n, n, h, [0.0, 0.0]);
            let col = (0.5 / h).floor() as usize;
            let top = (0.5 / h).floor() as usize;
            let mask = (0..g.len())
                .map(|c| {
                    let (i, j) = g.coords(c);
                    !(i == col && j < top)
                })
                .collect();
            (g, mask, false)
        }
        DomainKind::Snowflake { iter } => {
            let n = cells_per(1.0, h)?;
            let g = Grid::new(n, n, h, [0.0, 0.0]);
            let mut poly = koch_polygon(*iter);
            let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
            for p in &poly {
                for k in 0..2 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            let scale = 0.96 / (hi[0] - lo[0]).max(hi[1] - lo[1]);
            for p in poly.iter_mut() {
                for k in 0..2 {
                    p[k] = 0.5 + (p[k] - 0.5 * (lo[k] + hi[k])) * scale;
                }
            }
            let mask = (0..g.len()).map(|c| point_in_polygon(g.center_of(c), &poly)).collect();
            (g, mask, false)
        }
        DomainKind::HalfspaceStrip { depth, width } => {
            let nx = cells_per(*width, h)?;
            let ny = cells_per(*depth, h)?;
            (Grid::new(nx, ny, h, [0.0, 0.0]), vec![true; nx * ny], true)
        }
        DomainKind::Custom => return Err(DomainError::InvalidParams("use GridDomain::from_mask".into())),
    };
    let raw = GridDomain { n: 2, grid, mask, kind: kind.clone(), periodic_x: periodic, diam: 0.0 };
    if raw.num_cells() == 0 {
        return Err(DomainError::EmptyMask);
    }
    let mut d = match kind {
        DomainKind::Snowflake { .. } | DomainKind::Disk { .. } => regularize(raw),
        _ => raw,
    };
    if d.num_cells() == 0 {
        return Err(DomainError::EmptyMask);
    }
    let comps = d.components().len();
    if comps > 1 {
        return Err(DomainError::DisconnectedMask(comps));
    }
    d.diam = mask_diameter(&d);
    Ok(d)
}
