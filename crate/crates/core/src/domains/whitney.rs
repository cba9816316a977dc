//! Whitney covers and emanating chains on lattice domains.
//!
//! Coordinates are in cell units: cell (i,j) is [i,i+1)×[j,j+1) and its lattice
//! point is (i+½, j+½). Squares are open, so a lattice point p lies in a square
//! with center c and half-side r iff |p−c|_∞ < r.

use super::GridDomain;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WhitneyError {
    #[error("cube {0} is not reachable from the central cube")]
    UnreachableCube(usize),
    #[error("empty cover")]
    EmptyCover,
}

/// Axis-parallel square in cell units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub cx: f64,
    pub cy: f64,
    pub half: f64,
}

impl Cube {
    /// Square made of the cells [i0, i0+side) × [j0, j0+side).
    pub fn from_cells(i0: i64, j0: i64, side: i64) -> Cube {
        let half = side as f64 / 2.0;
        Cube { cx: i0 as f64 + half, cy: j0 as f64 + half, half }
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half
    }

    pub fn dilate(&self, s: f64) -> Cube {
        Cube { half: self.half * s, ..*self }
    }

    pub fn expand(&self, cells: f64) -> Cube {
        Cube { half: self.half + cells, ..*self }
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        (x - self.cx).abs() < self.half && (y - self.cy).abs() < self.half
    }

    /// Smallest σ with self ⊂ σ·other (closed squares).
    pub fn containment_ratio(&self, other: &Cube) -> f64 {
        ((self.cx - other.cx).abs().max((self.cy - other.cy).abs()) + self.half) / other.half
    }

    /// Half-open range of cell indices whose lattice points lie in the square, per axis.
    pub fn cell_range(&self) -> ((i64, i64), (i64, i64)) {
        let r = |c: f64| {
            // p = i + ½ with |p − c| < half  ⇔  c − half − ½ < i < c + half − ½.
            let lo = (c - self.half - 0.5).floor() as i64 + 1;
            let hi = (c + self.half - 0.5).ceil() as i64;
            (lo, hi)
        };
        (r(self.cx), r(self.cy))
    }

    /// Physical center and side for a grid with spacing h and the given origin.
    pub fn physical(&self, h: f64, origin: [f64; 2]) -> ([f64; 2], f64) {
        ([origin[0] + self.cx * h, origin[1] + self.cy * h], self.side() * h)
    }

    /// Lattice cells covered, as signed indices.
    pub fn cells(&self) -> Vec<(i64, i64)> {
        let ((a0, a1), (b0, b1)) = self.cell_range();
        let mut out = Vec::new();
        for j in b0..b1 {
            for i in a0..a1 {
                out.push((i, j));
            }
        }
        out
    }
}

/// Whitney cubes: dyadic squares of interior cells with side ≤ dist(Q, ∂Ω) ≤ 4·side,
/// where dist is the ℓ∞ gap between Q and the nearest exterior cell.
pub fn whitney_cover(domain: &GridDomain) -> Vec<Cube> {
    let d = domain.distance_transform();
    let g = &domain.grid;
    let mut top = 1i64;
    while top < g.nx.max(g.ny) as i64 {
        top *= 2;
    }
    let mut out = Vec::new();
    let mut stack = vec![(0i64, 0i64, top)];
    while let Some((i0, j0, s)) = stack.pop() {
        if i0 >= g.nx as i64 || j0 >= g.ny as i64 {
            continue;
        }
        let mut min_d = u32::MAX;
        let mut all_inside = true;
        'scan: for j in j0..j0 + s {
            for i in i0..i0 + s {
                if i >= g.nx as i64 || j >= g.ny as i64 {
                    all_inside = false;
                    break 'scan;
                }
                let v = d[g.index(i as usize, j as usize)];
                if v == 0 {
                    all_inside = false;
                    break 'scan;
                }
                min_d = min_d.min(v);
            }
        }
        if all_inside && (min_d as i64 - 1) >= s {
            out.push(Cube::from_cells(i0, j0, s));
        } else if s > 1 {
            let t = s / 2;
            for (a, b) in [(0, 0), (t, 0), (0, t), (t, t)] {
                stack.push((i0 + a, j0 + b, t));
            }
        }
    }
    out.sort_by(|a, b| (a.cy, a.cx).partial_cmp(&(b.cy, b.cx)).unwrap_or(Ordering::Equal));
    out
}

/// Gap in cells between a Whitney cube and the nearest exterior cell.
pub fn cube_gap(domain: &GridDomain, dist: &[u32], q: &Cube) -> f64 {
    let g = &domain.grid;
    let mut m = u32::MAX;
    for (i, j) in q.cells() {
        m = m.min(dist[g.index(i as usize, j as usize)]);
    }
    m as f64 - 1.0
}

/// Cover element W grown from a Whitney cube Q: Q plus max(1, side/4) cells per side.
pub fn enlarge(q: &Cube) -> Cube {
    q.expand((q.side() / 4.0).max(1.0))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainCover {
    pub h: f64,
    pub origin: [f64; 2],
    /// Cover elements W_i; index 0 is the central element.
    pub cubes: Vec<Cube>,
    /// Whitney cubes Q_i ⊂ W_i.
    pub whitney: Vec<Cube>,
    /// chains[i] = [i, …, 0].
    pub chains: Vec<Vec<usize>>,
    /// overlap_balls[i][l] ⊂ W_{chains[i][l]} ∩ W_{chains[i][l+1]}.
    pub overlap_balls: Vec<Vec<Cube>>,
    pub sigma1: f64,
    pub sigma2: f64,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

fn share_edge(a: &Cube, b: &Cube) -> bool {
    let eps = 1e-9;
    let overlap = |c1: f64, h1: f64, c2: f64, h2: f64| (c1 + h1).min(c2 + h2) - (c1 - h1).max(c2 - h2);
    let touch = |c1: f64, h1: f64, c2: f64, h2: f64| ((c1 - c2).abs() - (h1 + h2)).abs() < eps;
    (touch(a.cx, a.half, b.cx, b.half) && overlap(a.cy, a.half, b.cy, b.half) > eps)
        || (touch(a.cy, a.half, b.cy, b.half) && overlap(a.cx, a.half, b.cx, b.half) > eps)
}

/// Largest square centered in the rectangle W_a ∩ W_b.
pub fn overlap_ball(a: &Cube, b: &Cube) -> Option<Cube> {
    let x0 = (a.cx - a.half).max(b.cx - b.half);
    let x1 = (a.cx + a.half).min(b.cx + b.half);
    let y0 = (a.cy - a.half).max(b.cy - b.half);
    let y1 = (a.cy + a.half).min(b.cy + b.half);
    if x1 <= x0 || y1 <= y0 {
        return None;
    }
    Some(Cube { cx: 0.5 * (x0 + x1), cy: 0.5 * (y0 + y1), half: 0.5 * (x1 - x0).min(y1 - y0) })
}

/// Builds chains from every cube to the central (largest) cube along shortest paths
/// of the adjacency graph, edges weighted by 1/side so that paths prefer large cubes.
pub fn emanating_chains(whitney: &[Cube], domain: &GridDomain) -> Result<ChainCover, WhitneyError> {
    if whitney.is_empty() {
        return Err(WhitneyError::EmptyCover);
    }
    let central = (0..whitney.len())
        .max_by(|&a, &b| {
            let (qa, qb) = (&whitney[a], &whitney[b]);
            qa.half
                .total_cmp(&qb.half)
                .then(qb.cx.total_cmp(&qa.cx))
                .then(qb.cy.total_cmp(&qa.cy))
        })
        .expect("nonempty");
    let mut order = vec![central];
    order.extend((0..whitney.len()).filter(|&i| i != central));
    let qs: Vec<Cube> = order.iter().map(|&i| whitney[i]).collect();
    let n = qs.len();
    let mut adj = vec![Vec::new(); n];
    for a in 0..n {
        for b in a + 1..n {
            if share_edge(&qs[a], &qs[b]) {
                let w = 1.0 / qs[a].side() + 1.0 / qs[b].side();
                adj[a].push((b, w));
                adj[b].push((a, w));
            }
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    dist[0] = 0.0;
    let mut heap = BinaryHeap::from([HeapItem(0.0, 0)]);
    while let Some(HeapItem(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] || (nd == dist[v] && u < parent[v]) {
                dist[v] = nd;
                parent[v] = u;
                heap.push(HeapItem(nd, v));
            }
        }
    }
    let cubes: Vec<Cube> = qs.iter().map(enlarge).collect();
    let mut chains = Vec::with_capacity(n);
    let mut balls = Vec::with_capacity(n);
    for i in 0..n {
        if i != 0 && parent[i] == usize::MAX {
            return Err(WhitneyError::UnreachableCube(i));
        }
        let mut chain = vec![i];
        let mut cur = i;
        while cur != 0 {
            cur = parent[cur];
            chain.push(cur);
        }
        let bl = chain
            .windows(2)
            .map(|w| overlap_ball(&cubes[w[0]], &cubes[w[1]]).expect("adjacent cover elements overlap"))
            .collect();
        chains.push(chain);
        balls.push(bl);
    }
    let mut cc = ChainCover {
        h: domain.grid.h,
        origin: domain.grid.origin,
        cubes,
        whitney: qs,
        chains,
        overlap_balls: balls,
        sigma1: 1.25,
        sigma2: 1.0,
    };
    cc.sigma2 = achieved_constants(&cc, domain).sigma2();
    Ok(cc)
}

/// Measured constants of a cover.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct AchievedConstants {
    /// max_x #{i : x ∈ σ₁W_i}.
    pub overlap: f64,
    /// max over chains and l₁ ≤ l₂ of the ratio in W_{i,l₁} ⊂ σW_{i,l₂}.
    pub containment: f64,
    /// max ratio in W_{i,l} ∪ W_{i,l+1} ⊂ σB_{i,l}.
    pub ball_ratio: f64,
    /// max_x #{balls containing x}.
    pub ball_overlap: f64,
}

impl AchievedConstants {
    pub fn sigma2(&self) -> f64 {
        1f64.max(self.overlap).max(self.containment).max(self.ball_ratio).max(self.ball_overlap)
    }
}

fn count_overlap(domain: &GridDomain, sets: &[Cube]) -> f64 {
    let g = &domain.grid;
    let mut count = vec![0u32; g.len()];
    for c in sets {
        for (i, j) in c.cells() {
            if let Some((a, b)) = domain.wrap(i, j) {
                count[g.index(a, b)] += 1;
            }
        }
    }
    count.into_iter().max().unwrap_or(0) as f64
}

fn distinct_balls(cc: &ChainCover) -> Vec<Cube> {
    let mut seen: BTreeMap<(usize, usize), Cube> = BTreeMap::new();
    for (chain, balls) in cc.chains.iter().zip(&cc.overlap_balls) {
        for (l, b) in balls.iter().enumerate() {
            let key = (chain[l].min(chain[l + 1]), chain[l].max(chain[l + 1]));
            seen.insert(key, *b);
        }
    }
    seen.into_values().collect()
}

pub fn achieved_constants(cc: &ChainCover, domain: &GridDomain) -> AchievedConstants {
    let dilated: Vec<Cube> = cc.cubes.iter().map(|c| c.dilate(cc.sigma1)).collect();
    let mut containment: f64 = 1.0;
    let mut ball_ratio: f64 = 1.0;
    for (chain, balls) in cc.chains.iter().zip(&cc.overlap_balls) {
        for l1 in 0..chain.len() {
            for l2 in l1..chain.len() {
                containment = containment.max(cc.cubes[chain[l1]].containment_ratio(&cc.cubes[chain[l2]]));
            }
        }
        for (l, b) in balls.iter().enumerate() {
            let r = cc.cubes[chain[l]]
                .containment_ratio(b)
                .max(cc.cubes[chain[l + 1]].containment_ratio(b));
            ball_ratio = ball_ratio.max(r);
        }
    }
    AchievedConstants {
        overlap: count_overlap(domain, &dilated),
        containment,
        ball_ratio,
        ball_overlap: count_overlap(domain, &distinct_balls(cc)),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainCheckReport {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub balls_ok: bool,
    pub diam_ok: bool,
    pub sigma1: f64,
    pub sigma2: f64,
    pub achieved: AchievedConstants,
    /// Cover elements whose σ₁-dilation leaves the domain.
    pub offending_c1: Vec<usize>,
    /// Domain cells not covered by any W_i.
    pub uncovered: usize,
    pub num_cubes: usize,
    pub diam_domain: f64,
    pub diam_central: f64,
}

impl ChainCheckReport {
    pub fn all_pass(&self) -> bool {
        self.c1 && self.c2 && self.c3 && self.balls_ok && self.diam_ok
    }
}

/// Checks (C1)–(C3) and the overlap-ball conditions against the recorded σ₁, σ₂.
pub fn check_chain_properties(cc: &ChainCover, domain: &GridDomain) -> ChainCheckReport {
    let g = &domain.grid;
    let tol = 1e-12;
    let ach = achieved_constants(cc, domain);
    let mut offending = Vec::new();
    for (i, w) in cc.cubes.iter().enumerate() {
        let ok = w.dilate(cc.sigma1).cells().into_iter().all(|(a, b)| domain.inside(a, b));
        if !ok {
            offending.push(i);
        }
    }
    let mut covered = vec![false; g.len()];
    for w in &cc.cubes {
        for (i, j) in w.cells() {
            if let Some((a, b)) = domain.wrap(i, j) {
                covered[g.index(a, b)] = true;
            }
        }
    }
    let uncovered = domain.cells().into_iter().filter(|&c| !covered[c]).count();
    let c1 = offending.is_empty() && uncovered == 0 && ach.overlap <= cc.sigma2 + tol;

    let mut c2 = ach.containment <= cc.sigma2 + tol && ach.ball_ratio <= cc.sigma2 + tol;
    for (i, (chain, balls)) in cc.chains.iter().zip(&cc.overlap_balls).enumerate() {
        c2 &= chain.first() == Some(&i) && chain.last() == Some(&0) && balls.len() + 1 == chain.len();
        for (l, b) in balls.iter().enumerate() {
            // The ball lies in both neighbours and contains at least one lattice point.
            let (wa, wb) = (&cc.cubes[chain[l]], &cc.cubes[chain[l + 1]]);
            c2 &= b.containment_ratio(wa) <= 1.0 + tol && b.containment_ratio(wb) <= 1.0 + tol;
            c2 &= !b.cells().is_empty();
        }
    }
    let balls_ok = ach.ball_overlap <= cc.sigma2 + tol;
    let diam_central = cc.cubes[0].side() * std::f64::consts::SQRT_2 * cc.h;
    let diam_ok = domain.diam <= cc.sigma2 * diam_central + tol;
    ChainCheckReport {
        c1,
        c2,
        c3: !cc.cubes.is_empty(),
        balls_ok,
        diam_ok,
        sigma1: cc.sigma1,
        sigma2: cc.sigma2,
        achieved: ach,
        offending_c1: offending,
        uncovered,
        num_cubes: cc.cubes.len(),
        diam_domain: domain.diam,
        diam_central,
    }
}
