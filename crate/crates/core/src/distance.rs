//! Finsler distance fields by multi-source Dijkstra on a k-neighbour stencil
//! graph whose edge weights are quadrature lengths of the straight edges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDomain, ScalarField};
use crate::norm::NormField;
use crate::path::Quadrature;

/// Neighbour offsets of the 2-D stencil graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Stencil {
    Eight,
    #[default]
    Sixteen,
    ThirtyTwo,
}

const OFFSETS: [(i64, i64); 32] = [
    (1, 0),
    (-1, 0),
    (0, 1),
    (0, -1),
    (1, 1),
    (-1, 1),
    (1, -1),
    (-1, -1),
    (2, 1),
    (-2, 1),
    (2, -1),
    (-2, -1),
    (1, 2),
    (-1, 2),
    (1, -2),
    (-1, -2),
    (3, 1),
    (-3, 1),
    (3, -1),
    (-3, -1),
    (1, 3),
    (-1, 3),
    (1, -3),
    (-1, -3),
    (3, 2),
    (-3, 2),
    (3, -2),
    (-3, -2),
    (2, 3),
    (-2, 3),
    (2, -3),
    (-2, -3),
];

impl Stencil {
    pub fn from_order(k: usize) -> Result<Self> {
        match k {
            8 => Ok(Stencil::Eight),
            16 => Ok(Stencil::Sixteen),
            32 => Ok(Stencil::ThirtyTwo),
            _ => Err(Error::Input(format!("stencil order {k} is not one of 8, 16, 32"))),
        }
    }

    pub fn order(self) -> usize {
        match self {
            Stencil::Eight => 8,
            Stencil::Sixteen => 16,
            Stencil::ThirtyTwo => 32,
        }
    }

    pub fn offsets(self) -> &'static [(i64, i64)] {
        &OFFSETS[..self.order()]
    }

    /// Worst ratio of stencil-path length to straight length for a constant
    /// Euclidean norm on a square grid: `1 / cos(gap / 2)` for the widest
    /// angular gap between stencil directions.
    pub fn anisotropy_factor(self) -> f64 {
        let mut angles: Vec<f64> = self.offsets().iter().map(|&(a, b)| (b as f64).atan2(a as f64).rem_euclid(std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let mut gap: f64 = std::f64::consts::TAU - angles[angles.len() - 1] + angles[0];
        for w in angles.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        1.0 / (0.5 * gap).cos()
    }
}

/// Target of the stencil edge from `from` along `(a, b)` if it is usable: both
/// endpoints active and every node around the edge midpoint active, so edges
/// never cut across masked-out regions.
pub fn stencil_edge(grid: &GridDomain, from: usize, (a, b): (i64, i64)) -> Option<usize> {
    let to = grid.offset(from, a, b)?;
    if !grid.is_active(from) || !grid.is_active(to) {
        return None;
    }
    let (i, j) = grid.ij(from);
    let (mi, mj) = (2 * i as i64 + a, 2 * j as i64 + b);
    for ci in [mi.div_euclid(2), (mi + 1).div_euclid(2)] {
        for cj in [mj.div_euclid(2), (mj + 1).div_euclid(2)] {
            if !grid.is_active(grid.index(ci as usize, cj as usize)) {
                return None;
            }
        }
    }
    Some(to)
}

/// Length of the straight edge from `from` along `(a, b)`.
pub fn edge_length(nf: &NormField, grid: &GridDomain, from: usize, (a, b): (i64, i64), rule: Quadrature) -> Result<f64> {
    let p = grid.point(from);
    let [hx, hy] = grid.spacing();
    let d = [a as f64 * hx, b as f64 * hy];
    let at = |s: f64| -> Result<f64> { Ok(nf.at(&[p[0] + s * d[0], p[1] + s * d[1]])?.norm(&d)) };
    match rule {
        Quadrature::Midpoint => at(0.5),
        Quadrature::Simpson => Ok((at(0.0)? + 4.0 * at(0.5)? + at(1.0)?) / 6.0),
    }
}

/// The weighted stencil graph of a grid, built once and reused for many
/// Dijkstra runs.
#[derive(Debug, Clone)]
pub struct StencilGraph {
    grid: GridDomain,
    stencil: Stencil,
    start: Vec<usize>,
    edges: Vec<(usize, f64)>,
}

#[derive(Copy, Clone, PartialEq)]
struct Entry {
    value: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on (value, node index)
    fn cmp(&self, other: &Self) -> Ordering {
        other.value.total_cmp(&self.value).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl StencilGraph {
    pub fn new(nf: &NormField, grid: &GridDomain, stencil: Stencil) -> Result<Self> {
        Self::with_rule(nf, grid, stencil, Quadrature::Midpoint)
    }

    pub fn with_rule(nf: &NormField, grid: &GridDomain, stencil: Stencil, rule: Quadrature) -> Result<Self> {
        if nf.dim() != 2 {
            return Err(Error::Input("stencil graphs need a two-dimensional norm field".into()));
        }
        let mut start = Vec::with_capacity(grid.len() + 1);
        let mut edges = Vec::with_capacity(grid.len() * stencil.order());
        for n in 0..grid.len() {
            start.push(edges.len());
            for &off in stencil.offsets() {
                if let Some(m) = stencil_edge(grid, n, off) {
                    edges.push((m, edge_length(nf, grid, n, off, rule)?));
                }
            }
        }
        start.push(edges.len());
        Ok(Self { grid: grid.clone(), stencil, start, edges })
    }

    pub fn grid(&self) -> &GridDomain {
        &self.grid
    }

    pub fn stencil(&self) -> Stencil {
        self.stencil
    }

    pub fn neighbours(&self, n: usize) -> &[(usize, f64)] {
        &self.edges[self.start[n]..self.start[n + 1]]
    }

    /// Multi-source Dijkstra. Seed nodes keep their seed value (the smallest,
    /// when a node is seeded twice) and are never relaxed.
    pub fn distances(&self, seeds: &[(usize, f64)]) -> Result<DistanceField> {
        self.distances_within(seeds, f64::INFINITY)
    }

    /// As [`distances`](Self::distances) but stops once every node with value
    /// `<= limit` is settled; farther nodes stay at `+inf`.
    pub fn distances_within(&self, seeds: &[(usize, f64)], limit: f64) -> Result<DistanceField> {
        if seeds.is_empty() {
            return Err(Error::Input("distance field needs at least one seed".into()));
        }
        let n = self.grid.len();
        let mut value = vec![f64::INFINITY; n];
        let mut fixed = vec![false; n];
        for &(node, v) in seeds {
            if node >= n || !self.grid.is_active(node) {
                return Err(Error::Input(format!("seed node {node} is not an interior or boundary node")));
            }
            if !v.is_finite() {
                return Err(Error::Input(format!("seed value {v} at node {node} is not finite")));
            }
            fixed[node] = true;
            value[node] = value[node].min(v);
        }
        let mut heap: BinaryHeap<Entry> = (0..n).filter(|&i| fixed[i]).map(|i| Entry { value: value[i], node: i }).collect();
        let mut done = vec![false; n];
        while let Some(Entry { value: d, node }) = heap.pop() {
            if done[node] || d > value[node] {
                continue;
            }
            if d > limit {
                break;
            }
            done[node] = true;
            for &(m, w) in self.neighbours(node) {
                if fixed[m] || done[m] {
                    continue;
                }
                let cand = d + w;
                if cand < value[m] {
                    value[m] = cand;
                    heap.push(Entry { value: cand, node: m });
                }
            }
        }
        if limit.is_finite() {
            for (v, d) in value.iter_mut().zip(&done) {
                if !d {
                    *v = f64::INFINITY;
                }
            }
        }
        let unreachable = if limit.is_finite() { Vec::new() } else { (0..n).filter(|&i| self.grid.is_active(i) && !value[i].is_finite()).collect() };
        Ok(DistanceField { seeds: seeds.to_vec(), values: ScalarField::new(&self.grid, value)?, stencil: self.stencil, unreachable })
    }

    /// Distance from one node to all others.
    pub fn from_node(&self, node: usize) -> Result<DistanceField> {
        self.distances(&[(node, 0.0)])
    }
}

/// Output of a multi-source distance computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceField {
    pub seeds: Vec<(usize, f64)>,
    pub values: ScalarField,
    pub stencil: Stencil,
    /// Active nodes no seed can reach; their value is `+inf`.
    pub unreachable: Vec<usize>,
}

impl DistanceField {
    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    /// Nodes with value `<= r`.
    pub fn metric_ball(&self, r: f64) -> Vec<usize> {
        self.values.values().iter().enumerate().filter(|(_, &v)| v <= r).map(|(i, _)| i).collect()
    }
}

/// `node -> min over seeds of (seed value + graph distance)`.
pub fn distance_field(nf: &NormField, grid: &GridDomain, seeds: &[(usize, f64)], stencil: Stencil) -> Result<DistanceField> {
    StencilGraph::new(nf, grid, stencil)?.distances(seeds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Bounds;

    #[test]
    fn anisotropy_factors() {
        assert!((Stencil::Eight.anisotropy_factor() - 1.0 / (std::f64::consts::PI / 8.0).cos()).abs() < 1e-12);
        let f16 = Stencil::Sixteen.anisotropy_factor();
        assert!((f16 - 1.0 / (0.5 * 0.5f64.atan()).cos()).abs() < 1e-12, "{f16}");
        assert!(Stencil::ThirtyTwo.anisotropy_factor() < f16);
    }

    #[test]
    fn seeds_are_kept_exactly() {
        let g = GridDomain::rectangle(Bounds::square(0.0, 1.0), 11, 11).unwrap();
        let nf = NormField::euclidean(g.bounds().clone());
        let df = distance_field(&nf, &g, &[(0, 0.25), (60, 3.0), (60, 2.0)], Stencil::Sixteen).unwrap();
        assert_eq!(df.value(0), 0.25);
        assert_eq!(df.value(60), 2.0);
        assert!(df.unreachable.is_empty());
    }

    #[test]
    fn unreachable_nodes_are_flagged() {
        // two disks far apart; a seed in one never reaches the other
        let g =
            GridDomain::masked(Bounds::square(0.0, 1.0), 21, 21, |x| (x[0] - 0.2).hypot(x[1] - 0.5) < 0.15 || (x[0] - 0.8).hypot(x[1] - 0.5) < 0.15)
                .unwrap();
        let nf = NormField::euclidean(g.bounds().clone());
        let seed = g.nearest_node(&[0.2, 0.5]).unwrap();
        let df = distance_field(&nf, &g, &[(seed, 0.0)], Stencil::Eight).unwrap();
        assert!(!df.unreachable.is_empty());
        let far = g.nearest_node(&[0.8, 0.5]).unwrap();
        assert!(df.unreachable.contains(&far));
        assert!(df.value(far).is_infinite());
    }

    #[test]
    fn bad_seeds_are_rejected() {
        let g = GridDomain::rectangle(Bounds::square(0.0, 1.0), 5, 5).unwrap();
        let nf = NormField::euclidean(g.bounds().clone());
        assert!(distance_field(&nf, &g, &[], Stencil::Eight).is_err());
        assert!(distance_field(&nf, &g, &[(99, 0.0)], Stencil::Eight).is_err());
    }

    #[test]
    fn metric_ball_extremes() {
        let g = GridDomain::rectangle(Bounds::square(0.0, 1.0), 21, 21).unwrap();
        let nf = NormField::euclidean(g.bounds().clone());
        let df = distance_field(&nf, &g, &[(0, 0.0), (440, 0.0)], Stencil::Sixteen).unwrap();
        assert_eq!(df.metric_ball(0.0), vec![0, 440]);
        let top = df.values.max_finite().unwrap();
        assert_eq!(df.metric_ball(top).len(), g.len());
    }

    #[test]
    fn bounded_search_matches_full_inside_limit() {
        let g = GridDomain::rectangle(Bounds::square(0.0, 1.0), 31, 31).unwrap();
        let nf = NormField::diagonal(g.bounds().clone(), |x| vec![1.0 + x[0], 2.0]);
        let graph = StencilGraph::new(&nf, &g, Stencil::Sixteen).unwrap();
        let full = graph.from_node(480).unwrap();
        let part = graph.distances_within(&[(480, 0.0)], 0.3).unwrap();
        for n in 0..g.len() {
            if full.value(n) <= 0.3 {
                assert_eq!(full.value(n), part.value(n));
            } else {
                assert!(part.value(n).is_infinite());
            }
        }
    }
}
