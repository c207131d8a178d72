//! Uniform Cartesian grids, node roles and grid-sampled scalar fields.
//!
//! Nodes are stored row-major: index `j * nx + i`, where `i` runs along the
//! first coordinate axis.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Axis-aligned box `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return input("bounds need matching, non-empty lower and upper corners");
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return input(format!("degenerate bounds {lo:?} .. {hi:?}"));
        }
        Ok(Self { lo, hi })
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Self::new(vec![lo, lo], vec![hi, hi]).expect("valid square")
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Membership with a relative slack of 1e-12 of the box extent.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(&xi, (&a, &b))| {
                let slack = 1e-12 * (b - a).max(1.0);
                xi >= a - slack && xi <= b + slack
            })
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain { point: x.to_vec() })
        }
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    Interior,
    Boundary,
    Outside,
}

/// Uniform 2-D grid over a rectangle, with an interior mask and the boundary
/// node set (masked-out nodes touching the interior).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    bounds: Bounds,
    nx: usize,
    ny: usize,
    h: [f64; 2],
    roles: Vec<NodeRole>,
    boundary: Vec<usize>,
}

const RING8: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl GridDomain {
    /// The full rectangle; every node is interior and there is no boundary set.
    pub fn rectangle(bounds: Bounds, nx: usize, ny: usize) -> Result<Self> {
        Self::build(bounds, nx, ny, |_| true, false)
    }

    /// Nodes where `inside` holds form the interior, except nodes on the edge
    /// of the rectangle, which become boundary nodes when they are inside.
    /// Masked-out nodes 8-adjacent to the interior form the boundary.
    pub fn masked(bounds: Bounds, nx: usize, ny: usize, inside: impl Fn([f64; 2]) -> bool) -> Result<Self> {
        Self::build(bounds, nx, ny, inside, true)
    }

    /// Unit-style square `[lo, hi]^2` whose edge nodes form the boundary.
    pub fn square_with_boundary(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::masked(Bounds::square(lo, hi), n, n, |_| true)
    }

    fn build(bounds: Bounds, nx: usize, ny: usize, inside: impl Fn([f64; 2]) -> bool, edge_is_boundary: bool) -> Result<Self> {
        if bounds.dim() != 2 {
            return input("grid domains are two-dimensional");
        }
        if nx < 3 || ny < 3 {
            return input(format!("resolution {nx}x{ny} is too coarse (need at least 3 per axis)"));
        }
        let h = [(bounds.hi[0] - bounds.lo[0]) / (nx - 1) as f64, (bounds.hi[1] - bounds.lo[1]) / (ny - 1) as f64];
        let mut grid = Self { bounds, nx, ny, h, roles: vec![NodeRole::Outside; nx * ny], boundary: Vec::new() };
        for j in 0..ny {
            for i in 0..nx {
                let on_edge = i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
                let idx = grid.index(i, j);
                if inside(grid.point(idx)) && !(edge_is_boundary && on_edge) {
                    grid.roles[idx] = NodeRole::Interior;
                }
            }
        }
        for idx in 0..nx * ny {
            if grid.roles[idx] != NodeRole::Outside {
                continue;
            }
            let touches = grid.ring8(idx).any(|n| grid.roles[n] == NodeRole::Interior);
            if touches {
                grid.roles[idx] = NodeRole::Boundary;
                grid.boundary.push(idx);
            }
        }
        Ok(grid)
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.h
    }

    /// Largest spacing; the `h` used in discretization tolerances.
    pub fn h(&self) -> f64 {
        self.h[0].max(self.h[1])
    }

    pub fn h_min(&self) -> f64 {
        self.h[0].min(self.h[1])
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn point(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        [self.bounds.lo[0] + i as f64 * self.h[0], self.bounds.lo[1] + j as f64 * self.h[1]]
    }

    pub fn role(&self, idx: usize) -> NodeRole {
        self.roles[idx]
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        self.roles[idx] == NodeRole::Interior
    }

    /// Interior or boundary: the nodes that carry values.
    pub fn is_active(&self, idx: usize) -> bool {
        self.roles[idx] != NodeRole::Outside
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn interior_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&n| self.is_interior(n))
    }

    /// Node reached by the integer offset `(di, dj)`, if it exists.
    pub fn offset(&self, idx: usize, di: i64, dj: i64) -> Option<usize> {
        let (i, j) = self.ij(idx);
        let (ni, nj) = (i as i64 + di, j as i64 + dj);
        if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
            None
        } else {
            Some(self.index(ni as usize, nj as usize))
        }
    }

    pub(crate) fn ring8(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        RING8.iter().filter_map(move |&(di, dj)| self.offset(idx, di, dj))
    }

    /// Nearest node to `x`.
    pub fn nearest_node(&self, x: &[f64]) -> Result<usize> {
        self.bounds.check(x)?;
        let i = ((x[0] - self.bounds.lo[0]) / self.h[0]).round().clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((x[1] - self.bounds.lo[1]) / self.h[1]).round().clamp(0.0, (self.ny - 1) as f64) as usize;
        Ok(self.index(i, j))
    }

    /// True for nodes whose distance to the rectangle edge is at least
    /// `fraction` of the extent along each axis (the verification window).
    pub fn in_core(&self, idx: usize, fraction: f64) -> bool {
        let (i, j) = self.ij(idx);
        let fi = fraction * (self.nx - 1) as f64;
        let fj = fraction * (self.ny - 1) as f64;
        i as f64 >= fi && j as f64 >= fj && (self.nx - 1 - i) as f64 >= fi && (self.ny - 1 - j) as f64 >= fj
    }

    /// Checks the domain invariants: boundary nodes touch the interior and
    /// every interior node reaches the boundary through interior nodes.
    pub fn validate(&self) -> Result<()> {
        for &b in &self.boundary {
            if !self.ring8(b).any(|n| self.is_interior(n)) {
                return Err(Error::Geometry(format!("boundary node {b} has no interior neighbour")));
            }
        }
        if self.boundary.is_empty() {
            return Ok(());
        }
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = self.boundary.clone();
        for &b in &self.boundary {
            seen[b] = true;
        }
        while let Some(n) = stack.pop() {
            for m in self.ring8(n).collect::<Vec<_>>() {
                if !seen[m] && self.is_interior(m) {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        if let Some(lost) = self.interior_nodes().find(|&n| !seen[n]) {
            return Err(Error::Geometry(format!("interior node {lost} cannot reach the boundary")));
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &GridDomain) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.bounds == other.bounds
    }
}

/// Real values sampled at the nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: &GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return input(format!("field has {} values, grid has {} nodes", values.len(), grid.len()));
        }
        Ok(Self { nx: grid.nx, ny: grid.ny, values })
    }

    pub fn constant(grid: &GridDomain, c: f64) -> Self {
        Self { nx: grid.nx, ny: grid.ny, values: vec![c; grid.len()] }
    }

    pub fn from_fn(grid: &GridDomain, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self { nx: grid.nx, ny: grid.ny, values: (0..grid.len()).map(|n| f(grid.point(n))).collect() }
    }

    pub fn from_nodes(grid: &GridDomain, f: impl Fn(usize) -> f64) -> Self {
        Self { nx: grid.nx, ny: grid.ny, values: (0..grid.len()).map(f).collect() }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn fits(&self, grid: &GridDomain) -> bool {
        self.nx == grid.nx && self.ny == grid.ny
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { nx: self.nx, ny: self.ny, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.nx != other.nx || self.ny != other.ny {
            return input("fields live on different grids");
        }
        Ok(Self { nx: self.nx, ny: self.ny, values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() })
    }

    /// Largest finite value, ignoring NaN and infinities.
    pub fn max_finite(&self) -> Option<f64> {
        self.values.iter().copied().filter(|v| v.is_finite()).reduce(f64::max)
    }

    pub fn min_finite(&self) -> Option<f64> {
        self.values.iter().copied().filter(|v| v.is_finite()).reduce(f64::min)
    }
}

impl std::ops::Index<usize> for ScalarField {
    type Output = f64;
    fn index(&self, idx: usize) -> &f64 {
        &self.values[idx]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_boundary_is_the_edge() {
        let g = GridDomain::square_with_boundary(0.0, 1.0, 11).unwrap();
        assert_eq!(g.boundary().len(), 40);
        assert_eq!(g.interior_nodes().count(), 81);
        g.validate().unwrap();
        assert!(!g.is_interior(g.index(0, 5)));
        assert!(g.is_interior(g.index(1, 1)));
    }

    #[test]
    fn disk_boundary_touches_interior() {
        let g = GridDomain::masked(Bounds::square(-1.2, 1.2), 49, 49, |x| x[0] * x[0] + x[1] * x[1] < 1.0).unwrap();
        g.validate().unwrap();
        for &b in g.boundary() {
            let p = g.point(b);
            assert!(p[0].hypot(p[1]) >= 1.0);
            assert!(p[0].hypot(p[1]) < 1.0 + 2.0 * g.h());
        }
    }

    #[test]
    fn rectangle_has_no_boundary() {
        let g = GridDomain::rectangle(Bounds::square(0.0, 1.0), 5, 5).unwrap();
        assert!(g.boundary().is_empty());
        assert_eq!(g.interior_nodes().count(), 25);
        g.validate().unwrap();
    }

    #[test]
    fn nearest_node_rounds_and_checks_bounds() {
        let g = GridDomain::rectangle(Bounds::square(0.0, 1.0), 11, 11).unwrap();
        assert_eq!(g.nearest_node(&[0.31, 0.0]).unwrap(), g.index(3, 0));
        assert!(matches!(g.nearest_node(&[1.5, 0.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn core_window_excludes_frame() {
        let g = GridDomain::rectangle(Bounds::square(0.0, 1.0), 11, 11).unwrap();
        assert!(!g.in_core(g.index(0, 5), 0.1));
        assert!(g.in_core(g.index(1, 5), 0.1));
        assert!(g.in_core(g.index(5, 5), 0.1));
    }
}
