//! Upwind difference covector shared by the sweeping and time-marching
//! schemes.

use crate::grid::GridDomain;
use crate::norm::LocalNorm;

/// Per-axis upwind data at a node: the smaller usable neighbour value along
/// each axis and the sign of the side it sits on.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Upwind {
    pub(crate) min: [f64; 2],
    pub(crate) sign: [f64; 2],
    pub(crate) h: [f64; 2],
}

impl Upwind {
    /// Neighbours outside the grid or failing `usable` are ignored.
    pub(crate) fn gather(grid: &GridDomain, values: &[f64], node: usize, usable: impl Fn(usize) -> bool) -> Self {
        let h = grid.spacing();
        let mut min = [f64::INFINITY; 2];
        let mut sign = [1.0; 2];
        for axis in 0..2 {
            let (di, dj) = if axis == 0 { (1, 0) } else { (0, 1) };
            let back = grid.offset(node, -di, -dj).filter(|&m| usable(m)).map(|m| values[m]);
            let fwd = grid.offset(node, di, dj).filter(|&m| usable(m)).map(|m| values[m]);
            match (back, fwd) {
                (Some(b), Some(f)) if f < b => {
                    min[axis] = f;
                    sign[axis] = -1.0;
                }
                (Some(b), _) => min[axis] = b,
                (None, Some(f)) => {
                    min[axis] = f;
                    sign[axis] = -1.0;
                }
                (None, None) => {}
            }
        }
        Self { min, sign, h }
    }

    /// Upwind covector for a trial value `v` at the node: component `i` is
    /// `sign_i * max(v - min_i, 0) / h_i`.
    pub(crate) fn covector(&self, v: f64) -> [f64; 2] {
        std::array::from_fn(|i| {
            let gap = v - self.min[i];
            if gap > 0.0 {
                self.sign[i] * gap / self.h[i]
            } else {
                0.0
            }
        })
    }

    /// `P(v)`: dual norm of the upwind covector.
    pub(crate) fn magnitude(&self, local: &LocalNorm, v: f64) -> f64 {
        local.dual(&self.covector(v))
    }

    pub(crate) fn lowest(&self) -> f64 {
        self.min[0].min(self.min[1])
    }
}
