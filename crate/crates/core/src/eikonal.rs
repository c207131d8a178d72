//! The Dirichlet eikonal problem `||du||_x = 1` in the interior, `u = h` on
//! the boundary node set, solved by the inf-convolution
//! `u(x) = min_y (h(y) + d(y, x))` and checked against the viscosity
//! solution properties.

use serde::{Deserialize, Serialize};

use crate::distance::{Stencil, StencilGraph};
use crate::error::{Error, LipschitzWitness, Result};
use crate::grid::{GridDomain, ScalarField};
use crate::norm::NormField;
use crate::report::{Relation, VerificationReport, Witness};
use crate::subdiff::{self, SubdiffProbe};

/// Values on the boundary node set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub entries: Vec<(usize, f64)>,
}

impl BoundaryData {
    pub fn new(entries: Vec<(usize, f64)>) -> Self {
        Self { entries }
    }

    pub fn constant(grid: &GridDomain, c: f64) -> Self {
        Self::from_fn(grid, |_| c)
    }

    pub fn from_fn(grid: &GridDomain, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self { entries: grid.boundary().iter().map(|&b| (b, f(grid.point(b)))).collect() }
    }

    /// Adds `c` to every value.
    pub fn shifted(&self, c: f64) -> Self {
        Self { entries: self.entries.iter().map(|&(n, v)| (n, v + c)).collect() }
    }

    /// Checks that the entries cover exactly the boundary node set with
    /// finite values.
    pub fn check_coverage(&self, grid: &GridDomain) -> Result<()> {
        let mut seen = vec![false; grid.len()];
        for &(n, v) in &self.entries {
            if n >= grid.len() || grid.role(n) != crate::grid::NodeRole::Boundary {
                return Err(Error::Input(format!("boundary data names node {n}, which is not a boundary node")));
            }
            if !v.is_finite() {
                return Err(Error::Input(format!("boundary value at node {n} is not finite")));
            }
            if seen[n] {
                return Err(Error::Input(format!("boundary node {n} is listed twice")));
            }
            seen[n] = true;
        }
        if let Some(&missing) = grid.boundary().iter().find(|&&b| !seen[b]) {
            return Err(Error::Input(format!("boundary data does not cover boundary node {missing}")));
        }
        Ok(())
    }

    /// Pairs `(y, z)` of boundary nodes with `|h(y) - h(z)| > d(y, z)`, for
    /// up to `max_sources` evenly spaced sources against every boundary node.
    pub fn lipschitz_violations(&self, graph: &StencilGraph, max_sources: usize) -> Result<Vec<LipschitzWitness>> {
        let mut out = Vec::new();
        let step = self.entries.len().div_ceil(max_sources.max(1)).max(1);
        for &(y, hy) in self.entries.iter().step_by(step) {
            let dy = graph.from_node(y)?;
            for &(z, hz) in &self.entries {
                if z == y {
                    continue;
                }
                let d = dy.value(z);
                let gap = (hy - hz).abs();
                if gap > d * (1.0 + 1e-9) + 1e-12 {
                    out.push(LipschitzWitness { first: y, second: z, value_gap: gap, distance: d });
                }
            }
        }
        out.sort_by(|a, b| (b.value_gap - b.distance).total_cmp(&(a.value_gap - a.distance)));
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EikonalOptions {
    pub stencil: Stencil,
    /// Solve even when the boundary data is not 1-Lipschitz.
    pub waive_lipschitz: bool,
    pub lipschitz_sources: usize,
}

impl Default for EikonalOptions {
    fn default() -> Self {
        Self { stencil: Stencil::Sixteen, waive_lipschitz: false, lipschitz_sources: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EikonalSolution {
    pub u: ScalarField,
    /// Interior nodes no boundary node reaches; their value is `+inf`.
    pub unreachable: Vec<usize>,
    /// Boundary pairs breaking the 1-Lipschitz requirement (only non-empty
    /// under a waiver).
    pub violations: Vec<LipschitzWitness>,
}

pub fn solve_eikonal(nf: &NormField, g: &GridDomain, h: &BoundaryData, opts: &EikonalOptions) -> Result<EikonalSolution> {
    let graph = StencilGraph::new(nf, g, opts.stencil)?;
    solve_eikonal_on(&graph, h, opts)
}

/// One multi-source Dijkstra seeded with `(y, h(y))` on a prebuilt graph.
pub fn solve_eikonal_on(graph: &StencilGraph, h: &BoundaryData, opts: &EikonalOptions) -> Result<EikonalSolution> {
    let g = graph.grid();
    g.validate()?;
    if g.boundary().is_empty() {
        return Err(Error::Geometry("the domain has no boundary nodes".into()));
    }
    h.check_coverage(g)?;
    let violations = h.lipschitz_violations(graph, opts.lipschitz_sources)?;
    if !violations.is_empty() && !opts.waive_lipschitz {
        return Err(Error::NotLipschitz { witnesses: violations });
    }
    let df = graph.distances(&h.entries)?;
    let mut u = df.values;
    for v in u.values_mut().iter_mut().enumerate().filter(|(n, _)| !g.is_active(*n)).map(|(_, v)| v) {
        *v = f64::INFINITY;
    }
    let unreachable = df.unreachable.into_iter().filter(|&n| g.is_interior(n)).collect();
    Ok(EikonalSolution { u, unreachable, violations })
}

/// Slack constant and sampling sizes for [`verify_eikonal`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EikonalCheck {
    pub c: f64,
    pub lipschitz_sources: usize,
}

impl Default for EikonalCheck {
    fn default() -> Self {
        Self { c: 5.0, lipschitz_sources: 40 }
    }
}

/// Boundary agreement, global 1-Lipschitz bound, gradient norms at
/// differentiable nodes and subgradient norms at kinks, in one report.
pub fn verify_eikonal(u: &ScalarField, nf: &NormField, g: &GridDomain, h: &BoundaryData) -> Result<VerificationReport> {
    let graph = StencilGraph::new(nf, g, Stencil::Sixteen)?;
    let opts = EikonalCheck::default();
    let mut r = VerificationReport::new("eikonal", opts.c);
    boundary_criteria(&mut r, u, g, h)?;
    lipschitz_criteria(&mut r, u, &graph, &opts)?;
    gradient_criteria(&mut r, u, nf, g, &opts)?;
    Ok(r)
}

pub fn check_boundary(u: &ScalarField, g: &GridDomain, h: &BoundaryData) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("eikonal-boundary", 0.0);
    boundary_criteria(&mut r, u, g, h)?;
    Ok(r)
}

pub fn check_lipschitz(u: &ScalarField, graph: &StencilGraph, opts: &EikonalCheck) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("eikonal-lipschitz", opts.c);
    lipschitz_criteria(&mut r, u, graph, opts)?;
    Ok(r)
}

pub fn check_gradient(u: &ScalarField, nf: &NormField, g: &GridDomain, opts: &EikonalCheck) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("eikonal-gradient", opts.c);
    gradient_criteria(&mut r, u, nf, g, opts)?;
    Ok(r)
}

fn fits(u: &ScalarField, g: &GridDomain) -> Result<()> {
    if !u.fits(g) {
        return Err(Error::Input(format!("field is {}x{}, grid is {}x{}", u.nx(), u.ny(), g.nx(), g.ny())));
    }
    Ok(())
}

fn boundary_criteria(r: &mut VerificationReport, u: &ScalarField, g: &GridDomain, h: &BoundaryData) -> Result<()> {
    fits(u, g)?;
    let mut worst: f64 = 0.0;
    for &(n, v) in &h.entries {
        let err = (u[n] - v).abs();
        if err > 0.0 || err.is_nan() {
            r.witness(Witness::node(n, vec![u[n], v]));
        }
        worst = worst.max(if err.is_nan() { f64::INFINITY } else { err });
    }
    r.criterion("boundary_error", worst, 0.0, Relation::Le);
    Ok(())
}

fn lipschitz_criteria(r: &mut VerificationReport, u: &ScalarField, graph: &StencilGraph, opts: &EikonalCheck) -> Result<()> {
    let g = graph.grid();
    fits(u, g)?;
    let bound = 1.0 + opts.c * g.h();
    let nodes: Vec<usize> = (0..g.len()).filter(|&n| g.is_active(n) && u[n].is_finite()).collect();
    let step = nodes.len().div_ceil(opts.lipschitz_sources.max(1)).max(1);
    let mut measured: f64 = 0.0;
    let mut bad = Vec::new();
    for &x in nodes.iter().step_by(step) {
        let dx = graph.from_node(x)?;
        for &y in &nodes {
            let d = dx.value(y);
            if y == x || !(d > 0.0) || !d.is_finite() {
                continue;
            }
            let ratio = (u[x] - u[y]).abs() / d;
            measured = measured.max(ratio);
            if ratio > bound {
                bad.push((ratio, x, y));
            }
        }
    }
    bad.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (ratio, x, y) in bad {
        r.witness(Witness::pair(x, y, ratio));
    }
    r.criterion("lipschitz", measured, bound, Relation::Le);
    Ok(())
}

fn gradient_criteria(r: &mut VerificationReport, u: &ScalarField, nf: &NormField, g: &GridDomain, opts: &EikonalCheck) -> Result<()> {
    fits(u, g)?;
    let slack = opts.c * g.h();
    let usable: Vec<usize> = g.interior_nodes().filter(|&n| u[n].is_finite()).collect();
    // A gradient passing both probes is within the slack of every local
    // slope, so the slack must sit inside the tested window.
    let probe = SubdiffProbe::new(g, 2.0 * g.h(), 0.5 * slack)?;
    let (mut grad_min, mut grad_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut kink_min = f64::INFINITY;
    let (mut smooth, mut kinks) = (0usize, 0usize);
    for &x in &usable {
        let Ok(ball) = subdiff::probe_ball(g, x, probe.radius) else { continue };
        if ball.iter().any(|&y| !u[y].is_finite()) {
            continue;
        }
        let local = nf.at(&g.point(x))?;
        let d = subdiff::differentiability(u, nf, g, x, &probe)?;
        if let Some(grad) = d.gradient {
            smooth += 1;
            let n = local.dual(&grad.components);
            if n < 1.0 - slack || n > 1.0 + slack {
                r.witness(Witness::node(x, vec![u[x], n]));
            }
            grad_min = grad_min.min(n);
            grad_max = grad_max.max(n);
        } else {
            kinks += 1;
            for cand in subdiff::passing_subdifferentials(u, g, x, &probe)? {
                let n = local.dual(&cand.components);
                if n < 1.0 - slack {
                    r.witness(Witness::node(x, vec![u[x], n]));
                }
                kink_min = kink_min.min(n);
            }
        }
    }
    r.criterion("gradient_min", grad_min, 1.0 - slack, Relation::Ge);
    r.criterion("gradient_max", grad_max, 1.0 + slack, Relation::Le);
    r.criterion("kink_subgradient_min", kink_min, 1.0 - slack, Relation::Ge);
    r.note("differentiable_nodes", smooth as f64);
    r.note("kink_nodes", kinks as f64);
    r.note("probe_slack", probe.slack);
    Ok(())
}

/// Threshold on the dual norm of the concave slope jump.
pub const RIDGE_THRESHOLD: f64 = 1.0;

/// Length, in grid steps, of the one-sided difference arms.
pub const RIDGE_ARM: i64 = 2;

/// Interior nodes where the backward and forward differences disagree in
/// the concave direction. With `D-_i` and `D+_i` taken over arms of
/// [`RIDGE_ARM`] steps and `J_i = max(D-_i u - D+_i u, 0)`, a node is a ridge
/// node when the dual norm of `J` exceeds [`RIDGE_THRESHOLD`]. The two-step
/// arms average out the small kinks the stencil metric leaves near a
/// staircase boundary; nodes whose arms leave the interior are skipped.
pub fn ridge_diagnostic(u: &ScalarField, nf: &NormField, g: &GridDomain) -> Result<Vec<usize>> {
    fits(u, g)?;
    let h = g.spacing();
    let mut out = Vec::new();
    for x in g.interior_nodes() {
        if !u[x].is_finite() || !deep_inside(g, x) {
            continue;
        }
        let mut jump = [0.0; 2];
        for (axis, slot) in jump.iter_mut().enumerate() {
            let (di, dj) = if axis == 0 { (RIDGE_ARM, 0) } else { (0, RIDGE_ARM) };
            let (a, b) = match (g.offset(x, -di, -dj), g.offset(x, di, dj)) {
                (Some(a), Some(b)) => (a, b),
                _ => unreachable!("deep_inside checked the arms"),
            };
            let arm = RIDGE_ARM as f64 * h[axis];
            *slot = ((u[x] - u[a]) / arm - (u[b] - u[x]) / arm).max(0.0);
        }
        if jump.iter().all(|j| j.is_finite()) && nf.at(&g.point(x))?.dual(&jump) > RIDGE_THRESHOLD {
            out.push(x);
        }
    }
    Ok(out)
}

fn deep_inside(g: &GridDomain, x: usize) -> bool {
    (-RIDGE_ARM..=RIDGE_ARM).all(|dj| (-RIDGE_ARM..=RIDGE_ARM).all(|di| g.offset(x, di, dj).is_some_and(|y| g.is_interior(y))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Bounds;

    fn disk(n: usize) -> GridDomain {
        GridDomain::masked(Bounds::square(-1.1, 1.1), n, n, |x| x[0].hypot(x[1]) < 1.0).unwrap()
    }

    #[test]
    fn boundary_values_are_kept_exactly() {
        let g = disk(41);
        let nf = NormField::euclidean(g.bounds().clone());
        let h = BoundaryData::from_fn(&g, |x| 0.3 * x[0]);
        let sol = solve_eikonal(&nf, &g, &h, &EikonalOptions::default()).unwrap();
        for &(n, v) in &h.entries {
            assert_eq!(sol.u[n], v);
        }
        assert!(sol.unreachable.is_empty());
    }

    #[test]
    fn non_lipschitz_data_needs_waiver() {
        let g = GridDomain::square_with_boundary(0.0, 1.0, 21).unwrap();
        let nf = NormField::euclidean(g.bounds().clone());
        let h = BoundaryData::from_fn(&g, |x| 3.0 * x[0]);
        match solve_eikonal(&nf, &g, &h, &EikonalOptions::default()) {
            Err(Error::NotLipschitz { witnesses }) => {
                let w = &witnesses[0];
                assert!(w.value_gap > w.distance);
            }
            other => panic!("expected a Lipschitz error, got {other:?}"),
        }
        let opts = EikonalOptions { waive_lipschitz: true, ..Default::default() };
        let sol = solve_eikonal(&nf, &g, &h, &opts).unwrap();
        assert!(!sol.violations.is_empty());
    }

    #[test]
    fn coverage_is_checked() {
        let g = GridDomain::square_with_boundary(0.0, 1.0, 11).unwrap();
        let nf = NormField::euclidean(g.bounds().clone());
        let mut h = BoundaryData::constant(&g, 0.0);
        h.entries.pop();
        assert!(matches!(solve_eikonal(&nf, &g, &h, &EikonalOptions::default()), Err(Error::Input(_))));
        let bad = BoundaryData::new(vec![(g.index(5, 5), 0.0)]);
        assert!(bad.check_coverage(&g).is_err());
    }

    #[test]
    fn rectangle_without_boundary_is_rejected() {
        let g = GridDomain::rectangle(Bounds::square(0.0, 1.0), 11, 11).unwrap();
        let nf = NormField::euclidean(g.bounds().clone());
        let h = BoundaryData::new(vec![]);
        assert!(matches!(solve_eikonal(&nf, &g, &h, &EikonalOptions::default()), Err(Error::Geometry(_))));
    }

    #[test]
    fn square_ridge_hugs_diagonals() {
        let g = GridDomain::square_with_boundary(0.0, 1.0, 41).unwrap();
        let nf = NormField::euclidean(g.bounds().clone());
        let sol = solve_eikonal(&nf, &g, &BoundaryData::constant(&g, 0.0), &EikonalOptions::default()).unwrap();
        let ridge = ridge_diagnostic(&sol.u, &nf, &g).unwrap();
        assert!(!ridge.is_empty());
        for n in ridge {
            let (i, j) = g.ij(n);
            let (i, j) = (i as i64, j as i64);
            let off = (i - j).abs().min((i + j - 40).abs());
            assert!(off <= 1, "ridge node ({i}, {j}) is off the diagonals");
        }
    }
}
