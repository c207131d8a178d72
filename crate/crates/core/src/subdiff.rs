//! Finite probes for Fréchet sub- and superdifferentials of grid functions,
//! pointwise Lipschitz estimates and the local mean value inequality check.
//!
//! A covector `D` passes the subdifferential probe for `f` at `x` when
//! `f(y) >= f(x) + D(y - x) - eps |y - x|` for every node `y` in the probe
//! ball; the superdifferential probe is the mirrored inequality. `|.|` is the
//! Euclidean chart norm.

use serde::{Deserialize, Serialize};

use crate::distance::{DistanceField, Stencil, StencilGraph};
use crate::error::{Error, Result};
use crate::grid::{GridDomain, ScalarField};
use crate::norm::{Covector, NormField};
use crate::report::{Relation, VerificationReport, Witness};

/// Probe neighbourhood radius and first-order slack.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubdiffProbe {
    pub radius: f64,
    pub slack: f64,
}

/// Slack floor used when the second differences vanish.
const SLACK_FLOOR: f64 = 1e-9;

impl SubdiffProbe {
    pub fn new(grid: &GridDomain, radius: f64, slack: f64) -> Result<Self> {
        if radius < 2.0 * grid.h() * (1.0 - 1e-12) {
            return Err(Error::Probe(format!("probe radius {radius} is below two grid shells ({})", 2.0 * grid.h())));
        }
        if !(slack > 0.0) {
            return Err(Error::Probe(format!("probe slack {slack} must be positive")));
        }
        Ok(Self { radius, slack })
    }

    /// Radius `4h` and slack `10 h S`, where `S` is the median absolute
    /// second difference of `f` over `nodes` (all nodes when `None`).
    pub fn calibrated(f: &ScalarField, grid: &GridDomain, nodes: Option<&[usize]>) -> Self {
        let s = median_second_difference(f, grid, nodes);
        let scale = f.values().iter().filter(|v| v.is_finite()).fold(1.0f64, |m, v| m.max(v.abs()));
        Self { radius: 4.0 * grid.h(), slack: (10.0 * grid.h() * s).max(SLACK_FLOOR * scale) }
    }
}

fn median_second_difference(f: &ScalarField, grid: &GridDomain, nodes: Option<&[usize]>) -> f64 {
    let all: Vec<usize>;
    let nodes = match nodes {
        Some(n) => n,
        None => {
            all = (0..grid.len()).collect();
            &all
        }
    };
    let h = grid.spacing();
    let mut seconds = Vec::new();
    for &n in nodes {
        for (ha, (di, dj)) in h.iter().zip([(1, 0), (0, 1)]) {
            if let (Some(a), Some(b)) = (grid.offset(n, -di, -dj), grid.offset(n, di, dj)) {
                let d2 = (f[a] + f[b] - 2.0 * f[n]) / (ha * ha);
                if d2.is_finite() {
                    seconds.push(d2.abs());
                }
            }
        }
    }
    if seconds.is_empty() {
        return 0.0;
    }
    seconds.sort_by(f64::total_cmp);
    seconds[seconds.len() / 2]
}

/// Nodes `y != x` with `|y - x| <= radius`. Errors when the ball leaves the
/// grid or meets a node carrying no value.
pub fn probe_ball(grid: &GridDomain, x: usize, radius: f64) -> Result<Vec<usize>> {
    let [hx, hy] = grid.spacing();
    let ri = (radius / hx).floor() as i64;
    let rj = (radius / hy).floor() as i64;
    let mut out = Vec::new();
    for dj in -rj..=rj {
        for di in -ri..=ri {
            if di == 0 && dj == 0 {
                continue;
            }
            let dist = (di as f64 * hx).hypot(dj as f64 * hy);
            if dist > radius * (1.0 + 1e-12) {
                continue;
            }
            match grid.offset(x, di, dj) {
                Some(y) if grid.is_active(y) => out.push(y),
                _ => return Err(Error::Probe(format!("probe ball of radius {radius} around node {x} leaves the domain"))),
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Sub,
    Super,
}

fn passes(f: &ScalarField, grid: &GridDomain, x: usize, ball: &[usize], delta: &Covector, slack: f64, side: Side) -> bool {
    let px = grid.point(x);
    let fx = f[x];
    ball.iter().all(|&y| {
        let py = grid.point(y);
        let d = [py[0] - px[0], py[1] - px[1]];
        let r = (f[y] - fx) - (delta.components[0] * d[0] + delta.components[1] * d[1]);
        let allowance = slack * d[0].hypot(d[1]);
        match side {
            Side::Sub => r >= -allowance,
            Side::Super => r <= allowance,
        }
    })
}

/// Does `delta` pass the subdifferential probe for `f` at `x`?
pub fn is_subdifferential(f: &ScalarField, grid: &GridDomain, x: usize, delta: &Covector, probe: &SubdiffProbe) -> Result<bool> {
    interior_check(grid, x)?;
    let ball = probe_ball(grid, x, probe.radius)?;
    Ok(passes(f, grid, x, &ball, delta, probe.slack, Side::Sub))
}

/// Does `delta` pass the superdifferential probe for `f` at `x`?
pub fn is_superdifferential(f: &ScalarField, grid: &GridDomain, x: usize, delta: &Covector, probe: &SubdiffProbe) -> Result<bool> {
    interior_check(grid, x)?;
    let ball = probe_ball(grid, x, probe.radius)?;
    Ok(passes(f, grid, x, &ball, delta, probe.slack, Side::Super))
}

fn interior_check(grid: &GridDomain, x: usize) -> Result<()> {
    if x >= grid.len() || !grid.is_interior(x) {
        return Err(Error::Probe(format!("node {x} is not an interior node")));
    }
    Ok(())
}

/// Candidate covectors at `x`: every combination of backward, forward and
/// central differences per axis (missing neighbours drop their options).
pub fn candidate_covectors(f: &ScalarField, grid: &GridDomain, x: usize) -> Vec<Covector> {
    let h = grid.spacing();
    let mut per_axis: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for (axis, slot) in per_axis.iter_mut().enumerate() {
        let (di, dj) = if axis == 0 { (1, 0) } else { (0, 1) };
        let back = grid.offset(x, -di, -dj).filter(|&m| grid.is_active(m)).map(|m| (f[x] - f[m]) / h[axis]);
        let fwd = grid.offset(x, di, dj).filter(|&m| grid.is_active(m)).map(|m| (f[m] - f[x]) / h[axis]);
        if let (Some(b), Some(a)) = (back, fwd) {
            slot.push(0.5 * (a + b));
        }
        slot.extend(back);
        slot.extend(fwd);
        if slot.is_empty() {
            slot.push(0.0);
        }
    }
    let mut out = Vec::with_capacity(9);
    for &a in &per_axis[0] {
        for &b in &per_axis[1] {
            out.push(Covector::new(vec![a, b]));
        }
    }
    out
}

/// Covectors among the candidates that pass the subdifferential probe.
pub fn passing_subdifferentials(f: &ScalarField, grid: &GridDomain, x: usize, probe: &SubdiffProbe) -> Result<Vec<Covector>> {
    interior_check(grid, x)?;
    let ball = probe_ball(grid, x, probe.radius)?;
    Ok(candidate_covectors(f, grid, x).into_iter().filter(|d| passes(f, grid, x, &ball, d, probe.slack, Side::Sub)).collect())
}

/// Covectors among the candidates that pass the superdifferential probe.
pub fn passing_superdifferentials(f: &ScalarField, grid: &GridDomain, x: usize, probe: &SubdiffProbe) -> Result<Vec<Covector>> {
    interior_check(grid, x)?;
    let ball = probe_ball(grid, x, probe.radius)?;
    Ok(candidate_covectors(f, grid, x).into_iter().filter(|d| passes(f, grid, x, &ball, d, probe.slack, Side::Super)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Differentiability {
    pub differentiable: bool,
    pub gradient: Option<Covector>,
    /// Largest dual-norm distance between candidates passing both probes.
    pub spread: f64,
}

/// Searches the candidate family for a covector passing both probes. The
/// central difference is preferred when it passes.
pub fn differentiability(f: &ScalarField, nf: &NormField, grid: &GridDomain, x: usize, probe: &SubdiffProbe) -> Result<Differentiability> {
    interior_check(grid, x)?;
    let ball = probe_ball(grid, x, probe.radius)?;
    let both: Vec<Covector> = candidate_covectors(f, grid, x)
        .into_iter()
        .filter(|d| passes(f, grid, x, &ball, d, probe.slack, Side::Sub) && passes(f, grid, x, &ball, d, probe.slack, Side::Super))
        .collect();
    let local = nf.at(&grid.point(x))?;
    let mut spread: f64 = 0.0;
    for a in &both {
        for b in &both {
            spread = spread.max(local.dual(&a.sub(b).components));
        }
    }
    Ok(Differentiability { differentiable: !both.is_empty(), gradient: both.into_iter().next(), spread })
}

/// `max |f(y) - f(x)| / d(x, y)` over nodes `y != x` with `d(x, y) <= radius`,
/// where `df` is the distance field seeded at `x`.
pub fn local_lipschitz(f: &ScalarField, df: &DistanceField, radius: f64) -> Result<f64> {
    let x = match df.seeds.as_slice() {
        [(x, v)] if *v == 0.0 => *x,
        _ => return Err(Error::Probe("local Lipschitz estimate needs a distance field seeded at one node".into())),
    };
    let mut best: Option<f64> = None;
    for (y, &d) in df.values.values().iter().enumerate() {
        if y == x || !(d > 0.0) || d > radius {
            continue;
        }
        let q = (f[y] - f[x]).abs() / d;
        best = Some(best.map_or(q, |b: f64| b.max(q)));
    }
    best.ok_or_else(|| Error::Probe(format!("no nodes within distance {radius} of node {x}")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairWitness {
    pub first: usize,
    pub second: usize,
    pub ratio: f64,
}

/// Outcome of the mean value inequality check on `B(p, delta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub check: String,
    pub region: String,
    pub k_bound: f64,
    pub measured: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witnesses: Vec<PairWitness>,
    /// Nodes of the outer ball whose probe ball left the domain.
    #[serde(default)]
    pub skipped: usize,
}

impl LipschitzReport {
    pub fn to_verification(&self) -> VerificationReport {
        let mut r = VerificationReport::new(&self.check, self.tolerance);
        r.criterion("lipschitz", self.measured, self.k_bound * (1.0 + self.tolerance), Relation::Le);
        r.measured.insert("k_bound".into(), self.k_bound);
        for w in &self.witnesses {
            r.witness(Witness::pair(w.first, w.second, w.ratio));
        }
        r
    }
}

/// Estimates `K` as the largest dual norm of a candidate covector passing the
/// subdifferential probe anywhere in `B(p, 4 delta)`, measures the Lipschitz
/// constant of `f` on `B(p, delta)` against the stencil-graph distance, and
/// passes iff `measured <= K (1 + 5h / delta)`.
pub fn deville_check(f: &ScalarField, nf: &NormField, grid: &GridDomain, p: usize, delta: f64) -> Result<LipschitzReport> {
    let graph = StencilGraph::new(nf, grid, Stencil::Sixteen)?;
    deville_check_on(f, &graph, nf, p, delta)
}

pub fn deville_check_on(f: &ScalarField, graph: &StencilGraph, nf: &NormField, p: usize, delta: f64) -> Result<LipschitzReport> {
    let grid = graph.grid();
    if !(delta > 0.0) {
        return Err(Error::Input(format!("radius {delta} must be positive")));
    }
    let from_p = graph.from_node(p)?;
    let outer = from_p.metric_ball(4.0 * delta);
    for &n in &outer {
        let (i, j) = grid.ij(n);
        if !grid.is_interior(n) || i == 0 || j == 0 || i + 1 == grid.nx() || j + 1 == grid.ny() {
            return Err(Error::Geometry(format!("ball of radius {} around node {p} leaves the domain", 4.0 * delta)));
        }
    }
    let probe = SubdiffProbe::calibrated(f, grid, Some(&outer));
    let mut k_bound: f64 = 0.0;
    let mut skipped = 0;
    for &x in &outer {
        let ball = match probe_ball(grid, x, probe.radius) {
            Ok(b) => b,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        let local = nf.at(&grid.point(x))?;
        for d in candidate_covectors(f, grid, x) {
            if passes(f, grid, x, &ball, &d, probe.slack, Side::Sub) {
                k_bound = k_bound.max(local.dual(&d.components));
            }
        }
    }
    let tolerance = 5.0 * grid.h() / delta;
    let inner = from_p.metric_ball(delta);
    let mut measured: f64 = 0.0;
    let mut pairs = Vec::new();
    for (k, &x) in inner.iter().enumerate() {
        let dx = graph.distances_within(&[(x, 0.0)], 2.0 * delta * 1.5)?;
        for &y in &inner[k + 1..] {
            let d = dx.value(y);
            if !(d > 0.0) || !d.is_finite() {
                continue;
            }
            let ratio = (f[x] - f[y]).abs() / d;
            measured = measured.max(ratio);
            if ratio > k_bound * (1.0 + tolerance) {
                pairs.push(PairWitness { first: x, second: y, ratio });
            }
        }
    }
    pairs.sort_by(|a, b| b.ratio.total_cmp(&a.ratio).then(a.first.cmp(&b.first)).then(a.second.cmp(&b.second)));
    pairs.truncate(10);
    let c = grid.point(p);
    Ok(LipschitzReport {
        check: "deville".into(),
        region: format!("B(({:.6}, {:.6}), {delta})", c[0], c[1]),
        k_bound,
        measured,
        tolerance,
        pass: measured <= k_bound * (1.0 + tolerance),
        witnesses: pairs,
        skipped,
    })
}
