//! The stationary equation `u(x) + H(x, ||du(x)||_x) = 0` on the full grid
//! rectangle, solved by monotone Gauss-Seidel sweeping from the constant
//! subsolution `-K1`, together with its verification checks.
//!
//! Hamiltonians are evaluated at grid nodes: `H(node, t)`. Position
//! dependence usually enters through a distance field, which only exists on
//! the nodes.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{DistanceField, Stencil, StencilGraph};
use crate::error::{Error, Result};
use crate::grid::{GridDomain, ScalarField};
use crate::norm::{LocalNorm, NormField};
use crate::report::{Relation, VerificationReport, Witness};
use crate::subdiff::{self, SubdiffProbe};
use crate::upwind::Upwind;

pub type NodeHamiltonian = Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>;

/// Modulus `omega(s, r)` of condition (A); `s` is a distance, `r` a
/// difference of gradient magnitudes.
pub type Modulus = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A condition (A) certificate `(omega, C)`.
#[derive(Clone)]
pub struct ConditionA {
    pub omega: Modulus,
    pub c: f64,
}

impl ConditionA {
    pub fn new(omega: impl Fn(f64, f64) -> f64 + Send + Sync + 'static, c: f64) -> Self {
        Self { omega: Arc::new(omega), c }
    }

    /// `omega(s, r) = s + |r|`.
    pub fn linear(c: f64) -> Self {
        Self::new(|s, r| s + r.abs(), c)
    }
}

impl fmt::Debug for ConditionA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConditionA").field("c", &self.c).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coercivity {
    /// `liminf H(x, t) > K1` for every `x`, with `H` uniformly continuous.
    Uniform,
    /// Condition (A) plus a locally uniform `liminf`.
    LocallyUniform,
    None,
}

#[derive(Clone)]
pub struct StationaryHamiltonian {
    name: String,
    eval: NodeHamiltonian,
    pub monotone: bool,
    pub certificate: Option<ConditionA>,
    pub k0: f64,
    pub k1: f64,
    pub coercivity: Coercivity,
}

impl fmt::Debug for StationaryHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StationaryHamiltonian")
            .field("name", &self.name)
            .field("monotone", &self.monotone)
            .field("certificate", &self.certificate)
            .field("k0", &self.k0)
            .field("k1", &self.k1)
            .field("coercivity", &self.coercivity)
            .finish()
    }
}

impl StationaryHamiltonian {
    /// A Hamiltonian claimed nondecreasing in `t` with `k0 <= H(x, 0) <= k1`.
    pub fn new(name: &str, k0: f64, k1: f64, eval: impl Fn(usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.to_string(), eval: Arc::new(eval), monotone: true, certificate: None, k0, k1, coercivity: Coercivity::Uniform }
    }

    pub fn with_certificate(mut self, cert: ConditionA) -> Self {
        self.certificate = Some(cert);
        self
    }

    pub fn with_coercivity(mut self, class: Coercivity) -> Self {
        self.coercivity = class;
        self
    }

    pub fn with_monotone(mut self, monotone: bool) -> Self {
        self.monotone = monotone;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn eval(&self, node: usize, t: f64) -> f64 {
        (self.eval)(node, t)
    }

    /// `H + c`, with the bounds moved along.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self { name: format!("{} + {c}", self.name), eval: Arc::new(move |n, t| inner(n, t) + c), k0: self.k0 + c, k1: self.k1 + c, ..self.clone() }
    }

    /// Samples monotonicity in `t` and the bounds on `H(x, 0)` over every
    /// `stride`-th node.
    pub fn check_invariants(&self, g: &GridDomain, stride: usize) -> Result<()> {
        let ts: Vec<f64> = (0..=40).map(|k| 0.25 * k as f64).collect();
        for n in (0..g.len()).step_by(stride.max(1)) {
            let h0 = self.eval(n, 0.0);
            if !(self.k0 - 1e-9 <= h0 && h0 <= self.k1 + 1e-9) {
                return Err(Error::Input(format!("{}: H(x, 0) = {h0} at node {n} lies outside [{}, {}]", self.name, self.k0, self.k1)));
            }
            if self.monotone {
                for w in ts.windows(2) {
                    let (a, b) = (self.eval(n, w[0]), self.eval(n, w[1]));
                    if a > b + 1e-12 {
                        return Err(Error::Input(format!("{}: H decreases in t at node {n} between t = {} and {}", self.name, w[0], w[1])));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sampling plan for the condition (A) checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSampler {
    /// Source nodes whose distance fields supply `d(x1, x2)`.
    pub sources: usize,
    pub t_max: f64,
    pub budget: usize,
    pub seed: u64,
}

impl Default for PairSampler {
    fn default() -> Self {
        Self { sources: 20, t_max: 10.0, budget: 100_000, seed: 7 }
    }
}

pub(crate) fn sample_sources(g: &GridDomain, graph: &StencilGraph, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, DistanceField)>> {
    let active: Vec<usize> = (0..g.len()).filter(|&n| g.is_active(n)).collect();
    if active.is_empty() {
        return Err(Error::Input("grid has no active nodes".into()));
    }
    (0..count.max(1))
        .map(|_| {
            let s = active[rng.gen_range(0..active.len())];
            Ok((s, graph.from_node(s)?))
        })
        .collect()
}

/// Checks `|H(x1,t1) - H(x2,t2)| <= omega(d(x1,x2), t1-t2) + C max(|t1|,|t2|) d(x1,x2) + 1e-9`
/// on `sampler.budget` random samples, using the Hamiltonian's certificate.
pub fn check_condition_a(h: &StationaryHamiltonian, graph: &StencilGraph, sampler: &PairSampler) -> Result<VerificationReport> {
    let cert = h.certificate.clone().ok_or_else(|| Error::Input(format!("{} carries no condition (A) certificate", h.name)))?;
    check_condition_a_with(h, &cert, graph, sampler)
}

pub fn check_condition_a_with(
    h: &StationaryHamiltonian,
    cert: &ConditionA,
    graph: &StencilGraph,
    sampler: &PairSampler,
) -> Result<VerificationReport> {
    if sampler.budget > 10_000_000 {
        return Err(Error::Budget(format!("{} samples requested, cap is 1e7", sampler.budget)));
    }
    let g = graph.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let sources = sample_sources(g, graph, sampler.sources, &mut rng)?;
    let mut r = VerificationReport::new("condition-A", cert.c);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..sampler.budget {
        let (x1, df) = &sources[k % sources.len()];
        let x2 = rng.gen_range(0..g.len());
        let d = df.value(x2);
        if !d.is_finite() {
            continue;
        }
        let t1 = rng.gen_range(0.0..=sampler.t_max);
        // every fourth sample shares t, isolating the spatial term
        let t2 = if k % 4 == 0 { t1 } else { rng.gen_range(0.0..=sampler.t_max) };
        let lhs = (h.eval(*x1, t1) - h.eval(x2, t2)).abs();
        let rhs = (cert.omega)(d, t1 - t2) + cert.c * t1.abs().max(t2.abs()) * d + 1e-9;
        worst = worst.max(lhs - rhs);
        if !(lhs <= rhs) {
            violations += 1;
            r.witness(Witness { location: vec![*x1, x2], values: vec![t1, t2, lhs, rhs] });
        }
    }
    r.criterion("violations", violations as f64, 0.0, Relation::Le);
    r.note("samples", sampler.budget as f64);
    r.note("worst_excess", worst);
    Ok(r)
}

/// Smallest sampled `R` such that `H(z, t) > K1` for every `z` in
/// `neighbourhood` (default `{x}`) and every sampled `t` in `(R, R + 10]`,
/// bisected to `tol`.
pub fn coercivity_threshold(h: &StationaryHamiltonian, k1: f64, x: usize, neighbourhood: Option<&[usize]>, tol: f64) -> Result<f64> {
    const CAP: f64 = 1e6;
    if h.coercivity == Coercivity::None {
        return Err(Error::Input(format!("{} is declared non-coercive", h.name)));
    }
    let own = [x];
    let zs = neighbourhood.unwrap_or(&own);
    let above = |r: f64| {
        let geometric = (0..=40).map(|k| r + 10.0 * 0.5f64.powi(k));
        let uniform = (1..=100).map(|k| r + 0.1 * k as f64);
        geometric.chain(uniform).all(|t| zs.iter().all(|&z| h.eval(z, t) > k1))
    };
    if above(0.0) {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while !above(hi) {
        hi *= 2.0;
        if hi > CAP {
            return Err(Error::Coercivity { cap: CAP });
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if above(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub bisection_tol: f64,
    /// Jacobi updates over all nodes in parallel instead of Gauss-Seidel.
    pub parallel: bool,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_sweeps: 2000, bisection_tol: 1e-10, parallel: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarySolution {
    pub u: ScalarField,
    pub sweeps: usize,
    /// Largest change in the final sweep.
    pub residual: f64,
}

fn frozen_norms(nf: &NormField, g: &GridDomain) -> Result<Vec<LocalNorm>> {
    (0..g.len()).map(|n| nf.at(&g.point(n))).collect()
}

fn orderings(g: &GridDomain) -> [Vec<usize>; 4] {
    let (nx, ny) = (g.nx(), g.ny());
    let build = |rev_i: bool, rev_j: bool| {
        let mut out = Vec::with_capacity(nx * ny);
        for jj in 0..ny {
            let j = if rev_j { ny - 1 - jj } else { jj };
            for ii in 0..nx {
                let i = if rev_i { nx - 1 - ii } else { ii };
                out.push(g.index(i, j));
            }
        }
        out
    };
    [build(false, false), build(true, false), build(true, true), build(false, true)]
}

/// Root of `v + H(x, P(v)) = 0` on `[lo, hi]`, returned from the
/// subsolution side. Errors if the bracket does not change sign.
fn node_root(h: &StationaryHamiltonian, node: usize, local: &LocalNorm, up: &Upwind, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let f = |v: f64| v + h.eval(node, up.magnitude(local, v));
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if !(fa <= 0.0 && fb >= 0.0) {
        return Err(Error::Input(format!("{}: bracket [{lo}, {hi}] at node {node} does not change sign ({fa}, {fb}); check K0 and K1", h.name)));
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if f(mid) <= 0.0 {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(a)
}

pub fn solve_stationary(h: &StationaryHamiltonian, nf: &NormField, g: &GridDomain, opts: &StationaryOptions) -> Result<StationarySolution> {
    solve_stationary_observed(h, nf, g, opts, |_, _| {})
}

/// As [`solve_stationary`], calling `observe(sweep, values)` after every
/// sweep.
pub fn solve_stationary_observed(
    h: &StationaryHamiltonian,
    nf: &NormField,
    g: &GridDomain,
    opts: &StationaryOptions,
    mut observe: impl FnMut(usize, &[f64]),
) -> Result<StationarySolution> {
    if !h.monotone {
        return Err(Error::Input(format!("{} is not flagged nondecreasing in t", h.name)));
    }
    if !(h.k0 <= h.k1) {
        return Err(Error::Input(format!("K0 = {} exceeds K1 = {}", h.k0, h.k1)));
    }
    if (0..g.len()).any(|n| !g.is_interior(n)) {
        return Err(Error::Input("the stationary equation is posed on the full rectangle".into()));
    }
    h.check_invariants(g, 7)?;
    let norms = frozen_norms(nf, g)?;
    let (lo, hi) = (-h.k1 - 1.0, -h.k0 + 1.0);
    let mut u = vec![-h.k1; g.len()];
    let orders = orderings(g);
    let mut residual = f64::INFINITY;
    for sweep in 0..opts.max_sweeps {
        let mut change: f64 = 0.0;
        if opts.parallel {
            let prev = u.clone();
            let next: Vec<f64> = (0..g.len())
                .into_par_iter()
                .map(|n| {
                    let up = Upwind::gather(g, &prev, n, |_| true);
                    node_root(h, n, &norms[n], &up, lo, hi, opts.bisection_tol).map(|v| v.max(prev[n]))
                })
                .collect::<Result<_>>()?;
            for (a, b) in prev.iter().zip(&next) {
                change = change.max(b - a);
            }
            u = next;
        } else {
            for &n in &orders[sweep % 4] {
                let up = Upwind::gather(g, &u, n, |_| true);
                let v = node_root(h, n, &norms[n], &up, lo, hi, opts.bisection_tol)?;
                if v > u[n] {
                    change = change.max(v - u[n]);
                    u[n] = v;
                }
            }
        }
        observe(sweep + 1, &u);
        residual = change;
        if change < opts.tol {
            return Ok(StationarySolution { u: ScalarField::new(g, u)?, sweeps: sweep + 1, residual });
        }
    }
    Err(Error::Convergence { sweeps: opts.max_sweeps, residual })
}

/// Fast sweeping for `||du||_x = 1` with fixed Dirichlet seeds, started from
/// `+inf`. Only active nodes carry values; the zero-order term is absent.
/// Serves as an independent cross-check of the Dijkstra eikonal solver.
pub fn sweep_eikonal(nf: &NormField, g: &GridDomain, seeds: &[(usize, f64)], opts: &StationaryOptions) -> Result<StationarySolution> {
    if seeds.is_empty() {
        return Err(Error::Input("eikonal sweeping needs at least one seed".into()));
    }
    let norms = frozen_norms(nf, g)?;
    let mut u = vec![f64::INFINITY; g.len()];
    let mut fixed = vec![false; g.len()];
    for &(n, v) in seeds {
        if n >= g.len() || !g.is_active(n) || !v.is_finite() {
            return Err(Error::Input(format!("invalid seed ({n}, {v})")));
        }
        fixed[n] = true;
        u[n] = u[n].min(v);
    }
    let h_min = g.h_min();
    let orders = orderings(g);
    let mut residual = f64::INFINITY;
    for sweep in 0..opts.max_sweeps {
        let mut change: f64 = 0.0;
        for &n in &orders[sweep % 4] {
            if fixed[n] || !g.is_active(n) {
                continue;
            }
            let up = Upwind::gather(g, &u, n, |m| g.is_active(m));
            let low = up.lowest();
            if !low.is_finite() {
                continue;
            }
            let gap = |v: f64| up.magnitude(&norms[n], v) - 1.0;
            let mut step = h_min;
            while gap(low + step) < 0.0 {
                step *= 2.0;
            }
            let (mut a, mut b) = (low, low + step);
            while b - a > 1e-13 * b.abs().max(1.0) {
                let mid = 0.5 * (a + b);
                if gap(mid) < 0.0 {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            if b < u[n] {
                let delta = if u[n].is_finite() { u[n] - b } else { f64::INFINITY };
                change = change.max(delta);
                u[n] = b;
            }
        }
        residual = change;
        if sweep >= 3 && change < opts.tol {
            return Ok(StationarySolution { u: ScalarField::new(g, u)?, sweeps: sweep + 1, residual });
        }
    }
    Err(Error::Convergence { sweeps: opts.max_sweeps, residual })
}

/// Expected Lipschitz behaviour of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LipschitzRule {
    /// One constant over the verification window.
    Global(f64),
    /// `R`-Lipschitz inside `B(centre, R/4)` for each listed `R`.
    Radial { centre: usize, radii: Vec<f64> },
}

/// What a verified solution must satisfy: `lower <= u <= upper` and the
/// Lipschitz rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryExpectation {
    pub lower: f64,
    pub upper: f64,
    pub lipschitz: Option<LipschitzRule>,
}

impl StationaryExpectation {
    /// The generic bounds `-K1 <= u <= -K0` and no Lipschitz rule.
    pub fn from_bounds(h: &StationaryHamiltonian) -> Self {
        Self { lower: -h.k1, upper: -h.k0, lipschitz: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryCheck {
    pub c: f64,
    /// Width of the excluded frame next to the rectangle edge, as a fraction
    /// of the extent.
    pub frame: f64,
    pub lipschitz_sources: usize,
    pub viscosity_samples: usize,
}

impl Default for StationaryCheck {
    fn default() -> Self {
        Self { c: 5.0, frame: 0.1, lipschitz_sources: 30, viscosity_samples: 400 }
    }
}

/// Bounds, Lipschitz rule and viscosity spot probes in one report.
pub fn verify_stationary(
    u: &ScalarField,
    h: &StationaryHamiltonian,
    expect: &StationaryExpectation,
    nf: &NormField,
    g: &GridDomain,
    check: &StationaryCheck,
) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("stationary", check.c);
    bounds_criteria(&mut r, u, expect, g)?;
    if let Some(rule) = &expect.lipschitz {
        let graph = StencilGraph::new(nf, g, Stencil::Sixteen)?;
        lipschitz_criteria(&mut r, u, rule, &graph, check)?;
    }
    viscosity_criteria(&mut r, u, h, nf, g, check)?;
    Ok(r)
}

pub fn check_bounds(u: &ScalarField, expect: &StationaryExpectation, g: &GridDomain) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("stationary-bounds", 0.0);
    bounds_criteria(&mut r, u, expect, g)?;
    Ok(r)
}

pub fn check_lipschitz(u: &ScalarField, rule: &LipschitzRule, graph: &StencilGraph, check: &StationaryCheck) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("stationary-lipschitz", check.c);
    lipschitz_criteria(&mut r, u, rule, graph, check)?;
    Ok(r)
}

pub fn check_viscosity(
    u: &ScalarField,
    h: &StationaryHamiltonian,
    nf: &NormField,
    g: &GridDomain,
    check: &StationaryCheck,
) -> Result<VerificationReport> {
    let mut r = VerificationReport::new("stationary-viscosity", check.c);
    viscosity_criteria(&mut r, u, h, nf, g, check)?;
    Ok(r)
}

fn fits(u: &ScalarField, g: &GridDomain) -> Result<()> {
    if !u.fits(g) {
        return Err(Error::Input(format!("field is {}x{}, grid is {}x{}", u.nx(), u.ny(), g.nx(), g.ny())));
    }
    Ok(())
}

fn bounds_criteria(r: &mut VerificationReport, u: &ScalarField, expect: &StationaryExpectation, g: &GridDomain) -> Result<()> {
    fits(u, g)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (n, &v) in u.values().iter().enumerate() {
        if v < expect.lower - 1e-6 || v > expect.upper + 1e-6 || v.is_nan() {
            r.witness(Witness::node(n, vec![v]));
        }
        lo = lo.min(if v.is_nan() { f64::NEG_INFINITY } else { v });
        hi = hi.max(if v.is_nan() { f64::INFINITY } else { v });
    }
    r.criterion("min", lo, expect.lower - 1e-6, Relation::Ge);
    r.criterion("max", hi, expect.upper + 1e-6, Relation::Le);
    Ok(())
}

/// Largest `|u(x) - u(y)| / d(x, y)` over pairs from `nodes`, with up to
/// `sources` evenly spaced first members.
fn pair_lipschitz(u: &ScalarField, graph: &StencilGraph, nodes: &[usize], sources: usize, bound: f64, r: &mut VerificationReport) -> Result<f64> {
    let step = nodes.len().div_ceil(sources.max(1)).max(1);
    let mut measured: f64 = 0.0;
    for &x in nodes.iter().step_by(step) {
        let dx = graph.from_node(x)?;
        for &y in nodes {
            let d = dx.value(y);
            if y == x || !(d > 0.0) || !d.is_finite() {
                continue;
            }
            let q = (u[x] - u[y]).abs() / d;
            if q > bound {
                r.witness(Witness::pair(x, y, q));
            }
            measured = measured.max(q);
        }
    }
    Ok(measured)
}

fn lipschitz_criteria(
    r: &mut VerificationReport,
    u: &ScalarField,
    rule: &LipschitzRule,
    graph: &StencilGraph,
    check: &StationaryCheck,
) -> Result<()> {
    let g = graph.grid();
    fits(u, g)?;
    let slack = 1.0 + check.c * g.h();
    match rule {
        LipschitzRule::Global(l) => {
            let core: Vec<usize> = (0..g.len()).filter(|&n| g.in_core(n, check.frame)).collect();
            let m = pair_lipschitz(u, graph, &core, check.lipschitz_sources, l * slack, r)?;
            r.criterion("lipschitz", m, l * slack, Relation::Le);
        }
        LipschitzRule::Radial { centre, radii } => {
            let dc = graph.from_node(*centre)?;
            for &big_r in radii {
                let ball = dc.metric_ball(big_r / 4.0);
                let m = pair_lipschitz(u, graph, &ball, check.lipschitz_sources, big_r * slack, r)?;
                r.criterion(&format!("lipschitz_R={big_r}"), m, big_r * slack, Relation::Le);
            }
        }
    }
    Ok(())
}

/// Largest `u(x) + H(x, ||D||*)` over covectors `D` passing the
/// superdifferential probe, and smallest over those passing the
/// subdifferential probe, at evenly spaced window nodes.
#[allow(clippy::too_many_arguments)]
fn viscosity_defects(
    u: &ScalarField,
    h: &StationaryHamiltonian,
    nf: &NormField,
    g: &GridDomain,
    nodes: &[usize],
    probe: &SubdiffProbe,
    r: Option<&mut VerificationReport>,
    allowance: f64,
) -> Result<(f64, f64)> {
    let mut sub_worst = f64::NEG_INFINITY;
    let mut super_worst = f64::INFINITY;
    let mut witnesses = Vec::new();
    for &x in nodes {
        if subdiff::probe_ball(g, x, probe.radius).is_err() || !g.is_interior(x) {
            continue;
        }
        let local = nf.at(&g.point(x))?;
        for d in subdiff::passing_superdifferentials(u, g, x, probe)? {
            let v = u[x] + h.eval(x, local.dual(&d.components));
            if v > allowance {
                witnesses.push(Witness::node(x, vec![u[x], v]));
            }
            sub_worst = sub_worst.max(v);
        }
        for d in subdiff::passing_subdifferentials(u, g, x, probe)? {
            let v = u[x] + h.eval(x, local.dual(&d.components));
            if v < -allowance {
                witnesses.push(Witness::node(x, vec![u[x], v]));
            }
            super_worst = super_worst.min(v);
        }
    }
    if let Some(r) = r {
        for w in witnesses {
            r.witness(w);
        }
    }
    Ok((sub_worst, super_worst))
}

fn window_sample(g: &GridDomain, frame: f64, count: usize) -> Vec<usize> {
    let core: Vec<usize> = (0..g.len()).filter(|&n| g.is_interior(n) && g.in_core(n, frame)).collect();
    let step = core.len().div_ceil(count.max(1)).max(1);
    // odd offset keeps the sample off grid-aligned symmetry lines
    core.into_iter().skip(step / 2).step_by(step).collect()
}

/// The probe for viscosity spot checks: radius `2h`, slack `C h / 2`.
pub fn spot_probe(g: &GridDomain, c: f64) -> Result<SubdiffProbe> {
    SubdiffProbe::new(g, 2.0 * g.h(), 0.5 * c * g.h())
}

fn viscosity_criteria(
    r: &mut VerificationReport,
    u: &ScalarField,
    h: &StationaryHamiltonian,
    nf: &NormField,
    g: &GridDomain,
    check: &StationaryCheck,
) -> Result<()> {
    fits(u, g)?;
    let allowance = check.c * g.h();
    let nodes = window_sample(g, check.frame, check.viscosity_samples);
    let probe = spot_probe(g, check.c)?;
    let (sub, sup) = viscosity_defects(u, h, nf, g, &nodes, &probe, Some(r), allowance)?;
    r.criterion("subsolution_defect", sub, allowance, Relation::Le);
    r.criterion("supersolution_defect", sup, -allowance, Relation::Ge);
    Ok(())
}

/// Outcome of the stability comparison between two solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityGap {
    pub gap: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `gap = max (u1 - u2)`, `bound = max sampled (H2 - H1)` over nodes and
/// `t in [0, 10]`; passes iff `gap <= bound + C h`.
pub fn stability_gap(
    h1: &StationaryHamiltonian,
    h2: &StationaryHamiltonian,
    u1: &ScalarField,
    u2: &ScalarField,
    g: &GridDomain,
    c: f64,
) -> Result<StabilityGap> {
    fits(u1, g)?;
    fits(u2, g)?;
    let gap = u1.values().iter().zip(u2.values()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    let ts: Vec<f64> = (0..=200).map(|k| 0.05 * k as f64).collect();
    let bound = (0..g.len())
        .into_par_iter()
        .map(|n| ts.iter().map(|&t| h2.eval(n, t) - h1.eval(n, t)).fold(f64::NEG_INFINITY, f64::max))
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(StabilityGap { gap, bound, pass: gap <= bound + c * g.h() })
}

pub fn stability_report(s: &StabilityGap, g: &GridDomain, c: f64) -> VerificationReport {
    let mut r = VerificationReport::new("stationary-stability", c);
    r.criterion("gap", s.gap, s.bound + c * g.h(), Relation::Le);
    r.note("sampled_sup_h2_minus_h1", s.bound);
    r
}

/// Largest subsolution defect of `u` at the sampled window nodes, and the
/// nodes where it exceeds `C h`.
pub fn subsolution_spot_check(
    u: &ScalarField,
    h: &StationaryHamiltonian,
    nf: &NormField,
    g: &GridDomain,
    check: &StationaryCheck,
) -> Result<(f64, Vec<usize>)> {
    fits(u, g)?;
    let probe = spot_probe(g, check.c)?;
    let allowance = check.c * g.h();
    let mut worst = f64::NEG_INFINITY;
    let mut bad = Vec::new();
    for x in window_sample(g, check.frame, check.viscosity_samples) {
        if subdiff::probe_ball(g, x, probe.radius).is_err() {
            continue;
        }
        let local = nf.at(&g.point(x))?;
        for d in subdiff::passing_superdifferentials(u, g, x, &probe)? {
            let v = u[x] + h.eval(x, local.dual(&d.components));
            worst = worst.max(v);
            if v > allowance {
                bad.push(x);
            }
        }
    }
    bad.dedup();
    Ok((worst, bad))
}

/// Forms the pointwise supremum of a family of subsolutions and re-runs the
/// subsolution spot check on it. Each member must pass the spot check.
pub fn family_sup_diagnostic(
    fields: &[ScalarField],
    h: &StationaryHamiltonian,
    nf: &NormField,
    g: &GridDomain,
    check: &StationaryCheck,
) -> Result<VerificationReport> {
    let Some(first) = fields.first() else {
        return Err(Error::Input("the family is empty".into()));
    };
    for (k, f) in fields.iter().enumerate() {
        let (worst, bad) = subsolution_spot_check(f, h, nf, g, check)?;
        if !bad.is_empty() {
            return Err(Error::Input(format!("family member {k} fails the subsolution spot check at node {} (defect {worst})", bad[0])));
        }
    }
    let mut sup = first.clone();
    for f in &fields[1..] {
        sup = sup.zip_with(f, f64::max)?;
    }
    let (worst, bad) = subsolution_spot_check(&sup, h, nf, g, check)?;
    let mut r = VerificationReport::new("family-sup", check.c);
    for n in bad {
        r.witness(Witness::node(n, vec![sup[n]]));
    }
    r.criterion("subsolution_defect", worst, check.c * g.h(), Relation::Le);
    r.note("members", fields.len() as f64);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Bounds;

    fn grid(n: usize) -> GridDomain {
        GridDomain::rectangle(Bounds::square(-1.0, 1.0), n, n).unwrap()
    }

    #[test]
    fn constant_source_gives_constant_solution() {
        let g = grid(21);
        let nf = NormField::euclidean(g.bounds().clone());
        let h = StationaryHamiltonian::new("t - 0.3", -0.3, -0.3, |_, t| t - 0.3);
        let sol = solve_stationary(&h, &nf, &g, &StationaryOptions::default()).unwrap();
        for &v in sol.u.values() {
            assert!((v - 0.3).abs() <= 1e-9);
        }
    }

    #[test]
    fn non_monotone_is_rejected() {
        let g = grid(11);
        let nf = NormField::euclidean(g.bounds().clone());
        let h = StationaryHamiltonian::new("-t", 0.0, 0.0, |_, t| -t).with_monotone(false);
        assert!(matches!(solve_stationary(&h, &nf, &g, &StationaryOptions::default()), Err(Error::Input(_))));
        let lying = StationaryHamiltonian::new("-t", 0.0, 0.0, |_, t| -t);
        assert!(matches!(solve_stationary(&lying, &nf, &g, &StationaryOptions::default()), Err(Error::Input(_))));
    }

    #[test]
    fn wrong_bounds_are_rejected() {
        let g = grid(11);
        let nf = NormField::euclidean(g.bounds().clone());
        let h = StationaryHamiltonian::new("t + 5", 0.0, 1.0, |_, t| t + 5.0);
        assert!(matches!(solve_stationary(&h, &nf, &g, &StationaryOptions::default()), Err(Error::Input(_))));
    }

    #[test]
    fn convergence_failure_is_reported() {
        let g = grid(41);
        let nf = NormField::euclidean(g.bounds().clone());
        let h = StationaryHamiltonian::new("t - x", -1.0, 1.0, move |n, t| t - (n % 41) as f64 / 20.0 + 1.0);
        let opts = StationaryOptions { max_sweeps: 1, ..Default::default() };
        assert!(matches!(solve_stationary(&h, &nf, &g, &opts), Err(Error::Convergence { sweeps: 1, .. })));
    }

    #[test]
    fn threshold_of_linear_hamiltonian() {
        let h = StationaryHamiltonian::new("t - 1", -1.0, -1.0, |_, t| t - 1.0);
        let r = coercivity_threshold(&h, 1.0, 0, None, 1e-9).unwrap();
        assert!((r - 2.0).abs() < 1e-8);
        let flat = StationaryHamiltonian::new("0", 0.0, 0.0, |_, _| 0.0);
        assert!(matches!(coercivity_threshold(&flat, 1.0, 0, None, 1e-6), Err(Error::Coercivity { .. })));
        let none = h.clone().with_coercivity(Coercivity::None);
        assert!(coercivity_threshold(&none, 1.0, 0, None, 1e-6).is_err());
    }

    #[test]
    fn missing_certificate_is_an_input_error() {
        let g = grid(11);
        let nf = NormField::euclidean(g.bounds().clone());
        let graph = StencilGraph::new(&nf, &g, Stencil::Sixteen).unwrap();
        let h = StationaryHamiltonian::new("t", 0.0, 0.0, |_, t| t);
        assert!(matches!(check_condition_a(&h, &graph, &PairSampler::default()), Err(Error::Input(_))));
    }
}
