//! The evolution equation `u_t + H(t, x, ||u_x||_x) = 0`, `u(0, .) = h`,
//! by explicit Euler steps of the monotone upwind scheme, with a brute-force
//! Hopf-Lax oracle for `H = m` and the envelope, comparison and
//! monotonicity checks.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{Stencil, StencilGraph};
use crate::error::{Error, Result};
use crate::grid::{GridDomain, ScalarField};
use crate::norm::{LocalNorm, NormField};
use crate::report::{Relation, VerificationReport, Witness};
use crate::stationary::{sample_sources, PairSampler};
use crate::upwind::Upwind;

/// Largest CFL factor keeping the explicit update monotone in 2-D.
pub const MAX_CFL: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Node cap for the brute-force Hopf-Lax oracle.
pub const HOPF_LAX_BUDGET: usize = 10_000;

pub type NodeEvolution = Arc<dyn Fn(f64, usize, f64) -> f64 + Send + Sync>;

/// Modulus `omega(s, dist, r)`: time gap, distance, magnitude difference.
pub type Modulus3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct EvolutionConditionA {
    pub omega: Modulus3,
    pub c: f64,
}

impl EvolutionConditionA {
    pub fn new(omega: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static, c: f64) -> Self {
        Self { omega: Arc::new(omega), c }
    }
}

impl fmt::Debug for EvolutionConditionA {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionConditionA").field("c", &self.c).finish_non_exhaustive()
    }
}

/// `H(t, node, m)`, nondecreasing in `m` when flagged, with Lipschitz
/// constant `lipschitz` in `m` over the working range.
#[derive(Clone)]
pub struct EvolutionHamiltonian {
    name: String,
    eval: NodeEvolution,
    pub monotone: bool,
    pub certificate: Option<EvolutionConditionA>,
    pub lipschitz: Option<f64>,
}

impl fmt::Debug for EvolutionHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EvolutionHamiltonian")
            .field("name", &self.name)
            .field("monotone", &self.monotone)
            .field("certificate", &self.certificate)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl EvolutionHamiltonian {
    pub fn new(name: &str, eval: impl Fn(f64, usize, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.to_string(), eval: Arc::new(eval), monotone: true, certificate: None, lipschitz: None }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    pub fn with_certificate(mut self, cert: EvolutionConditionA) -> Self {
        self.certificate = Some(cert);
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
    pub fn eval(&self, t: f64, node: usize, m: f64) -> f64 {
        (self.eval)(t, node, m)
    }

    /// `H + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self { name: format!("{} + {c}", self.name), eval: Arc::new(move |t, n, m| inner(t, n, m) + c), ..self.clone() }
    }

    /// Largest sampled `|H(m1) - H(m2)| / |m1 - m2|` over `m in [0, m_max]`.
    pub fn estimate_lipschitz(&self, g: &GridDomain, horizon: f64, m_max: f64) -> f64 {
        let ms: Vec<f64> = (0..=40).map(|k| m_max * k as f64 / 40.0).collect();
        let ts: Vec<f64> = (0..=4).map(|k| horizon * k as f64 / 4.0).collect();
        (0..g.len())
            .into_par_iter()
            .step_by(7)
            .map(|n| {
                let mut worst: f64 = 0.0;
                for &t in &ts {
                    for w in ms.windows(2) {
                        worst = worst.max((self.eval(t, n, w[1]) - self.eval(t, n, w[0])).abs() / (w[1] - w[0]));
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Samples monotonicity in `m` and the declared Lipschitz bound.
    pub fn check_invariants(&self, g: &GridDomain, horizon: f64, m_max: f64) -> Result<()> {
        let ms: Vec<f64> = (0..=40).map(|k| m_max * k as f64 / 40.0).collect();
        let ts: Vec<f64> = (0..=4).map(|k| horizon * k as f64 / 4.0).collect();
        for n in (0..g.len()).step_by(7) {
            for &t in &ts {
                for w in ms.windows(2) {
                    let (a, b) = (self.eval(t, n, w[0]), self.eval(t, n, w[1]));
                    if self.monotone && a > b + 1e-12 {
                        return Err(Error::Input(format!("{}: H decreases in m at node {n}, t = {t}, m = {}", self.name, w[0])));
                    }
                    if let Some(l) = self.lipschitz {
                        if (b - a).abs() > l * (w[1] - w[0]) + 1e-9 {
                            return Err(Error::Input(format!(
                                "{}: slope in m exceeds the declared L_H = {l} at node {n}, t = {t}, m = {}",
                                self.name, w[0]
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionOptions {
    pub cfl: f64,
    /// Store every `stride`-th step.
    pub stride: usize,
    /// Explicit time step; must respect the CFL bound.
    pub dt: Option<f64>,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self { cfl: 0.4, stride: 10, dt: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub u: ScalarField,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionSolution {
    pub dt: f64,
    pub horizon: f64,
    pub steps: usize,
    pub cfl: f64,
    /// Anisotropy bound used in the time step.
    pub nu: f64,
    pub lipschitz: f64,
    /// Steps `0, stride, 2 stride, ...` up to `steps`.
    pub snapshots: Vec<Snapshot>,
    /// The state at the horizon.
    pub last: Snapshot,
}

impl EvolutionSolution {
    /// Stored snapshots followed by the final state when it is not stored.
    pub fn states(&self) -> impl Iterator<Item = &Snapshot> {
        let extra = (self.snapshots.last().map(|s| s.step) != Some(self.last.step)).then_some(&self.last);
        self.snapshots.iter().chain(extra)
    }
}

/// Largest sampled ratio `||p||_x* / |p|` over nodes and 32 directions.
pub fn anisotropy_bound(nf: &NormField, g: &GridDomain) -> Result<f64> {
    let dirs: Vec<[f64; 2]> = (0..32)
        .map(|k| {
            let a = std::f64::consts::PI * k as f64 / 16.0;
            [a.cos(), a.sin()]
        })
        .collect();
    let stride = (g.len() / 500).max(1);
    let mut nu: f64 = 0.0;
    for n in (0..g.len()).step_by(stride) {
        let local = nf.at(&g.point(n))?;
        for p in &dirs {
            nu = nu.max(local.dual(p));
        }
    }
    Ok(nu)
}

fn frozen_norms(nf: &NormField, g: &GridDomain) -> Result<Vec<LocalNorm>> {
    (0..g.len()).map(|n| nf.at(&g.point(n))).collect()
}

pub fn solve_evolution(
    h: &EvolutionHamiltonian,
    nf: &NormField,
    g: &GridDomain,
    initial: &ScalarField,
    horizon: f64,
    opts: &EvolutionOptions,
) -> Result<EvolutionSolution> {
    if !h.monotone {
        return Err(Error::Input(format!("{} is not flagged nondecreasing in m", h.name)));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::Input(format!("horizon must be finite and nonnegative, got {horizon}")));
    }
    if !(opts.cfl > 0.0 && opts.cfl <= MAX_CFL) {
        return Err(Error::Input(format!("CFL factor {} outside (0, 1/sqrt 2]", opts.cfl)));
    }
    if opts.stride == 0 {
        return Err(Error::Input("snapshot stride must be positive".into()));
    }
    if !initial.fits(g) {
        return Err(Error::Input("initial data does not match the grid".into()));
    }
    if let Some(n) = initial.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::Input(format!("initial data is not finite at node {n}")));
    }
    if (0..g.len()).any(|n| !g.is_interior(n)) {
        return Err(Error::Input("the evolution equation is posed on the full rectangle".into()));
    }
    let norms = frozen_norms(nf, g)?;
    let u0 = initial.values();
    let m_max = (0..g.len()).map(|n| Upwind::gather(g, u0, n, |_| true).magnitude(&norms[n], u0[n])).fold(0.0, f64::max).max(1.0) * 2.0;
    h.check_invariants(g, horizon, m_max)?;
    let lip = h.lipschitz.unwrap_or_else(|| h.estimate_lipschitz(g, horizon, m_max)).max(1e-12);
    let nu = anisotropy_bound(nf, g)?;
    let dt_max = opts.cfl * g.h_min() / (lip * nu);
    let dt_bound = MAX_CFL * g.h_min() / (lip * nu);
    let steps = match opts.dt {
        Some(dt) if !(dt > 0.0 && dt <= dt_bound) => {
            return Err(Error::Input(format!("time step {dt} violates the CFL bound {dt_bound}")));
        }
        Some(dt) => (horizon / dt).ceil() as usize,
        None => (horizon / dt_max).ceil() as usize,
    };
    let dt = if steps == 0 { 0.0 } else { horizon / steps as f64 };

    let mut u = u0.to_vec();
    let mut snapshots = vec![Snapshot { step: 0, time: 0.0, u: initial.clone() }];
    for k in 0..steps {
        let t = k as f64 * dt;
        let prev = &u;
        let next: Vec<f64> = (0..g.len())
            .into_par_iter()
            .map(|n| {
                let m = Upwind::gather(g, prev, n, |_| true).magnitude(&norms[n], prev[n]);
                prev[n] - dt * h.eval(t, n, m)
            })
            .collect();
        u = next;
        if (k + 1) % opts.stride == 0 {
            snapshots.push(Snapshot { step: k + 1, time: (k + 1) as f64 * dt, u: ScalarField::new(g, u.clone())? });
        }
    }
    let last = Snapshot { step: steps, time: horizon, u: ScalarField::new(g, u)? };
    Ok(EvolutionSolution { dt, horizon, steps, cfl: opts.cfl, nu, lipschitz: lip, snapshots, last })
}

/// `x -> min { h(y) : d(x, y) <= t }` over the 16-stencil graph.
pub fn hopf_lax_oracle(nf: &NormField, g: &GridDomain, h: &ScalarField, t: f64) -> Result<ScalarField> {
    if g.len() > HOPF_LAX_BUDGET {
        return Err(Error::Budget(format!("{} nodes exceed the brute-force cap of {HOPF_LAX_BUDGET}", g.len())));
    }
    if !h.fits(g) {
        return Err(Error::Input("data does not match the grid".into()));
    }
    if t <= 0.0 {
        return Ok(h.clone());
    }
    let graph = StencilGraph::new(nf, g, Stencil::Sixteen)?;
    let values: Vec<f64> = (0..g.len())
        .into_par_iter()
        .map(|x| {
            if !g.is_active(x) {
                return Ok(f64::INFINITY);
            }
            let df = graph.distances_within(&[(x, 0.0)], t)?;
            Ok(df.values.values().iter().zip(h.values()).filter(|(d, _)| **d <= t).map(|(_, v)| *v).fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<_>>()?;
    ScalarField::new(g, values)
}

/// Sampled `K0 = inf H`, `K1 = sup H` over nodes, `t in [0, T]` and
/// `m in [0, L]`.
pub fn envelope_constants(h: &EvolutionHamiltonian, g: &GridDomain, horizon: f64, lip_data: f64) -> (f64, f64) {
    let ts: Vec<f64> = (0..=20).map(|k| horizon * k as f64 / 20.0).collect();
    let ms: Vec<f64> = (0..=20).map(|k| lip_data * k as f64 / 20.0).collect();
    (0..g.len())
        .into_par_iter()
        .map(|n| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for &t in &ts {
                for &m in &ms {
                    let v = h.eval(t, n, m);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            (lo, hi)
        })
        .reduce(|| (f64::INFINITY, f64::NEG_INFINITY), |a, b| (a.0.min(b.0), a.1.max(b.1)))
}

fn frame_nodes(g: &GridDomain, frame: f64) -> Vec<usize> {
    (0..g.len()).filter(|&n| g.in_core(n, frame)).collect()
}

/// Checks `-K1 t + h <= u(t) <= -K0 t + h` on the core with slack
/// `C (h + dt)(1 + t)`; measured gaps are divided by `1 + t`.
pub fn envelope_bounds_check(
    sol: &EvolutionSolution,
    k0: f64,
    k1: f64,
    initial: &ScalarField,
    g: &GridDomain,
    c: f64,
    frame: f64,
) -> Result<VerificationReport> {
    if !initial.fits(g) || !sol.last.u.fits(g) {
        return Err(Error::Input("fields do not match the grid".into()));
    }
    let core = frame_nodes(g, frame);
    let allowance = c * (g.h() + sol.dt);
    let mut r = VerificationReport::new("evolution-envelope", c);
    let (mut low, mut high) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in sol.states() {
        let t = s.time;
        for &n in &core {
            let below = (s.u[n] - (initial[n] - k1 * t)) / (1.0 + t);
            let above = (s.u[n] - (initial[n] - k0 * t)) / (1.0 + t);
            if below < -allowance || above > allowance {
                r.witness(Witness { location: vec![n, s.step], values: vec![t, s.u[n]] });
            }
            low = low.min(below);
            high = high.max(above);
        }
    }
    r.criterion("lower_gap", low, -allowance, Relation::Ge);
    r.criterion("upper_gap", high, allowance, Relation::Le);
    r.note("k0", k0).note("k1", k1).note("dt", sol.dt);
    Ok(r)
}

fn same_schedule(u: &EvolutionSolution, v: &EvolutionSolution, g: &GridDomain) -> Result<()> {
    let steps_u: Vec<usize> = u.states().map(|s| s.step).collect();
    let steps_v: Vec<usize> = v.states().map(|s| s.step).collect();
    if u.dt != v.dt || steps_u != steps_v {
        return Err(Error::Input("solutions use different time steps or snapshot schedules".into()));
    }
    if !u.last.u.fits(g) || !v.last.u.fits(g) {
        return Err(Error::Input("solutions do not match the grid".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub inf_gap: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `inf (v - u)` over stored states and the core; passes iff it is at least
/// `-C (h + dt)(1 + T)`.
pub fn comparison_check(u: &EvolutionSolution, v: &EvolutionSolution, g: &GridDomain, c: f64, frame: f64) -> Result<Comparison> {
    same_schedule(u, v, g)?;
    let core = frame_nodes(g, frame);
    let mut gap = f64::INFINITY;
    for (a, b) in u.states().zip(v.states()) {
        for &n in &core {
            gap = gap.min(b.u[n] - a.u[n]);
        }
    }
    let bound = -c * (g.h() + u.dt) * (1.0 + u.horizon);
    Ok(Comparison { inf_gap: gap, bound, pass: gap >= bound })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityGap {
    pub gap: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Largest magnitude sampled for `m` in the hypothesis and bound sampling.
pub const M_SAMPLE_MAX: f64 = 10.0;

/// `u` solves for `(H2, h2)`, `v` for `(H1, h1)`, with `H1 <= H2` and
/// `h2 <= h1`. `gap = sup (u - v)`, `bound = sup (H2 - H1) + sup (h2 - h1)`.
#[allow(clippy::too_many_arguments)]
pub fn monotonicity_gap(
    u: &EvolutionSolution,
    v: &EvolutionSolution,
    h1: &EvolutionHamiltonian,
    h2: &EvolutionHamiltonian,
    init1: &ScalarField,
    init2: &ScalarField,
    g: &GridDomain,
    c: f64,
) -> Result<MonotonicityGap> {
    same_schedule(u, v, g)?;
    if !init1.fits(g) || !init2.fits(g) {
        return Err(Error::Input("initial data does not match the grid".into()));
    }
    if let Some(n) = (0..g.len()).find(|&n| init2[n] > init1[n]) {
        return Err(Error::Input(format!("h2 <= h1 fails at node {n}: {} > {}", init2[n], init1[n])));
    }
    let ts: Vec<f64> = (0..=10).map(|k| u.horizon * k as f64 / 10.0).collect();
    let ms: Vec<f64> = (0..=50).map(|k| M_SAMPLE_MAX * k as f64 / 50.0).collect();
    let mut sup_h = f64::NEG_INFINITY;
    for n in 0..g.len() {
        for &t in &ts {
            for &m in &ms {
                let d = h2.eval(t, n, m) - h1.eval(t, n, m);
                if d < -1e-12 {
                    return Err(Error::Input(format!("H1 <= H2 fails at node {n}, t = {t}, m = {m} (H2 - H1 = {d})")));
                }
                sup_h = sup_h.max(d);
            }
        }
    }
    let sup_data = init2.values().iter().zip(init1.values()).map(|(a, b)| a - b).fold(f64::NEG_INFINITY, f64::max);
    let mut gap = f64::NEG_INFINITY;
    for (a, b) in u.states().zip(v.states()) {
        for (x, y) in a.u.values().iter().zip(b.u.values()) {
            gap = gap.max(x - y);
        }
    }
    let bound = sup_h + sup_data;
    let slack = c * (g.h() + u.dt) * (1.0 + u.horizon);
    Ok(MonotonicityGap { gap, bound, pass: gap <= bound + slack })
}

/// Samples `|H(t1,x1,r1) - H(t2,x2,r2)| <= omega(|t1-t2|, d, r1-r2) + C max(|r1|,|r2|)(|t1-t2| + d) + 1e-9`
/// with `t, r in [0, sampler.t_max]`.
pub fn check_condition_a_evolution(h: &EvolutionHamiltonian, graph: &StencilGraph, sampler: &PairSampler) -> Result<VerificationReport> {
    let cert = h.certificate.clone().ok_or_else(|| Error::Input(format!("{} carries no condition (A) certificate", h.name)))?;
    check_condition_a_evolution_with(h, &cert, graph, sampler)
}

pub fn check_condition_a_evolution_with(
    h: &EvolutionHamiltonian,
    cert: &EvolutionConditionA,
    graph: &StencilGraph,
    sampler: &PairSampler,
) -> Result<VerificationReport> {
    if sampler.budget > 10_000_000 {
        return Err(Error::Budget(format!("{} samples requested, cap is 1e7", sampler.budget)));
    }
    let g = graph.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(sampler.seed);
    let sources = sample_sources(g, graph, sampler.sources, &mut rng)?;
    let mut r = VerificationReport::new("condition-A-evolution", cert.c);
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    let top = sampler.t_max;
    for k in 0..sampler.budget {
        let (x1, df) = &sources[k % sources.len()];
        let x2 = rng.gen_range(0..g.len());
        let d = df.value(x2);
        if !d.is_finite() {
            continue;
        }
        let (t1, t2) = (rng.gen_range(0.0..=top), rng.gen_range(0.0..=top));
        let r1 = rng.gen_range(0.0..=top);
        let r2 = if k % 4 == 0 { r1 } else { rng.gen_range(0.0..=top) };
        let lhs = (h.eval(t1, *x1, r1) - h.eval(t2, x2, r2)).abs();
        let s = (t1 - t2).abs();
        let rhs = (cert.omega)(s, d, r1 - r2) + cert.c * r1.abs().max(r2.abs()) * (s + d) + 1e-9;
        worst = worst.max(lhs - rhs);
        if !(lhs <= rhs) {
            violations += 1;
            r.witness(Witness { location: vec![*x1, x2], values: vec![t1, t2, r1, r2, lhs, rhs] });
        }
    }
    r.criterion("violations", violations as f64, 0.0, Relation::Le);
    r.note("samples", sampler.budget as f64);
    r.note("worst_excess", worst);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Bounds;

    fn setup(n: usize) -> (NormField, GridDomain) {
        let g = GridDomain::rectangle(Bounds::square(-1.0, 1.0), n, n).unwrap();
        (NormField::euclidean(g.bounds().clone()), g)
    }

    #[test]
    fn constant_hamiltonian_translates_data() {
        let (nf, g) = setup(21);
        let h0 = ScalarField::from_fn(&g, |x| x[0] * x[1]);
        let h = EvolutionHamiltonian::new("0.7", |_, _, _| 0.7).with_lipschitz(1.0);
        let sol = solve_evolution(&h, &nf, &g, &h0, 0.5, &EvolutionOptions::default()).unwrap();
        for n in 0..g.len() {
            assert!((sol.last.u[n] - (h0[n] - 0.35)).abs() <= 1e-12);
        }
    }

    #[test]
    fn snapshot_count_and_step_bound() {
        let (nf, g) = setup(21);
        let h0 = ScalarField::constant(&g, 0.0);
        let h = EvolutionHamiltonian::new("m", |_, _, m| m).with_lipschitz(1.0);
        let opts = EvolutionOptions { stride: 3, ..Default::default() };
        let sol = solve_evolution(&h, &nf, &g, &h0, 1.0, &opts).unwrap();
        assert!(sol.dt <= 0.4 * g.h() / (sol.lipschitz * sol.nu) + 1e-15);
        assert_eq!(sol.snapshots.len(), sol.steps / 3 + 1);
        assert_eq!(sol.last.time, 1.0);
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let (nf, g) = setup(11);
        let h0 = ScalarField::constant(&g, 0.0);
        let h = EvolutionHamiltonian::new("m", |_, _, m| m).with_lipschitz(1.0);
        let bad_cfl = EvolutionOptions { cfl: 0.9, ..Default::default() };
        assert!(matches!(solve_evolution(&h, &nf, &g, &h0, 1.0, &bad_cfl), Err(Error::Input(_))));
        let big_dt = EvolutionOptions { dt: Some(1.0), ..Default::default() };
        assert!(matches!(solve_evolution(&h, &nf, &g, &h0, 1.0, &big_dt), Err(Error::Input(_))));
        let nan = ScalarField::from_nodes(&g, |n| if n == 5 { f64::NAN } else { 0.0 });
        assert!(matches!(solve_evolution(&h, &nf, &g, &nan, 1.0, &EvolutionOptions::default()), Err(Error::Input(_))));
        let decreasing = EvolutionHamiltonian::new("-m", |_, _, m| -m);
        assert!(solve_evolution(&decreasing, &nf, &g, &h0, 1.0, &EvolutionOptions::default()).is_err());
        let understated = EvolutionHamiltonian::new("3m", |_, _, m| 3.0 * m).with_lipschitz(1.0);
        let tilted = ScalarField::from_fn(&g, |x| x[0]);
        assert!(solve_evolution(&understated, &nf, &g, &tilted, 1.0, &EvolutionOptions::default()).is_err());
    }

    #[test]
    fn oracle_edge_cases() {
        let (nf, g) = setup(21);
        let h0 = ScalarField::from_fn(&g, |x| x[0] + 2.0 * x[1]);
        assert_eq!(hopf_lax_oracle(&nf, &g, &h0, 0.0).unwrap(), h0);
        let all = hopf_lax_oracle(&nf, &g, &h0, 10.0).unwrap();
        assert!(all.values().iter().all(|&v| v == -3.0));
        let (nf_big, big) = setup(101);
        let f = ScalarField::constant(&big, 0.0);
        assert!(matches!(hopf_lax_oracle(&nf_big, &big, &f, 0.1), Err(Error::Budget(_))));
    }
}
