//! The named check registry: each name maps to one verification routine run
//! against whatever solved artifacts the context carries.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{Stencil, StencilGraph};
use crate::eikonal::{self, BoundaryData, EikonalCheck};
use crate::error::{Error, Result};
use crate::evolution::{self, EvolutionHamiltonian, EvolutionSolution};
use crate::grid::{GridDomain, ScalarField};
use crate::norm::NormField;
use crate::report::{Relation, VerificationReport, Witness};
use crate::stationary::{self, PairSampler, StationaryCheck, StationaryExpectation, StationaryHamiltonian};
use crate::subdiff;

/// Every registered check name.
pub const CHECKS: [&str; 14] = [
    "eikonal-boundary",
    "eikonal-lipschitz",
    "eikonal-gradient",
    "ridge",
    "stationary-bounds",
    "stationary-lipschitz",
    "stationary-stability",
    "condition-A",
    "coercivity",
    "deville",
    "evolution-envelope",
    "evolution-comparison",
    "evolution-monotonicity",
    "hopf-lax-agreement",
];

#[derive(Debug, Clone)]
pub struct EikonalArtifacts {
    pub u: ScalarField,
    pub boundary: BoundaryData,
}

/// A second stationary solve for the stability check.
#[derive(Debug, Clone)]
pub struct StationaryPair {
    pub hamiltonian: StationaryHamiltonian,
    pub u: ScalarField,
}

#[derive(Debug, Clone)]
pub struct StationaryArtifacts {
    pub u: ScalarField,
    pub hamiltonian: StationaryHamiltonian,
    pub expectation: StationaryExpectation,
    /// Node at which the coercivity threshold is sampled.
    pub centre: Option<usize>,
    pub other: Option<StationaryPair>,
}

/// A second evolution run whose data and Hamiltonian lie on the other side:
/// `H_other <= H` and `h_other >= h`, so its solution should dominate.
#[derive(Debug, Clone)]
pub struct EvolutionCompanion {
    pub hamiltonian: EvolutionHamiltonian,
    pub initial: ScalarField,
    pub solution: EvolutionSolution,
}

#[derive(Debug, Clone)]
pub struct EvolutionArtifacts {
    pub hamiltonian: EvolutionHamiltonian,
    pub initial: ScalarField,
    pub solution: EvolutionSolution,
    pub k0: f64,
    pub k1: f64,
    pub companion: Option<EvolutionCompanion>,
}

#[derive(Debug, Clone)]
pub struct DevilleTarget {
    pub f: ScalarField,
    pub centre: usize,
    pub delta: f64,
}

/// Slack constants and sampling plans shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteSettings {
    pub c: f64,
    pub frame: f64,
    pub sampler: PairSampler,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self { c: 5.0, frame: 0.1, sampler: PairSampler::default() }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteContext {
    pub grid: GridDomain,
    pub norm: NormField,
    pub eikonal: Option<EikonalArtifacts>,
    pub stationary: Option<StationaryArtifacts>,
    pub evolution: Option<EvolutionArtifacts>,
    pub deville: Option<DevilleTarget>,
    pub settings: SuiteSettings,
    pub provenance: Option<String>,
}

impl SuiteContext {
    pub fn new(grid: GridDomain, norm: NormField) -> Self {
        Self { grid, norm, eikonal: None, stationary: None, evolution: None, deville: None, settings: SuiteSettings::default(), provenance: None }
    }

    fn graph(&self) -> Result<StencilGraph> {
        StencilGraph::new(&self.norm, &self.grid, Stencil::Sixteen)
    }

    fn eikonal(&self, name: &str) -> Result<&EikonalArtifacts> {
        self.eikonal.as_ref().ok_or_else(|| missing(name, "an eikonal solution"))
    }

    fn stationary(&self, name: &str) -> Result<&StationaryArtifacts> {
        self.stationary.as_ref().ok_or_else(|| missing(name, "a stationary solution"))
    }

    fn evolution(&self, name: &str) -> Result<&EvolutionArtifacts> {
        self.evolution.as_ref().ok_or_else(|| missing(name, "an evolution solution"))
    }

    fn companion(&self, name: &str) -> Result<(&EvolutionArtifacts, &EvolutionCompanion)> {
        let e = self.evolution(name)?;
        let c = e.companion.as_ref().ok_or_else(|| missing(name, "a companion evolution run"))?;
        Ok((e, c))
    }

    /// The field used by `ridge` and `deville` when no target is given.
    fn primary_field(&self) -> Option<&ScalarField> {
        self.eikonal.as_ref().map(|e| &e.u).or(self.stationary.as_ref().map(|s| &s.u))
    }
}

fn missing(name: &str, what: &str) -> Error {
    Error::Input(format!("check {name} needs {what}"))
}

/// Whether `H(t, x, m) = m` on sampled nodes, times and magnitudes.
fn is_transport(h: &EvolutionHamiltonian, g: &GridDomain, horizon: f64) -> bool {
    (0..g.len()).step_by(7).all(|n| {
        (0..=4).all(|k| {
            let t = horizon * k as f64 / 4.0;
            (0..=20).all(|j| {
                let m = j as f64 / 4.0;
                (h.eval(t, n, m) - m).abs() <= 1e-12 * (1.0 + m)
            })
        })
    })
}

pub fn is_known(name: &str) -> bool {
    CHECKS.contains(&name)
}

/// Runs the named checks concurrently; reports come back in request order.
pub fn run_suite(names: &[String], ctx: &SuiteContext) -> Result<Vec<VerificationReport>> {
    if let Some(bad) = names.iter().find(|n| !is_known(n)) {
        return Err(Error::Input(format!("unknown check {bad:?}; known checks: {}", CHECKS.join(", "))));
    }
    names
        .par_iter()
        .map(|n| {
            let r = run_check(n, ctx)?;
            Ok(match &ctx.provenance {
                Some(p) => r.with_provenance(p.clone()),
                None => r,
            })
        })
        .collect()
}

pub fn run_check(name: &str, ctx: &SuiteContext) -> Result<VerificationReport> {
    let g = &ctx.grid;
    let s = &ctx.settings;
    let eik = EikonalCheck { c: s.c, ..Default::default() };
    let stat = StationaryCheck { c: s.c, frame: s.frame, ..Default::default() };
    let mut report = match name {
        "eikonal-boundary" => {
            let e = ctx.eikonal(name)?;
            eikonal::check_boundary(&e.u, g, &e.boundary)?
        }
        "eikonal-lipschitz" => eikonal::check_lipschitz(&ctx.eikonal(name)?.u, &ctx.graph()?, &eik)?,
        "eikonal-gradient" => eikonal::check_gradient(&ctx.eikonal(name)?.u, &ctx.norm, g, &eik)?,
        "ridge" => {
            let u = ctx.primary_field().ok_or_else(|| missing(name, "an eikonal or stationary solution"))?;
            let ridge = eikonal::ridge_diagnostic(u, &ctx.norm, g)?;
            let mut r = VerificationReport::new("ridge", eikonal::RIDGE_THRESHOLD);
            for &n in &ridge {
                r.witness(Witness::node(n, vec![u[n]]));
            }
            r.criterion("ridge_nodes", ridge.len() as f64, 1.0, Relation::Ge);
            r
        }
        "stationary-bounds" => {
            let st = ctx.stationary(name)?;
            stationary::check_bounds(&st.u, &st.expectation, g)?
        }
        "stationary-lipschitz" => {
            let st = ctx.stationary(name)?;
            let rule = st.expectation.lipschitz.as_ref().ok_or_else(|| missing(name, "an expected Lipschitz rule"))?;
            stationary::check_lipschitz(&st.u, rule, &ctx.graph()?, &stat)?
        }
        "stationary-stability" => {
            let st = ctx.stationary(name)?;
            let other = st.other.as_ref().ok_or_else(|| missing(name, "a second stationary solve"))?;
            let gap = stationary::stability_gap(&st.hamiltonian, &other.hamiltonian, &st.u, &other.u, g, s.c)?;
            stationary::stability_report(&gap, g, s.c)
        }
        "condition-A" => {
            let graph = ctx.graph()?;
            match (&ctx.stationary, &ctx.evolution) {
                (Some(st), _) => stationary::check_condition_a(&st.hamiltonian, &graph, &s.sampler)?,
                (None, Some(ev)) => evolution::check_condition_a_evolution(&ev.hamiltonian, &graph, &s.sampler)?,
                _ => return Err(missing(name, "a stationary or evolution Hamiltonian")),
            }
        }
        "coercivity" => {
            let st = ctx.stationary(name)?;
            let x = match st.centre {
                Some(c) => c,
                None => g.nearest_node(&g.bounds().lo.iter().zip(&g.bounds().hi).map(|(a, b)| 0.5 * (a + b)).collect::<Vec<_>>())?,
            };
            let cap = 1e6;
            let mut r = VerificationReport::new("coercivity", 1e-6);
            match stationary::coercivity_threshold(&st.hamiltonian, st.hamiltonian.k1, x, None, 1e-6) {
                Ok(t) => {
                    r.criterion("threshold", t, cap, Relation::Le);
                }
                Err(Error::Coercivity { .. }) => {
                    r.criterion("threshold", f64::INFINITY, cap, Relation::Le);
                }
                Err(e) => return Err(e),
            }
            r.note("node", x as f64);
            r
        }
        "deville" => {
            let target = match &ctx.deville {
                Some(t) => t.clone(),
                None => {
                    let f = ctx.primary_field().ok_or_else(|| missing(name, "a field to test"))?;
                    let lo = &g.bounds().lo;
                    let hi = &g.bounds().hi;
                    let centre = g.nearest_node(&[0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])])?;
                    DevilleTarget { f: f.clone(), centre, delta: 8.0 * g.h() }
                }
            };
            subdiff::deville_check(&target.f, &ctx.norm, g, target.centre, target.delta)?.to_verification()
        }
        "evolution-envelope" => {
            let ev = ctx.evolution(name)?;
            evolution::envelope_bounds_check(&ev.solution, ev.k0, ev.k1, &ev.initial, g, s.c, s.frame)?
        }
        "evolution-comparison" => {
            let (ev, comp) = ctx.companion(name)?;
            let c = evolution::comparison_check(&ev.solution, &comp.solution, g, s.c, s.frame)?;
            let mut r = VerificationReport::new("evolution-comparison", s.c);
            r.criterion("inf_gap", c.inf_gap, c.bound, Relation::Ge);
            r
        }
        "evolution-monotonicity" => {
            let (ev, comp) = ctx.companion(name)?;
            let m =
                evolution::monotonicity_gap(&ev.solution, &comp.solution, &comp.hamiltonian, &ev.hamiltonian, &comp.initial, &ev.initial, g, s.c)?;
            let slack = s.c * (g.h() + ev.solution.dt) * (1.0 + ev.solution.horizon);
            let mut r = VerificationReport::new("evolution-monotonicity", s.c);
            r.criterion("gap", m.gap, m.bound + slack, Relation::Le);
            r.note("sup_h_difference_plus_data_difference", m.bound);
            r
        }
        "hopf-lax-agreement" => {
            let ev = ctx.evolution(name)?;
            if !is_transport(&ev.hamiltonian, g, ev.solution.horizon) {
                return Err(Error::Input(format!("check {name} compares against the Hopf-Lax formula, which solves H = m only")));
            }
            let oracle = evolution::hopf_lax_oracle(&ctx.norm, g, &ev.initial, ev.solution.horizon)?;
            let mut worst: f64 = 0.0;
            let mut r = VerificationReport::new("hopf-lax-agreement", 3.0);
            let bound = 3.0 * (g.h() + ev.solution.dt);
            for n in (0..g.len()).filter(|&n| g.in_core(n, s.frame)) {
                let e = (ev.solution.last.u[n] - oracle[n]).abs();
                if e > bound {
                    r.witness(Witness::node(n, vec![ev.solution.last.u[n], oracle[n]]));
                }
                worst = worst.max(e);
            }
            r.criterion("max_error", worst, bound, Relation::Le);
            r
        }
        other => return Err(Error::Input(format!("unknown check {other:?}"))),
    };
    report.check = name.to_string();
    Ok(report)
}
