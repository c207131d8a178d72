//! Solve, verify and write artifacts for one config.

use std::path::{Path, PathBuf};
use std::time::Instant;

use finsler_hj::eikonal::{solve_eikonal, EikonalOptions};
use finsler_hj::evolution::{envelope_constants, solve_evolution, EvolutionOptions};
use finsler_hj::io::{load_field_on, DistanceSidecar};
use finsler_hj::stationary::{solve_stationary, StationaryOptions};
use finsler_hj::suite::{
    run_suite, DevilleTarget, EikonalArtifacts, EvolutionArtifacts, EvolutionCompanion, StationaryArtifacts, StationaryPair, SuiteContext,
    SuiteSettings,
};
use finsler_hj::{distance_field, Error, GridDomain, Stencil, StencilGraph, VerificationReport};
use serde_json::{json, Value};

use crate::build;
use crate::config::{self, Loaded, ProblemSpec};
use crate::error::{schema, CliError};
use crate::output::{real, Artifacts};

pub const VERIFICATION: &str = "verification.json";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    SolveEikonal,
    SolveStationary,
    SolveEvolution,
    Distance,
    /// Runs checks; `field` replaces the solve for eikonal and stationary
    /// problems and `checks` replaces the configured list.
    Verify {
        field: Option<PathBuf>,
        checks: Option<Vec<String>>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SolveEikonal => "solve-eikonal",
            Command::SolveStationary => "solve-stationary",
            Command::SolveEvolution => "solve-evolution",
            Command::Distance => "distance",
            Command::Verify { .. } => "verify",
        }
    }

    fn expected_kind(&self) -> Option<&'static str> {
        match self {
            Command::SolveEikonal => Some("eikonal"),
            Command::SolveStationary => Some("stationary"),
            Command::SolveEvolution => Some("evolution"),
            Command::Distance => Some("distance"),
            Command::Verify { .. } => None,
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub reports: Vec<VerificationReport>,
    /// Path of the written report array, when checks ran.
    pub report_file: Option<PathBuf>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

pub fn run(loaded: &Loaded, command: &Command, out: &Path) -> Result<Outcome, CliError> {
    let problem = &loaded.config.problem;
    if let Some(kind) = command.expected_kind() {
        if problem.kind() != kind {
            return schema(format!("{} expects {} problem, the config describes {} problem", command.name(), article(kind), article(problem.kind())));
        }
    }
    let (field, checks) = match command {
        Command::Verify { field, checks } => {
            if matches!(problem, ProblemSpec::Distance(_)) {
                return schema("distance runs have no checks");
            }
            let checks = match checks {
                Some(names) => config::resolve_checks(names, problem)?,
                None => loaded.checks.clone(),
            };
            (field.as_ref().map(|p| loaded.resolve(p)), checks)
        }
        _ => (None, loaded.checks.clone()),
    };
    if field.is_some() && matches!(problem, ProblemSpec::Evolution(_)) {
        return schema("--field applies to eikonal and stationary problems only");
    }
    if let Some(f) = &field {
        if !f.is_file() {
            return schema(format!("field file {} does not exist", f.display()));
        }
    }

    let mut art = Artifacts::create(out)?;
    let formats = loaded.config.output.formats.clone();
    let start = Instant::now();
    let g = build::grid(loaded)?;
    let nf = build::norm_field(&loaded.config.metric, build::bounds(&loaded.config.grid)?)?;
    let stencil = build::stencil(loaded)?;
    art.time("setup", start);

    let mut ctx = SuiteContext::new(g.clone(), nf.clone());
    ctx.provenance = Some(loaded.hash.clone());
    ctx.settings = SuiteSettings { c: loaded.config.settings.c, frame: loaded.config.settings.frame, ..Default::default() };

    let start = Instant::now();
    let solve_report = match problem {
        ProblemSpec::Eikonal(spec) => {
            let d = build::reference(&nf, &g, spec.x0)?;
            let data = build::node_data(&spec.boundary, &g, &d, loaded, "problem.boundary")?;
            let boundary = build::boundary_data(&data, &g);
            let (u, report) = match &field {
                Some(path) => (load_field_on(path, &g)?, json!({ "field": path.display().to_string() })),
                None => {
                    let opts = EikonalOptions { stencil, waive_lipschitz: spec.waive_lipschitz, ..Default::default() };
                    let sol = solve_eikonal(&nf, &g, &boundary, &opts).map_err(|e| lipschitz_error(e, &g))?;
                    let report = json!({
                        "nodes": g.len(),
                        "boundary_nodes": g.boundary().len(),
                        "stencil": stencil.order(),
                        "unreachable": sol.unreachable.len(),
                        "lipschitz_violations": sol.violations.len(),
                    });
                    art.field("u", &sol.u, &g, &formats)?;
                    (sol.u, report)
                }
            };
            ctx.eikonal = Some(EikonalArtifacts { u, boundary });
            Some(report)
        }
        ProblemSpec::Stationary(spec) => {
            let setup = build::stationary(spec, &nf, &g)?;
            let opts =
                StationaryOptions { tol: spec.solver.tol, max_sweeps: spec.solver.max_sweeps, parallel: spec.solver.parallel, ..Default::default() };
            let mut report = json!({
                "hamiltonian": setup.hamiltonian.name(),
                "k0": real(setup.hamiltonian.k0),
                "k1": real(setup.hamiltonian.k1),
                "expected_lower": real(setup.expectation.lower),
                "expected_upper": real(setup.expectation.upper),
            });
            let u = match &field {
                Some(path) => {
                    report["field"] = json!(path.display().to_string());
                    load_field_on(path, &g)?
                }
                None => {
                    let sol = solve_stationary(&setup.hamiltonian, &nf, &g, &opts)?;
                    report["sweeps"] = json!(sol.sweeps);
                    report["residual"] = real(sol.residual);
                    art.field("u", &sol.u, &g, &formats)?;
                    sol.u
                }
            };
            let graph = StencilGraph::new(&nf, &g, Stencil::Sixteen)?;
            report["min"] = real(u.min_finite().unwrap_or(f64::NAN));
            report["max"] = real(u.max_finite().unwrap_or(f64::NAN));
            report["lipschitz"] = real(build::edge_lipschitz(&u, &graph));
            let other = match setup.other {
                Some(h2) => {
                    let sol = solve_stationary(&h2, &nf, &g, &opts)?;
                    art.field("u_stability", &sol.u, &g, &formats)?;
                    report["stability_hamiltonian"] = json!(h2.name());
                    Some(StationaryPair { hamiltonian: h2, u: sol.u })
                }
                None => None,
            };
            ctx.stationary =
                Some(StationaryArtifacts { u, hamiltonian: setup.hamiltonian, expectation: setup.expectation, centre: setup.centre, other });
            Some(report)
        }
        ProblemSpec::Evolution(spec) => {
            let d = build::reference(&nf, &g, spec.x0)?;
            let h = build::evolution_hamiltonian(&spec.hamiltonian, &g, &d, spec.lipschitz, spec.condition_a)?;
            let initial = build::node_data(&spec.initial, &g, &d, loaded, "problem.initial")?;
            let opts = EvolutionOptions { cfl: spec.cfl, stride: spec.stride, dt: None };
            let sol = solve_evolution(&h, &nf, &g, &initial, spec.horizon, &opts)?;
            let mut snapshots = Vec::new();
            for s in sol.states() {
                let stem = format!("snapshots/step_{:06}", s.step);
                art.field(&stem, &s.u, &g, &formats)?;
                snapshots.push(json!({ "step": s.step, "time": s.time, "file": format!("{stem}.csv") }));
            }
            let graph = StencilGraph::new(&nf, &g, Stencil::Sixteen)?;
            let lip_data = build::edge_lipschitz(&initial, &graph);
            let (s0, s1) = envelope_constants(&h, &g, spec.horizon, lip_data);
            let (k0, k1) = (spec.k0.unwrap_or(s0), spec.k1.unwrap_or(s1));
            let companion = match spec.companion {
                Some(c) => {
                    let h2 = h.shifted(-c.lower);
                    let raised = initial.map(|v| v + c.raise);
                    let sol2 = solve_evolution(&h2, &nf, &g, &raised, spec.horizon, &opts)?;
                    Some(EvolutionCompanion { hamiltonian: h2, initial: raised, solution: sol2 })
                }
                None => None,
            };
            let report = json!({
                "hamiltonian": h.name(),
                "T": spec.horizon,
                "dt": sol.dt,
                "steps": sol.steps,
                "cfl": sol.cfl,
                "nu": sol.nu,
                "lipschitz": sol.lipschitz,
                "data_lipschitz": lip_data,
                "k0": real(k0),
                "k1": real(k1),
                "snapshots": snapshots,
            });
            ctx.evolution = Some(EvolutionArtifacts { hamiltonian: h, initial, solution: sol, k0, k1, companion });
            Some(report)
        }
        ProblemSpec::Distance(spec) => {
            let seeds = spec
                .seeds
                .iter()
                .map(|s| {
                    let n = g.nearest_node(&s.point)?;
                    if !g.is_active(n) {
                        return Err(Error::Input(format!("seed {:?} falls outside the masked domain", s.point)));
                    }
                    Ok((n, s.value))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            let df = distance_field(&nf, &g, &seeds, stencil)?;
            art.field("distance", &df.values, &g, &formats)?;
            art.json("distance.json", &DistanceSidecar::of(&df, &g))?;
            None
        }
    };
    art.time("solve", start);
    if let Some(report) = solve_report {
        art.json("solve.json", &report)?;
    }

    if let Some(dv) = loaded.config.settings.deville {
        ctx.deville = match ctx.eikonal.as_ref().map(|e| &e.u).or(ctx.stationary.as_ref().map(|s| &s.u)) {
            Some(f) => Some(DevilleTarget { f: f.clone(), centre: g.nearest_node(&dv.centre)?, delta: dv.delta }),
            None => None,
        };
    }
    let start = Instant::now();
    let reports = run_suite(&checks, &ctx)?;
    art.time("verify", start);
    let report_file = if !checks.is_empty() || matches!(command, Command::Verify { .. }) { Some(art.json(VERIFICATION, &reports)?) } else { None };
    let dir = art.dir().to_path_buf();
    let config = serde_json::to_value(&loaded.config).unwrap_or(Value::Null);
    let pass = reports.iter().all(|r| r.pass);
    let manifest = art.finish(command.name(), &loaded.hash, &config, pass)?;
    Ok(Outcome { dir, manifest, reports, report_file })
}

fn lipschitz_error(e: Error, g: &GridDomain) -> CliError {
    match e {
        Error::NotLipschitz { witnesses } => CliError::NotLipschitz {
            pairs: witnesses
                .iter()
                .filter(|w| w.first < w.second || !witnesses.iter().any(|v| v.first == w.second && v.second == w.first))
                .take(5)
                .map(|w| {
                    let (a, b) = (g.point(w.first), g.point(w.second));
                    format!(
                        "nodes {} ({:.4}, {:.4}) and {} ({:.4}, {:.4}): |h(y) - h(z)| = {:.6} > d(y, z) = {:.6}",
                        w.first, a[0], a[1], w.second, b[0], b[1], w.value_gap, w.distance
                    )
                })
                .collect(),
        },
        other => other.into(),
    }
}

fn article(kind: &str) -> String {
    let a = if kind.starts_with(['a', 'e', 'i', 'o', 'u']) { "an" } else { "a" };
    format!("{a} {kind}")
}
