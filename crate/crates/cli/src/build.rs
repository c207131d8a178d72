//! Turns config pieces into core objects.

use finsler_hj::builtins::BuiltinProblem;
use finsler_hj::eikonal::BoundaryData;
use finsler_hj::evolution::{EvolutionConditionA, EvolutionHamiltonian};
use finsler_hj::expr::{Env, Expr, Var};
use finsler_hj::io::load_field_on;
use finsler_hj::stationary::{ConditionA, LipschitzRule, StationaryExpectation, StationaryHamiltonian};
use finsler_hj::{Bounds, GridDomain, NormField, ScalarField, Stencil, StencilGraph};
use nalgebra::DMatrix;

use crate::config::{DataSource, GridConfig, Loaded, MetricConfig, Perturbation, Scalar, StationarySpec};
use crate::error::{schema, CliError};

pub fn expr(source: &str, allowed: &[Var], what: &str) -> Result<Expr, CliError> {
    Expr::parse_with(source, 2, allowed).map_err(|e| CliError::Schema(format!("{what}: {e}")))
}

fn scalar(s: &Scalar, what: &str) -> Result<Expr, CliError> {
    match s {
        Scalar::Number(c) => expr(&c.to_string(), &[], what),
        Scalar::Expr(src) => expr(src, &[], what),
    }
}

fn at(e: &Expr, x: &[f64]) -> f64 {
    e.eval(&Env { x, ..Default::default() })
}

pub fn bounds(g: &GridConfig) -> Result<Bounds, CliError> {
    let [a, b, c, d] = g.bounds;
    Ok(Bounds::new(vec![a, b], vec![c, d])?)
}

pub fn norm_field(m: &MetricConfig, b: Bounds) -> Result<NormField, CliError> {
    Ok(match m {
        MetricConfig::Euclidean => NormField::euclidean(b),
        MetricConfig::Riemannian { matrix } => {
            let entries: Vec<Expr> = matrix.iter().flatten().map(|s| scalar(s, "metric.matrix")).collect::<Result<_, _>>()?;
            NormField::riemannian(b, move |x| DMatrix::from_row_iterator(2, 2, entries.iter().map(|e| at(e, x))))
        }
        MetricConfig::WeightedP { p, weights } => {
            let p = p.value()?;
            if !(p >= 1.0) {
                return schema(format!("metric exponent p = {p} must be at least 1"));
            }
            let w: Vec<Expr> = weights.iter().map(|s| scalar(s, "metric.weights")).collect::<Result<_, _>>()?;
            NormField::weighted_p(b, p, move |x| w.iter().map(|e| at(e, x)).collect())
        }
        MetricConfig::Scaled { base, scale } => {
            let c = scalar(scale, "metric.scale")?;
            NormField::scaled(norm_field(base, b)?, move |x| at(&c, x))
        }
    })
}

/// The grid for a problem kind. Eikonal problems without a mask use the
/// rectangle edge as boundary; stationary and evolution problems use the
/// full rectangle.
pub fn grid(loaded: &Loaded) -> Result<GridDomain, CliError> {
    let gc = &loaded.config.grid;
    let b = bounds(gc)?;
    let [nx, ny] = gc.resolution.pair();
    let kind = loaded.config.problem.kind();
    let g = if let Some(src) = &gc.mask {
        let e = expr(src, &[], "grid.mask")?;
        GridDomain::masked(b, nx, ny, |x| at(&e, &x) > 0.0)?
    } else if let Some(path) = &gc.mask_file {
        let rect = GridDomain::rectangle(b.clone(), nx, ny)?;
        let raster = load_field_on(&loaded.resolve(path), &rect)?;
        GridDomain::masked(b, nx, ny, |x| rect.nearest_node(&x).map(|n| raster[n] > 0.0).unwrap_or(false))?
    } else if kind == "eikonal" {
        GridDomain::masked(b, nx, ny, |_| true)?
    } else {
        GridDomain::rectangle(b, nx, ny)?
    };
    Ok(g)
}

pub fn stencil(loaded: &Loaded) -> Result<Stencil, CliError> {
    Ok(Stencil::from_order(loaded.config.grid.stencil)?)
}

/// `d(x0, .)` on the nodes, when `x0` is given.
pub fn reference(nf: &NormField, g: &GridDomain, x0: Option<[f64; 2]>) -> Result<Option<(usize, Vec<f64>)>, CliError> {
    let Some(x0) = x0 else { return Ok(None) };
    let c = g.nearest_node(&x0)?;
    let graph = StencilGraph::new(nf, g, Stencil::Sixteen)?;
    Ok(Some((c, graph.from_node(c)?.values.into_values())))
}

fn allowed(base: &[Var], d: &Option<(usize, Vec<f64>)>) -> Vec<Var> {
    let mut v = base.to_vec();
    if d.is_some() {
        v.push(Var::D);
    }
    v
}

/// Node values from a constant, an expression or a field file.
pub fn node_data(src: &DataSource, g: &GridDomain, d: &Option<(usize, Vec<f64>)>, loaded: &Loaded, what: &str) -> Result<ScalarField, CliError> {
    Ok(match src {
        DataSource::Constant(c) => ScalarField::constant(g, *c),
        DataSource::Expression(s) => {
            let e = expr(s, &allowed(&[], d), what)?;
            ScalarField::from_nodes(g, |n| e.eval(&Env { x: &g.point(n), d: d.as_ref().map_or(f64::NAN, |(_, dv)| dv[n]), ..Default::default() }))
        }
        DataSource::File(p) => load_field_on(&loaded.resolve(p), g)?,
    })
}

pub fn boundary_data(field: &ScalarField, g: &GridDomain) -> BoundaryData {
    BoundaryData::new(g.boundary().iter().map(|&b| (b, field[b])).collect())
}

/// A stationary problem from a builtin or an expression.
pub struct StationarySetup {
    pub hamiltonian: StationaryHamiltonian,
    pub expectation: StationaryExpectation,
    pub centre: Option<usize>,
    pub other: Option<StationaryHamiltonian>,
}

fn stationary_expr(
    src: &str,
    g: &GridDomain,
    d: &Option<(usize, Vec<f64>)>,
    what: &str,
) -> Result<impl Fn(usize, f64) -> f64 + Send + Sync + 'static, CliError> {
    let e = expr(src, &allowed(&[Var::T], d), what)?;
    let pts: Vec<[f64; 2]> = (0..g.len()).map(|n| g.point(n)).collect();
    let dv = d.as_ref().map(|(_, v)| v.clone());
    Ok(move |n: usize, t: f64| e.eval(&Env { x: &pts[n], t, d: dv.as_ref().map_or(f64::NAN, |v| v[n]), m: 0.0 }))
}

pub fn stationary(spec: &StationarySpec, nf: &NormField, g: &GridDomain) -> Result<StationarySetup, CliError> {
    let (hamiltonian, expectation, centre, d) = match (&spec.builtin, &spec.hamiltonian) {
        (Some(params), _) => {
            let p = BuiltinProblem::build(params, nf, g)?;
            let d = p.centre.zip(p.distance.map(|df| df.values.into_values()));
            (p.hamiltonian, p.expectation, p.centre, d)
        }
        (None, Some(src)) => {
            let d = reference(nf, g, spec.x0)?;
            let f = stationary_expr(src, g, &d, "problem.hamiltonian")?;
            let at_zero: Vec<f64> = (0..g.len()).map(|n| f(n, 0.0)).collect();
            let k0 = spec.k0.unwrap_or_else(|| at_zero.iter().copied().fold(f64::INFINITY, f64::min));
            let k1 = spec.k1.unwrap_or_else(|| at_zero.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            if !(k0.is_finite() && k1.is_finite() && k0 <= k1) {
                return schema(format!("H(x, 0) must be finite with k0 <= k1, got k0 = {k0}, k1 = {k1}"));
            }
            let mut h = StationaryHamiltonian::new(src, k0, k1, f);
            if let Some(c) = spec.condition_a {
                h = h.with_certificate(ConditionA::linear(c));
            }
            let mut expect = StationaryExpectation::from_bounds(&h);
            expect.lipschitz = spec.lipschitz.map(LipschitzRule::Global);
            let centre = d.as_ref().map(|(c, _)| *c);
            (h, expect, centre, d)
        }
        (None, None) => return schema("a stationary problem needs a builtin or a hamiltonian"),
    };
    let other = match &spec.stability {
        None => None,
        Some(Perturbation::Shift(c)) => Some(hamiltonian.shifted(*c)),
        Some(Perturbation::Hamiltonian(src)) => {
            let f = stationary_expr(src, g, &d, "problem.stability.hamiltonian")?;
            let at_zero: Vec<f64> = (0..g.len()).map(|n| f(n, 0.0)).collect();
            let k0 = at_zero.iter().copied().fold(f64::INFINITY, f64::min);
            let k1 = at_zero.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Some(StationaryHamiltonian::new(src, k0, k1, f))
        }
    };
    Ok(StationarySetup { hamiltonian, expectation, centre, other })
}

pub fn evolution_hamiltonian(
    src: &str,
    g: &GridDomain,
    d: &Option<(usize, Vec<f64>)>,
    lipschitz: Option<f64>,
    condition_a: Option<f64>,
) -> Result<EvolutionHamiltonian, CliError> {
    let e = expr(src, &allowed(&[Var::T, Var::M], d), "problem.hamiltonian")?;
    let pts: Vec<[f64; 2]> = (0..g.len()).map(|n| g.point(n)).collect();
    let dv = d.as_ref().map(|(_, v)| v.clone());
    let mut h = EvolutionHamiltonian::new(src, move |t, n, m| e.eval(&Env { x: &pts[n], t, m, d: dv.as_ref().map_or(f64::NAN, |v| v[n]) }));
    if let Some(l) = lipschitz {
        h = h.with_lipschitz(l);
    }
    if let Some(c) = condition_a {
        h = h.with_certificate(EvolutionConditionA::new(|s, dist, r| s + dist + r.abs(), c));
    }
    Ok(h)
}

/// Largest `|f(a) - f(b)| / w(a, b)` over graph edges.
pub fn edge_lipschitz(f: &ScalarField, graph: &StencilGraph) -> f64 {
    let g = graph.grid();
    let mut worst: f64 = 0.0;
    for a in (0..g.len()).filter(|&n| g.is_active(n) && f[n].is_finite()) {
        for &(b, w) in graph.neighbours(a) {
            if f[b].is_finite() && w > 0.0 {
                worst = worst.max((f[a] - f[b]).abs() / w);
            }
        }
    }
    worst
}
