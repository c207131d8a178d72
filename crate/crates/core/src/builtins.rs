//! The five worked examples of the stationary equation, with their known
//! bounds and Lipschitz rules. `d` is the 16-stencil graph distance from the
//! node nearest `x0`.

use serde::{Deserialize, Serialize};

use crate::distance::{DistanceField, Stencil, StencilGraph};
use crate::error::{input, Error, Result};
use crate::expr::{Env, Expr, Var};
use crate::grid::{GridDomain, ScalarField};
use crate::norm::NormField;
use crate::stationary::{Coercivity, ConditionA, LipschitzRule, StationaryExpectation, StationaryHamiltonian};

/// Radii `R` for the radial rule of `ex4`.
pub const EX4_RADII: [f64; 3] = [1.0, 2.0, 4.0];

/// Parameters of a built-in problem, as written in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase", deny_unknown_fields)]
pub enum BuiltinParams {
    /// `H = min(t, a) - cos d`, `a > 2`.
    Ex1 { a: f64, x0: [f64; 2] },
    /// `H = t - cos d`.
    Ex2 { x0: [f64; 2] },
    /// `H = min(t, 1) - (a + d) / (b + d)`, `0 < a < b`.
    Ex3 { a: f64, b: f64, x0: [f64; 2] },
    /// `H = (1 + 2t) / (1 + t + d)`.
    Ex4 { x0: [f64; 2] },
    /// `H = t - f(x)` with `f` an expression over `x1, x2` and, when `x0`
    /// is given, `d`.
    Ex5 {
        f: String,
        #[serde(default)]
        x0: Option<[f64; 2]>,
    },
}

impl BuiltinParams {
    pub fn id(&self) -> &'static str {
        match self {
            BuiltinParams::Ex1 { .. } => "ex1",
            BuiltinParams::Ex2 { .. } => "ex2",
            BuiltinParams::Ex3 { .. } => "ex3",
            BuiltinParams::Ex4 { .. } => "ex4",
            BuiltinParams::Ex5 { .. } => "ex5",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BuiltinParams::Ex1 { a, .. } if !(a > 2.0) => input(format!("ex1 needs a > 2, got {a}")),
            BuiltinParams::Ex3 { a, b, .. } if !(0.0 < a && a < b) => input(format!("ex3 needs 0 < a < b, got a = {a}, b = {b}")),
            _ => Ok(()),
        }
    }
}

/// A built-in problem instantiated on a grid.
#[derive(Debug, Clone)]
pub struct BuiltinProblem {
    pub params: BuiltinParams,
    pub hamiltonian: StationaryHamiltonian,
    pub expectation: StationaryExpectation,
    /// Node nearest `x0`, when the problem has one.
    pub centre: Option<usize>,
    /// `d(x0, .)` on the nodes, when the problem has one.
    pub distance: Option<DistanceField>,
}

fn reference_distance(nf: &NormField, g: &GridDomain, x0: [f64; 2]) -> Result<(usize, DistanceField)> {
    let c = g.nearest_node(&x0)?;
    let graph = StencilGraph::new(nf, g, Stencil::Sixteen)?;
    Ok((c, graph.from_node(c)?))
}

impl BuiltinProblem {
    pub fn build(params: &BuiltinParams, nf: &NormField, g: &GridDomain) -> Result<Self> {
        params.validate()?;
        match params {
            BuiltinParams::Ex1 { a, x0 } => Self::ex1(*a, *x0, nf, g),
            BuiltinParams::Ex2 { x0 } => Self::ex2(*x0, nf, g),
            BuiltinParams::Ex3 { a, b, x0 } => Self::ex3(*a, *b, *x0, nf, g),
            BuiltinParams::Ex4 { x0 } => Self::ex4(*x0, nf, g),
            BuiltinParams::Ex5 { f, x0 } => {
                let allowed: &[Var] = if x0.is_some() { &[Var::D] } else { &[] };
                let e = Expr::parse_with(f, 2, allowed)?;
                let dist = x0.map(|p| reference_distance(nf, g, p)).transpose()?;
                let field = ScalarField::from_nodes(g, |n| {
                    let d = dist.as_ref().map_or(f64::NAN, |(_, df)| df.value(n));
                    e.eval(&Env { x: &g.point(n), d, ..Default::default() })
                });
                let mut p = Self::ex5(field)?;
                p.params = params.clone();
                if let Some((c, df)) = dist {
                    p.centre = Some(c);
                    p.distance = Some(df);
                }
                Ok(p)
            }
        }
    }

    pub fn ex1(a: f64, x0: [f64; 2], nf: &NormField, g: &GridDomain) -> Result<Self> {
        let params = BuiltinParams::Ex1 { a, x0 };
        params.validate()?;
        let (c, df) = reference_distance(nf, g, x0)?;
        let cosd: Vec<f64> = df.values.values().iter().map(|d| d.cos()).collect();
        let h = StationaryHamiltonian::new("ex1", -1.0, 1.0, move |n, t| t.min(a) - cosd[n]).with_certificate(ConditionA::linear(0.0));
        let expectation = StationaryExpectation { lower: -1.0, upper: 1.0, lipschitz: Some(LipschitzRule::Global(a)) };
        Ok(Self { params, hamiltonian: h, expectation, centre: Some(c), distance: Some(df) })
    }

    pub fn ex2(x0: [f64; 2], nf: &NormField, g: &GridDomain) -> Result<Self> {
        let (c, df) = reference_distance(nf, g, x0)?;
        let cosd: Vec<f64> = df.values.values().iter().map(|d| d.cos()).collect();
        let h = StationaryHamiltonian::new("ex2", -1.0, 1.0, move |n, t| t - cosd[n]).with_certificate(ConditionA::linear(0.0));
        let expectation = StationaryExpectation { lower: -1.0, upper: 1.0, lipschitz: Some(LipschitzRule::Global(2.0)) };
        Ok(Self { params: BuiltinParams::Ex2 { x0 }, hamiltonian: h, expectation, centre: Some(c), distance: Some(df) })
    }

    pub fn ex3(a: f64, b: f64, x0: [f64; 2], nf: &NormField, g: &GridDomain) -> Result<Self> {
        let params = BuiltinParams::Ex3 { a, b, x0 };
        params.validate()?;
        let (c, df) = reference_distance(nf, g, x0)?;
        let q: Vec<f64> = df.values.values().iter().map(|d| (a + d) / (b + d)).collect();
        // d -> (a+d)/(b+d) has slope at most (b-a)/b^2
        let slope = ((b - a) / (b * b)).max(1.0);
        let h = StationaryHamiltonian::new("ex3", -1.0, -a / b, move |n, t| t.min(1.0) - q[n])
            .with_certificate(ConditionA::new(move |s, r| slope * s + r.abs(), 0.0));
        let expectation = StationaryExpectation { lower: a / b, upper: 1.0, lipschitz: Some(LipschitzRule::Global(1.0 - a / b)) };
        Ok(Self { params, hamiltonian: h, expectation, centre: Some(c), distance: Some(df) })
    }

    pub fn ex4(x0: [f64; 2], nf: &NormField, g: &GridDomain) -> Result<Self> {
        let (c, df) = reference_distance(nf, g, x0)?;
        let d: Vec<f64> = df.values.values().to_vec();
        let h = StationaryHamiltonian::new("ex4", 0.0, 1.0, move |n, t| (1.0 + 2.0 * t.abs()) / (1.0 + t.abs() + d[n]))
            .with_certificate(ConditionA::linear(0.0))
            .with_coercivity(Coercivity::LocallyUniform);
        let expectation =
            StationaryExpectation { lower: -1.0, upper: 0.0, lipschitz: Some(LipschitzRule::Radial { centre: c, radii: EX4_RADII.to_vec() }) };
        Ok(Self { params: BuiltinParams::Ex4 { x0 }, hamiltonian: h, expectation, centre: Some(c), distance: Some(df) })
    }

    /// `H = t - f`; `K0 = -sup f`, `K1 = -inf f`, so `inf f <= u <= sup f`.
    pub fn ex5(f: ScalarField) -> Result<Self> {
        let (Some(lo), Some(hi)) = (f.min_finite(), f.max_finite()) else {
            return Err(Error::Input("ex5 needs a finite field f".into()));
        };
        if f.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("ex5 needs a finite field f".into()));
        }
        let values = f.into_values();
        let h = StationaryHamiltonian::new("ex5", -hi, -lo, move |n, t| t - values[n]);
        let expectation = StationaryExpectation { lower: lo, upper: hi, lipschitz: Some(LipschitzRule::Global(hi - lo)) };
        Ok(Self { params: BuiltinParams::Ex5 { f: "<field>".into(), x0: None }, hamiltonian: h, expectation, centre: None, distance: None })
    }
}

/// Catalog row for listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltinInfo {
    pub id: String,
    pub hamiltonian: String,
    pub parameters: Vec<String>,
    pub constraints: String,
    pub k0: String,
    pub k1: String,
    pub bounds: String,
    pub lipschitz: String,
    pub coercivity: String,
}

pub fn catalog() -> Vec<BuiltinInfo> {
    let row = |id: &str, h: &str, params: &[&str], constraints: &str, k0: &str, k1: &str, bounds: &str, lip: &str, coer: &str| BuiltinInfo {
        id: id.into(),
        hamiltonian: h.into(),
        parameters: params.iter().map(|s| s.to_string()).collect(),
        constraints: constraints.into(),
        k0: k0.into(),
        k1: k1.into(),
        bounds: bounds.into(),
        lipschitz: lip.into(),
        coercivity: coer.into(),
    };
    vec![
        row("ex1", "min(t, a) - cos d(x0, x)", &["a", "x0"], "a > 2", "-1", "1", "-1 <= u <= 1", "a", "uniform"),
        row("ex2", "t - cos d(x0, x)", &["x0"], "", "-1", "1", "-1 <= u <= 1", "2", "uniform"),
        row(
            "ex3",
            "min(t, 1) - (a + d(x0, x)) / (b + d(x0, x))",
            &["a", "b", "x0"],
            "0 < a < b",
            "-1",
            "-a/b",
            "a/b <= u <= 1",
            "1 - a/b",
            "uniform",
        ),
        row("ex4", "(1 + 2|t|) / (1 + |t| + d(x0, x))", &["x0"], "", "0", "1", "-1 <= u <= 0", "R in B(x0, R/4)", "locally uniform"),
        row("ex5", "t - f(x)", &["f", "x0 (optional)"], "f bounded", "-sup f", "-inf f", "inf f <= u <= sup f", "sup f - inf f", "uniform"),
    ]
}
