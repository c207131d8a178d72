//! Finsler lengths of polylines and parametrized curves.

use crate::error::{Error, Result};
use crate::norm::NormField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
pub enum Quadrature {
    #[default]
    Midpoint,
    Simpson,
}

impl Quadrature {
    /// Composite rule for `int_0^1 f` on `panels` equal panels.
    pub fn integrate(self, panels: usize, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
        let panels = panels.max(1);
        let w = 1.0 / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let a = k as f64 * w;
            total += match self {
                Quadrature::Midpoint => w * f(a + 0.5 * w)?,
                Quadrature::Simpson => w / 6.0 * (f(a)? + 4.0 * f(a + 0.5 * w)? + f(a + w)?),
            };
        }
        Ok(total)
    }
}

/// A polyline with the number of quadrature panels used on each segment.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePath {
    vertices: Vec<Vec<f64>>,
    order: usize,
    rule: Quadrature,
}

impl PiecewisePath {
    pub fn new(vertices: Vec<Vec<f64>>, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::Input("quadrature order must be at least 1".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("consecutive path vertices must be distinct".into()));
        }
        Ok(Self { vertices, order, rule: Quadrature::Midpoint })
    }

    pub fn with_rule(mut self, rule: Quadrature) -> Self {
        self.rule = rule;
        self
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }
}

/// `l(c) = sum over segments of int ||c'|| dt`. A single vertex has length 0.
pub fn path_length(nf: &NormField, path: &PiecewisePath) -> Result<f64> {
    for v in &path.vertices {
        nf.bounds().check(v)?;
    }
    let mut total = 0.0;
    for seg in path.vertices.windows(2) {
        let (a, b) = (&seg[0], &seg[1]);
        let d: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
        let mut x = vec![0.0; a.len()];
        total += path.rule.integrate(path.order, |s| {
            for (k, xk) in x.iter_mut().enumerate() {
                *xk = a[k] + s * d[k];
            }
            Ok(nf.at(&x)?.norm(&d))
        })?;
    }
    Ok(total)
}

/// A smooth curve `t -> c(t)` on `[t0, t1]` with its velocity.
pub struct ParametricCurve<P, V> {
    pub position: P,
    pub velocity: V,
    pub t0: f64,
    pub t1: f64,
}

pub fn curve_length<P, V>(nf: &NormField, c: &ParametricCurve<P, V>, order: usize, rule: Quadrature) -> Result<f64>
where
    P: Fn(f64) -> Vec<f64>,
    V: Fn(f64) -> Vec<f64>,
{
    let span = c.t1 - c.t0;
    let integral = rule.integrate(order, |s| {
        let t = c.t0 + s * span;
        Ok(nf.at(&(c.position)(t))?.norm(&(c.velocity)(t)))
    })?;
    Ok(span * integral)
}
