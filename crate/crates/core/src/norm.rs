//! Point-dependent norms `x -> ||.||_x` on a box, their dual norms, and the
//! empirical Palais equivalence ratio.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::Bounds;

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type WeightFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type ScaleFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `(x, v) -> ||v||_x` for norms without a closed-form dual.
pub type CustomNormFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// How a norm field is built.
#[derive(Clone)]
pub enum NormKind {
    Euclidean,
    /// `||v||_x = sqrt(v^T A(x) v)` with `A(x)` symmetric positive definite.
    Riemannian(MatrixFn),
    /// `||v||_x = ||(w_1(x) v_1, ..., w_n(x) v_n)||_p`, `p` in `[1, inf]`.
    WeightedP {
        p: f64,
        weights: WeightFn,
    },
    /// `||v||_x = c(x) ||v||_x^base`.
    Scaled {
        base: Box<NormKind>,
        scale: ScaleFn,
    },
    /// Any symmetric norm given pointwise; the dual norm is found numerically.
    Custom(CustomNormFn),
}

impl fmt::Debug for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormKind::Euclidean => write!(f, "Euclidean"),
            NormKind::Riemannian(_) => write!(f, "Riemannian"),
            NormKind::WeightedP { p, .. } => write!(f, "WeightedP(p={p})"),
            NormKind::Scaled { base, .. } => write!(f, "Scaled({base:?})"),
            NormKind::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A Finsler structure on a box: a continuous field of norms.
#[derive(Clone, Debug)]
pub struct NormField {
    kind: NormKind,
    bounds: Bounds,
}

impl NormField {
    pub fn new(kind: NormKind, bounds: Bounds) -> Self {
        Self { kind, bounds }
    }

    pub fn euclidean(bounds: Bounds) -> Self {
        Self::new(NormKind::Euclidean, bounds)
    }

    pub fn riemannian(bounds: Bounds, metric: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self::new(NormKind::Riemannian(Arc::new(metric)), bounds)
    }

    /// Riemannian field with a diagonal metric `diag(a_1(x), ..., a_n(x))`.
    pub fn diagonal(bounds: Bounds, diag: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::riemannian(bounds, move |x| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag(x))))
    }

    pub fn weighted_p(bounds: Bounds, p: f64, weights: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::new(NormKind::WeightedP { p, weights: Arc::new(weights) }, bounds)
    }

    pub fn scaled(base: NormField, scale: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(NormKind::Scaled { base: Box::new(base.kind), scale: Arc::new(scale) }, base.bounds)
    }

    pub fn custom(bounds: Bounds, norm: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(NormKind::Custom(Arc::new(norm)), bounds)
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    /// The norm frozen at `x`.
    pub fn at(&self, x: &[f64]) -> Result<LocalNorm> {
        self.bounds.check(x)?;
        freeze(&self.kind, x)
    }

    /// `||v||_x`.
    pub fn eval(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        check_vector(v, self.dim())?;
        Ok(self.at(x)?.norm(v))
    }

    /// `||delta||_x^* = sup { delta(v) : ||v||_x <= 1 }`.
    pub fn dual(&self, x: &[f64], delta: &Covector) -> Result<f64> {
        check_vector(&delta.components, self.dim())?;
        Ok(self.at(x)?.dual(&delta.components))
    }
}

fn check_vector(v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::Input(format!("vector has {} components, expected {dim}", v.len())));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::Input(format!("non-finite vector {v:?}")));
    }
    Ok(())
}

fn freeze(kind: &NormKind, x: &[f64]) -> Result<LocalNorm> {
    let n = x.len();
    Ok(match kind {
        NormKind::Euclidean => LocalNorm::Euclidean,
        NormKind::Riemannian(metric) => {
            let a = metric(x);
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::Input(format!("metric at {x:?} is {}x{}, expected {n}x{n}", a.nrows(), a.ncols())));
            }
            let sym = (&a + a.transpose()) * 0.5;
            let chol = sym.clone().cholesky().ok_or_else(|| Error::Metric { point: x.to_vec() })?;
            let inv = chol.inverse();
            LocalNorm::Quadratic { dim: n, metric: sym.transpose().as_slice().to_vec(), inverse: inv.transpose().as_slice().to_vec() }
        }
        NormKind::WeightedP { p, weights } => {
            let w = weights(x);
            if w.len() != n || w.iter().any(|&wi| !(wi > 0.0) || !wi.is_finite()) {
                return Err(Error::Metric { point: x.to_vec() });
            }
            if !(*p >= 1.0) {
                return Err(Error::Input(format!("exponent p = {p} must lie in [1, inf]")));
            }
            LocalNorm::WeightedP { p: *p, weights: w }
        }
        NormKind::Scaled { base, scale } => {
            let c = scale(x);
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Metric { point: x.to_vec() });
            }
            LocalNorm::Scaled { factor: c, base: Box::new(freeze(base, x)?) }
        }
        NormKind::Custom(f) => LocalNorm::Custom { norm: f.clone(), at: x.to_vec() },
    })
}

/// A single norm on the tangent space at a fixed point.
#[derive(Clone)]
pub enum LocalNorm {
    Euclidean,
    /// Row-major metric matrix and its inverse.
    Quadratic {
        dim: usize,
        metric: Vec<f64>,
        inverse: Vec<f64>,
    },
    WeightedP {
        p: f64,
        weights: Vec<f64>,
    },
    Scaled {
        factor: f64,
        base: Box<LocalNorm>,
    },
    Custom {
        norm: CustomNormFn,
        at: Vec<f64>,
    },
}

impl fmt::Debug for LocalNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalNorm::Euclidean => write!(f, "Euclidean"),
            LocalNorm::Quadratic { metric, .. } => write!(f, "Quadratic({metric:?})"),
            LocalNorm::WeightedP { p, weights } => write!(f, "WeightedP({p}, {weights:?})"),
            LocalNorm::Scaled { factor, base } => write!(f, "Scaled({factor}, {base:?})"),
            LocalNorm::Custom { at, .. } => write!(f, "Custom(at {at:?})"),
        }
    }
}

fn quadratic_form(dim: usize, m: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..dim {
        let mut row = 0.0;
        for j in 0..dim {
            row += m[i * dim + j] * v[j];
        }
        s += v[i] * row;
    }
    s.max(0.0)
}

fn weighted_lp(p: f64, scale: impl Fn(usize, f64) -> f64, v: &[f64]) -> f64 {
    if p.is_infinite() {
        v.iter().enumerate().map(|(i, &c)| scale(i, c).abs()).fold(0.0, f64::max)
    } else if p == 1.0 {
        v.iter().enumerate().map(|(i, &c)| scale(i, c).abs()).sum()
    } else if p == 2.0 {
        v.iter().enumerate().map(|(i, &c)| scale(i, c).powi(2)).sum::<f64>().sqrt()
    } else {
        let big = v.iter().enumerate().map(|(i, &c)| scale(i, c).abs()).fold(0.0, f64::max);
        if big == 0.0 {
            return 0.0;
        }
        big * v.iter().enumerate().map(|(i, &c)| (scale(i, c).abs() / big).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

impl LocalNorm {
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self {
            LocalNorm::Euclidean => v.iter().map(|c| c * c).sum::<f64>().sqrt(),
            LocalNorm::Quadratic { dim, metric, .. } => quadratic_form(*dim, metric, v).sqrt(),
            LocalNorm::WeightedP { p, weights } => weighted_lp(*p, |i, c| weights[i] * c, v),
            LocalNorm::Scaled { factor, base } => factor * base.norm(v),
            LocalNorm::Custom { norm, at } => norm(at, v),
        }
    }

    pub fn dual(&self, delta: &[f64]) -> f64 {
        match self {
            LocalNorm::Euclidean => delta.iter().map(|c| c * c).sum::<f64>().sqrt(),
            LocalNorm::Quadratic { dim, inverse, .. } => quadratic_form(*dim, inverse, delta).sqrt(),
            LocalNorm::WeightedP { p, weights } => {
                let q = conjugate_exponent(*p);
                weighted_lp(q, |i, c| c / weights[i], delta)
            }
            LocalNorm::Scaled { factor, base } => base.dual(delta) / factor,
            LocalNorm::Custom { .. } => numeric_dual(|v| self.norm(v), delta),
        }
    }
}

/// `q` with `1/p + 1/q = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// A covector anchored at a point.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Covector {
    pub components: Vec<f64>,
}

impl Covector {
    pub fn new(components: Vec<f64>) -> Self {
        Self { components }
    }

    pub fn zero(dim: usize) -> Self {
        Self { components: vec![0.0; dim] }
    }

    pub fn apply(&self, v: &[f64]) -> f64 {
        self.components.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { components: self.components.iter().map(|c| c * s).collect() }
    }

    pub fn add(&self, other: &Covector) -> Self {
        Self { components: self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Covector) -> Self {
        self.add(&other.scale(-1.0))
    }
}

const DUAL_TOL: f64 = 1e-6;

/// `sup { delta(v) / ||v|| }` for a norm known only through evaluations.
///
/// In 2-D a coarse angular scan is refined by golden-section search around
/// the best few angles; in higher dimension projected gradient ascent on the
/// Euclidean sphere starts from the `2n` signed axes.
pub fn numeric_dual(norm: impl Fn(&[f64]) -> f64, delta: &[f64]) -> f64 {
    let n = delta.len();
    if delta.iter().all(|&c| c == 0.0) {
        return 0.0;
    }
    let ratio = |v: &[f64]| {
        let nv = norm(v);
        if nv > 0.0 {
            delta.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / nv
        } else {
            f64::NEG_INFINITY
        }
    };
    if n == 1 {
        return ratio(&[1.0]).max(ratio(&[-1.0]));
    }
    if n == 2 {
        let at = |theta: f64| ratio(&[theta.cos(), theta.sin()]);
        const SCAN: usize = 720;
        let step = 2.0 * PI / SCAN as f64;
        let mut scan: Vec<(f64, f64)> = (0..SCAN).map(|k| (at(k as f64 * step), k as f64 * step)).collect();
        scan.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut best = scan[0].0;
        for &(_, theta) in scan.iter().take(4) {
            best = best.max(golden_max(&at, theta - step, theta + step, DUAL_TOL * 1e-3));
        }
        return best;
    }
    let mut best = f64::NEG_INFINITY;
    for axis in 0..n {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; n];
            v[axis] = sign;
            best = best.max(ascend_on_sphere(&ratio, v));
        }
    }
    best
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd).max(f(0.5 * (a + b)))
}

fn ascend_on_sphere(ratio: &impl Fn(&[f64]) -> f64, mut v: Vec<f64>) -> f64 {
    let n = v.len();
    let mut value = ratio(&v);
    let mut step = 0.5;
    let fd = 1e-7;
    for _ in 0..2000 {
        let mut grad = vec![0.0; n];
        for i in 0..n {
            let mut w = v.clone();
            w[i] += fd;
            let up = ratio(&w);
            w[i] -= 2.0 * fd;
            grad[i] = (up - ratio(&w)) / (2.0 * fd);
        }
        // tangential component only
        let radial: f64 = grad.iter().zip(&v).map(|(g, x)| g * x).sum();
        for (g, x) in grad.iter_mut().zip(&v) {
            *g -= radial * x;
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        let mut moved = false;
        while step > 1e-12 {
            let mut w: Vec<f64> = v.iter().zip(&grad).map(|(x, g)| x + step * g / gnorm).collect();
            let wn = w.iter().map(|c| c * c).sum::<f64>().sqrt();
            w.iter_mut().for_each(|c| *c /= wn);
            let candidate = ratio(&w);
            if candidate > value {
                v = w;
                value = candidate;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    value
}

/// Empirical `(1 + eps)` of the Palais condition around `x0`: the largest
/// ratio `max(||v||_x / ||v||_x0, ||v||_x0 / ||v||_x)` over sampled points in
/// the Euclidean ball of radius `r` and sampled directions.
pub fn palais_ratio(nf: &NormField, x0: &[f64], r: f64, n_samples: usize) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Input(format!("probe radius {r} must be positive")));
    }
    let n = nf.dim();
    for axis in 0..n {
        for sign in [1.0, -1.0] {
            let mut p = x0.to_vec();
            p[axis] += sign * r;
            nf.bounds().check(&p)?;
        }
    }
    let centre = nf.at(x0)?;
    let points = ball_samples(x0, r, n_samples.max(1));
    let dirs = direction_samples(n, 64);
    let mut worst: f64 = 1.0;
    for p in &points {
        let local = nf.at(p)?;
        for v in &dirs {
            let a = local.norm(v);
            let b = centre.norm(v);
            worst = worst.max(a / b).max(b / a);
        }
    }
    Ok(worst)
}

/// Deterministic sample of the closed Euclidean ball: the centre, the signed
/// axis extremes, a sunflower pattern (2-D) or seeded uniform points.
fn ball_samples(x0: &[f64], r: f64, count: usize) -> Vec<Vec<f64>> {
    let n = x0.len();
    let mut pts = vec![x0.to_vec()];
    for axis in 0..n {
        for sign in [1.0, -1.0] {
            let mut p = x0.to_vec();
            p[axis] += sign * r;
            pts.push(p);
        }
    }
    if n == 2 {
        let golden = PI * (3.0 - 5f64.sqrt());
        for k in 0..count {
            let rho = r * ((k as f64 + 0.5) / count as f64).sqrt();
            let th = k as f64 * golden;
            pts.push(vec![x0[0] + rho * th.cos(), x0[1] + rho * th.sin()]);
        }
        let ring = (count / 4).max(8);
        for k in 0..ring {
            let th = 2.0 * PI * k as f64 / ring as f64;
            pts.push(vec![x0[0] + r * th.cos(), x0[1] + r * th.sin()]);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        while pts.len() < count + 2 * n + 1 {
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
                pts.push(x0.iter().zip(&v).map(|(a, b)| a + r * b).collect());
            }
        }
    }
    pts
}

/// Unit directions: angular fan in 2-D, axes plus seeded random otherwise.
pub(crate) fn direction_samples(n: usize, count: usize) -> Vec<Vec<f64>> {
    if n == 2 {
        return (0..count)
            .map(|k| {
                let th = PI * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect();
    }
    let mut dirs = Vec::new();
    for axis in 0..n {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        dirs.push(v);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1);
    while dirs.len() < count.max(n) {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let len = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if len > 1e-3 {
            dirs.push(v.iter().map(|c| c / len).collect());
        }
    }
    dirs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn plane() -> Bounds {
        Bounds::square(-2.0, 2.0)
    }

    #[test]
    fn closed_form_norms() {
        let e = NormField::euclidean(plane());
        assert_abs_diff_eq!(e.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        let r = NormField::diagonal(plane(), |_| vec![4.0, 1.0]);
        assert_abs_diff_eq!(r.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), 2.0);
        let w = NormField::weighted_p(plane(), 1.0, |_| vec![1.0, 2.0]);
        assert_abs_diff_eq!(w.eval(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 3.0);
    }

    #[test]
    fn closed_form_duals() {
        let e = NormField::euclidean(plane());
        assert_abs_diff_eq!(e.dual(&[0.0, 0.0], &Covector::new(vec![3.0, 4.0])).unwrap(), 5.0);
        let r = NormField::diagonal(plane(), |_| vec![4.0, 1.0]);
        assert_abs_diff_eq!(r.dual(&[0.0, 0.0], &Covector::new(vec![1.0, 0.0])).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn weighted_one_dual_matches_angular_oracle() {
        let w = NormField::weighted_p(plane(), 1.0, |_| vec![1.0, 2.0]);
        let delta = [1.0, 1.0];
        let local = w.at(&[0.0, 0.0]).unwrap();
        // brute force over 10^4 directions
        let oracle = (0..10_000)
            .map(|k| {
                let th = 2.0 * PI * k as f64 / 10_000.0;
                let v = [th.cos(), th.sin()];
                (delta[0] * v[0] + delta[1] * v[1]) / local.norm(&v)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let dual = w.dual(&[0.0, 0.0], &Covector::new(delta.to_vec())).unwrap();
        assert_abs_diff_eq!(dual, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(dual, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn numeric_dual_agrees_with_closed_forms() {
        let kinds = [
            NormField::euclidean(plane()),
            NormField::riemannian(plane(), |_| DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 1.0])),
            NormField::weighted_p(plane(), 3.0, |x| vec![1.0 + x[0].abs(), 0.5]),
            NormField::weighted_p(plane(), f64::INFINITY, |_| vec![1.0, 3.0]),
        ];
        let x = [0.3, -0.4];
        for nf in &kinds {
            let local = nf.at(&x).unwrap();
            for delta in [[1.0, 0.0], [0.3, -2.0], [-1.5, 0.25]] {
                let closed = local.dual(&delta);
                let numeric = numeric_dual(|v| local.norm(v), &delta);
                assert!((closed - numeric).abs() <= 1e-6 * closed.max(1.0), "{nf:?}: {closed} vs {numeric}");
            }
        }
    }

    #[test]
    fn numeric_dual_in_three_dimensions() {
        let b = Bounds::new(vec![-1.0; 3], vec![1.0; 3]).unwrap();
        let nf = NormField::riemannian(b, |_| DMatrix::from_row_slice(3, 3, &[3.0, 0.5, 0.0, 0.5, 2.0, 0.3, 0.0, 0.3, 1.0]));
        let local = nf.at(&[0.0, 0.0, 0.0]).unwrap();
        let delta = [0.4, -1.0, 0.7];
        let closed = local.dual(&delta);
        let numeric = numeric_dual(|v| local.norm(v), &delta);
        assert!((closed - numeric).abs() < 1e-6, "{closed} vs {numeric}");
    }

    #[test]
    fn custom_norm_uses_numeric_dual() {
        let nf = NormField::custom(plane(), |_, v| v[0].abs().max(v[1].abs()) + 0.5 * v[0].abs().min(v[1].abs()));
        let d = nf.dual(&[0.0, 0.0], &Covector::new(vec![1.0, 1.0])).unwrap();
        // unit ball vertex (1/1.5, 1/1.5) maximises delta; value 2/1.5
        assert!((d - 2.0 / 1.5).abs() < 1e-6, "{d}");
    }

    #[test]
    fn errors() {
        let e = NormField::euclidean(plane());
        assert!(matches!(e.eval(&[3.0, 0.0], &[1.0, 0.0]), Err(Error::Domain { .. })));
        assert!(matches!(e.eval(&[0.0, 0.0], &[f64::NAN, 0.0]), Err(Error::Input(_))));
        let bad = NormField::riemannian(plane(), |_| DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(matches!(bad.dual(&[0.0, 0.0], &Covector::zero(2)), Err(Error::Metric { .. })));
    }

    #[test]
    fn palais_ratio_constant_field_is_one() {
        let r = NormField::diagonal(plane(), |_| vec![3.0, 1.0]);
        assert_abs_diff_eq!(palais_ratio(&r, &[0.1, 0.2], 0.5, 200).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn palais_ratio_matches_dense_oracle() {
        let nf = NormField::diagonal(plane(), |x| vec![1.0 + x[0] * x[0], 1.0]);
        let ratio = palais_ratio(&nf, &[0.0, 0.0], 0.1, 2000).unwrap();
        // 10^5 random samples of (x, v)
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let centre = nf.at(&[0.0, 0.0]).unwrap();
        let mut oracle: f64 = 1.0;
        let mut taken = 0;
        while taken < 100_000 {
            let x = [rng.gen_range(-0.1..=0.1), rng.gen_range(-0.1..=0.1)];
            if x[0] * x[0] + x[1] * x[1] > 0.01 {
                continue;
            }
            taken += 1;
            let th: f64 = rng.gen_range(0.0..PI);
            let v = [th.cos(), th.sin()];
            let a = nf.at(&x).unwrap().norm(&v);
            let b = centre.norm(&v);
            oracle = oracle.max(a / b).max(b / a);
        }
        assert!(ratio >= 1.0 && ratio <= 1.01f64.sqrt() + 1e-12);
        assert!((ratio - oracle).abs() < 1e-4, "{ratio} vs {oracle}");
    }

    #[test]
    fn palais_ratio_grows_with_radius() {
        let nf = NormField::diagonal(plane(), |x| vec![1.0 + x[0] * x[0], 1.0 + 0.5 * x[1].sin().powi(2)]);
        let mut last = 1.0;
        for r in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let q = palais_ratio(&nf, &[0.2, 0.1], r, 500).unwrap();
            assert!(q >= last - 1e-15);
            last = q;
        }
        // and tends to one as the probe shrinks
        assert!(palais_ratio(&nf, &[0.2, 0.1], 1e-6, 100).unwrap() - 1.0 < 1e-5);
    }
}
