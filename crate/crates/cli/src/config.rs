//! The JSON problem description. Unknown keys are rejected everywhere;
//! relative file paths resolve against the directory of the config file.

use std::fs;
use std::path::{Path, PathBuf};

use finsler_hj::builtins::BuiltinParams;
use finsler_hj::suite;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{schema, CliError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub metric: MetricConfig,
    pub grid: GridConfig,
    pub problem: ProblemSpec,
    /// Check names, full or short (`bounds`, `lipschitz`, ...).
    #[serde(default)]
    pub verify: Vec<String>,
    #[serde(default)]
    pub settings: SettingsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A real given as a JSON number or as an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Number(f64),
    Expr(String),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricConfig {
    #[default]
    Euclidean,
    /// `||v||_x = sqrt(v^T A(x) v)`, entries as expressions over `x1, x2`.
    Riemannian { matrix: [[Scalar; 2]; 2] },
    /// `||(w1 v1, w2 v2)||_p`; `p` is a number or `"inf"`.
    WeightedP { p: Exponent, weights: [Scalar; 2] },
    /// `c(x) ||v||_x^base`.
    Scaled { base: Box<MetricConfig>, scale: Scalar },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exponent {
    Finite(f64),
    Named(String),
}

impl Exponent {
    pub fn value(&self) -> Result<f64, CliError> {
        match self {
            Exponent::Finite(p) => Ok(*p),
            Exponent::Named(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
            Exponent::Named(s) => schema(format!("exponent {s:?} is neither a number nor \"inf\"")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    Square(usize),
    Pair([usize; 2]),
}

impl Resolution {
    pub fn pair(self) -> [usize; 2] {
        match self {
            Resolution::Square(n) => [n, n],
            Resolution::Pair(p) => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `[lo1, lo2, hi1, hi2]`.
    pub bounds: [f64; 4],
    pub resolution: Resolution,
    /// Inside where the expression over `x1, x2` is positive.
    #[serde(default)]
    pub mask: Option<String>,
    /// Field file; inside where the value is positive.
    #[serde(default)]
    pub mask_file: Option<PathBuf>,
    #[serde(default = "default_stencil")]
    pub stencil: usize,
}

fn default_stencil() -> usize {
    16
}

/// Node data: a constant, an expression over `x1, x2` (and `d` when `x0` is
/// set), or a field file on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    Constant(f64),
    Expression(String),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProblemSpec {
    Eikonal(EikonalSpec),
    Stationary(StationarySpec),
    Evolution(EvolutionSpec),
    Distance(DistanceSpec),
}

impl ProblemSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ProblemSpec::Eikonal(_) => "eikonal",
            ProblemSpec::Stationary(_) => "stationary",
            ProblemSpec::Evolution(_) => "evolution",
            ProblemSpec::Distance(_) => "distance",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EikonalSpec {
    pub boundary: DataSource,
    /// Solve even when the boundary data is not 1-Lipschitz.
    #[serde(default)]
    pub waive_lipschitz: bool,
    #[serde(default)]
    pub x0: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySpec {
    #[serde(default)]
    pub builtin: Option<BuiltinParams>,
    /// `H` over `t` (gradient magnitude), `x1, x2` and `d`.
    #[serde(default)]
    pub hamiltonian: Option<String>,
    #[serde(default)]
    pub x0: Option<[f64; 2]>,
    /// Defaults to the node minimum of `H(x, 0)`.
    #[serde(default)]
    pub k0: Option<f64>,
    /// Defaults to the node maximum of `H(x, 0)`.
    #[serde(default)]
    pub k1: Option<f64>,
    /// Expected global Lipschitz constant of the solution.
    #[serde(default)]
    pub lipschitz: Option<f64>,
    /// Linear condition (A) certificate `omega(s, r) = s + |r|` with this `C`.
    #[serde(default)]
    pub condition_a: Option<f64>,
    /// Second Hamiltonian for the stability check.
    #[serde(default)]
    pub stability: Option<Perturbation>,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Perturbation {
    /// `H + c`.
    Shift(f64),
    /// An expression in the same variables as the main Hamiltonian.
    Hamiltonian(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_sweeps")]
    pub max_sweeps: usize,
    #[serde(default)]
    pub parallel: bool,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_sweeps() -> usize {
    2000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: default_tol(), max_sweeps: default_sweeps(), parallel: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSpec {
    /// `H` over `t` (time), `m` (gradient magnitude), `x1, x2` and `d`.
    pub hamiltonian: String,
    #[serde(default)]
    pub x0: Option<[f64; 2]>,
    pub initial: DataSource,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Lipschitz constant of `H` in `m`; estimated when absent.
    #[serde(default)]
    pub lipschitz: Option<f64>,
    #[serde(default)]
    pub condition_a: Option<f64>,
    /// Envelope constants; sampled from `H` when absent.
    #[serde(default)]
    pub k0: Option<f64>,
    #[serde(default)]
    pub k1: Option<f64>,
    /// A dominating second run for the comparison and monotonicity checks.
    #[serde(default)]
    pub companion: Option<CompanionSpec>,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_stride() -> usize {
    10
}

/// The companion solves with `H - lower` from data raised by `raise`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompanionSpec {
    #[serde(default)]
    pub lower: f64,
    #[serde(default)]
    pub raise: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSpec {
    pub seeds: Vec<SeedSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub point: [f64; 2],
    #[serde(default)]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingsConfig {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_frame")]
    pub frame: f64,
    #[serde(default)]
    pub deville: Option<DevilleSpec>,
}

fn default_c() -> f64 {
    5.0
}

fn default_frame() -> f64 {
    0.1
}

impl Default for SettingsConfig {
    fn default() -> Self {
        Self { c: default_c(), frame: default_frame(), deville: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DevilleSpec {
    pub centre: [f64; 2],
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: None, formats: default_formats() }
    }
}

/// A validated config together with where its relative paths point.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ProblemConfig,
    pub base: PathBuf,
    /// Hex SHA-256 of the canonical JSON form.
    pub hash: String,
    /// Resolved check names.
    pub checks: Vec<String>,
}

impl Loaded {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Schema(format!("cannot read {}: {e}", path.display())))?;
    let config: ProblemConfig = serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    validate(config, base)
}

/// Checks cross-field constraints, file references and check names.
pub fn validate(config: ProblemConfig, base: PathBuf) -> Result<Loaded, CliError> {
    let canonical = serde_json::to_vec(&serde_json::to_value(&config).expect("config serializes")).expect("config serializes");
    let hash = hex::encode(Sha256::digest(&canonical));
    let checks = resolve_checks(&config.verify, &config.problem)?;
    let loaded = Loaded { config, base, hash, checks };
    let c = &loaded.config;

    let g = &c.grid;
    let [nx, ny] = g.resolution.pair();
    if nx < 3 || ny < 3 {
        return schema(format!("resolution {nx}x{ny} is too coarse (need at least 3 per axis)"));
    }
    if !(g.bounds[0] < g.bounds[2] && g.bounds[1] < g.bounds[3]) {
        return schema(format!("bounds {:?} must be [lo1, lo2, hi1, hi2] with lo < hi", g.bounds));
    }
    if g.mask.is_some() && g.mask_file.is_some() {
        return schema("give at most one of grid.mask and grid.mask_file");
    }
    if ![4, 8, 16].contains(&g.stencil) {
        return schema(format!("stencil order {} is not one of 4, 8, 16", g.stencil));
    }
    let masked = g.mask.is_some() || g.mask_file.is_some();
    let mut files: Vec<&Path> = g.mask_file.iter().map(PathBuf::as_path).collect();
    match &c.problem {
        ProblemSpec::Eikonal(e) => {
            if let DataSource::File(p) = &e.boundary {
                files.push(p);
            }
        }
        ProblemSpec::Stationary(s) => {
            if masked {
                return schema("stationary problems are posed on the full rectangle; remove the mask");
            }
            match (&s.builtin, &s.hamiltonian) {
                (Some(b), None) => {
                    b.validate().map_err(|e| CliError::Schema(e.to_string()))?;
                    if s.x0.is_some() || s.k0.is_some() || s.k1.is_some() || s.lipschitz.is_some() || s.condition_a.is_some() {
                        return schema("builtin problems fix x0, k0, k1, lipschitz and condition_a themselves");
                    }
                }
                (None, Some(_)) => {}
                _ => return schema("a stationary problem needs exactly one of builtin and hamiltonian"),
            }
            if !(s.solver.tol > 0.0) || s.solver.max_sweeps == 0 {
                return schema("solver.tol and solver.max_sweeps must be positive");
            }
        }
        ProblemSpec::Evolution(e) => {
            if masked {
                return schema("evolution problems are posed on the full rectangle; remove the mask");
            }
            if !(e.horizon >= 0.0 && e.horizon.is_finite()) {
                return schema(format!("T must be finite and nonnegative, got {}", e.horizon));
            }
            if let DataSource::File(p) = &e.initial {
                files.push(p);
            }
            if let Some(comp) = &e.companion {
                if comp.lower < 0.0 || comp.raise < 0.0 {
                    return schema("companion.lower and companion.raise must be nonnegative");
                }
            }
        }
        ProblemSpec::Distance(d) => {
            if d.seeds.is_empty() {
                return schema("a distance problem needs at least one seed");
            }
            if !c.verify.is_empty() {
                return schema("distance runs have no checks; remove verify");
            }
        }
    }
    for f in files {
        let full = loaded.resolve(f);
        if !full.is_file() {
            return schema(format!("referenced file {} does not exist", full.display()));
        }
    }
    if c.output.formats.is_empty() {
        return schema("output.formats must not be empty");
    }
    Ok(loaded)
}

/// Expands short names and checks that the problem supplies what each
/// check needs.
pub fn resolve_checks(names: &[String], problem: &ProblemSpec) -> Result<Vec<String>, CliError> {
    names
        .iter()
        .map(|n| {
            let full = resolve_check(n, problem)?;
            match requirement(&full, problem) {
                Some(need) => schema(format!("check {full} needs {need}")),
                None => Ok(full),
            }
        })
        .collect()
}

/// Expands a short check name for the problem kind.
pub fn resolve_check(name: &str, problem: &ProblemSpec) -> Result<String, CliError> {
    if suite::is_known(name) {
        return Ok(name.to_string());
    }
    let full = match (problem.kind(), name) {
        ("eikonal", "boundary" | "lipschitz" | "gradient") => format!("eikonal-{name}"),
        ("stationary", "bounds" | "lipschitz" | "stability") => format!("stationary-{name}"),
        ("evolution", "envelope" | "comparison" | "monotonicity") => format!("evolution-{name}"),
        ("evolution", "hopf-lax") => "hopf-lax-agreement".into(),
        _ => return schema(format!("unknown check {name:?} for a {} problem; known checks: {}", problem.kind(), suite::CHECKS.join(", "))),
    };
    Ok(full)
}

/// What a check needs that the config does not provide, if anything.
fn requirement(check: &str, problem: &ProblemSpec) -> Option<&'static str> {
    let kind = problem.kind();
    match check {
        "eikonal-boundary" | "eikonal-lipschitz" | "eikonal-gradient" if kind != "eikonal" => Some("an eikonal problem"),
        "ridge" | "deville" if kind != "eikonal" && kind != "stationary" => Some("an eikonal or stationary problem"),
        "stationary-bounds" | "stationary-lipschitz" | "coercivity" if kind != "stationary" => Some("a stationary problem"),
        "stationary-lipschitz" => match problem {
            ProblemSpec::Stationary(s) if s.builtin.is_none() && s.lipschitz.is_none() => Some("problem.lipschitz"),
            _ => None,
        },
        "stationary-stability" => match problem {
            ProblemSpec::Stationary(s) if s.stability.is_some() => None,
            _ => Some("a stationary problem with problem.stability"),
        },
        "condition-A" => match problem {
            ProblemSpec::Stationary(s) if s.builtin.is_some() || s.condition_a.is_some() => None,
            ProblemSpec::Evolution(e) if e.condition_a.is_some() => None,
            _ => Some("a builtin or a problem.condition_a certificate"),
        },
        "evolution-envelope" | "hopf-lax-agreement" if kind != "evolution" => Some("an evolution problem"),
        "evolution-comparison" | "evolution-monotonicity" => match problem {
            ProblemSpec::Evolution(e) if e.companion.is_some() => None,
            _ => Some("an evolution problem with problem.companion"),
        },
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Loaded, CliError> {
        let config: ProblemConfig = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        validate(config, PathBuf::from("."))
    }

    const DISK: &str = r#"{
        "grid": {"bounds": [-1, -1, 1, 1], "resolution": 21, "mask": "1 - x1^2 - x2^2"},
        "problem": {"kind": "eikonal", "boundary": {"constant": 0}},
        "verify": ["boundary", "eikonal-gradient"]
    }"#;

    #[test]
    fn short_names_expand() {
        let l = parse(DISK).unwrap();
        assert_eq!(l.checks, ["eikonal-boundary", "eikonal-gradient"]);
        assert_eq!(l.config.grid.stencil, 16);
        assert_eq!(l.config.metric, MetricConfig::Euclidean);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = DISK.replace("\"mask\"", "\"mask_expr\"");
        assert!(matches!(parse(&bad), Err(CliError::Schema(_))));
        let bad = DISK.replace("\"kind\": \"eikonal\",", "\"kind\": \"eikonal\", \"extra\": 1,");
        assert!(matches!(parse(&bad), Err(CliError::Schema(_))));
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = parse(DISK).unwrap().hash;
        let b = parse(&DISK.replace('\n', " ").replace("  ", " ")).unwrap().hash;
        assert_eq!(a, b);
        let c = parse(&DISK.replace("21", "23")).unwrap().hash;
        assert_ne!(a, c);
    }

    #[test]
    fn missing_files_and_requirements() {
        let bad = DISK.replace(r#"{"constant": 0}"#, r#"{"file": "/nonexistent/h.csv"}"#);
        assert!(matches!(parse(&bad), Err(CliError::Schema(m)) if m.contains("does not exist")));
        let bad = DISK.replace("\"boundary\", ", "\"stationary-stability\", ");
        assert!(matches!(parse(&bad), Err(CliError::Schema(m)) if m.contains("needs")));
        let bad = DISK.replace("\"boundary\", ", "\"nonsense\", ");
        assert!(matches!(parse(&bad), Err(CliError::Schema(m)) if m.contains("unknown check")));
    }

    #[test]
    fn stationary_shapes() {
        let builtin = r#"{"grid": {"bounds": [-4, -4, 4, 4], "resolution": [41, 41]},
            "problem": {"kind": "stationary", "builtin": {"id": "ex1", "a": 3, "x0": [0, 0]}}, "verify": ["bounds"]}"#;
        assert_eq!(parse(builtin).unwrap().checks, ["stationary-bounds"]);
        assert!(parse(&builtin.replace("\"a\": 3", "\"a\": 1")).is_err());
        assert!(parse(&builtin.replace("\"a\": 3,", "")).is_err());
        let both = builtin.replace("\"builtin\"", "\"hamiltonian\": \"t\", \"builtin\"");
        assert!(parse(&both).is_err());
        let masked = builtin.replace("[41, 41]", "[41, 41], \"mask\": \"1\"");
        assert!(parse(&masked).is_err());
    }
}
