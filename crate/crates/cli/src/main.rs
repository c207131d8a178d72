use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fhj::config::{self, GridConfig, Loaded, ProblemConfig, ProblemSpec, Resolution, StationarySpec};
use fhj::run::{run, Command};
use fhj::{CliError, EXIT_VERIFY};
use finsler_hj::builtins::{catalog, BuiltinInfo, BuiltinParams};
use serde_json::{json, Map, Value};

/// Solve and verify eikonal and Hamilton-Jacobi problems on Finsler grids.
#[derive(Parser)]
#[command(name = "fhj", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct OutArg {
    /// Output directory; overrides the config and FHJ_OUTPUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Dirichlet eikonal problem from a config.
    SolveEikonal {
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Stationary problem from a config or from builtin flags.
    SolveStationary(StationaryArgs),
    /// Evolution problem from a config.
    SolveEvolution {
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Stencil-graph distance field from a config.
    Distance {
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run checks against a config, optionally on an existing field.
    Verify {
        config: PathBuf,
        /// Field file to check instead of solving (eikonal and stationary).
        #[arg(long)]
        field: Option<PathBuf>,
        /// Comma-separated check names replacing the configured list.
        #[arg(long, value_delimiter = ',')]
        checks: Option<Vec<String>>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Print the built-in stationary problems.
    ListBuiltins {
        /// JSON array instead of a table.
        #[arg(long)]
        json: bool,
        /// Show one problem.
        #[arg(long)]
        id: Option<String>,
    },
}

#[derive(Args)]
struct StationaryArgs {
    /// Config file; conflicts with the builtin flags.
    #[arg(conflicts_with_all = ["builtin"])]
    config: Option<PathBuf>,
    /// Built-in problem id (ex1 .. ex5).
    #[arg(long)]
    builtin: Option<String>,
    /// Reference point `x1,x2`.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// `f` for ex5, an expression over x1, x2 and d.
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// `lo1,lo2,hi1,hi2`.
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    /// Nodes per axis.
    #[arg(long, default_value_t = 101)]
    res: usize,
    /// Comma-separated checks.
    #[arg(long, value_delimiter = ',')]
    verify: Vec<String>,
    #[command(flatten)]
    out: OutArg,
}

fn numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Schema(format!("--{what} {s:?} is not a comma-separated list of numbers")))?;
    if v.len() != n {
        return Err(CliError::Schema(format!("--{what} needs {n} numbers, got {}", v.len())));
    }
    Ok(v)
}

/// Builds the config that the builtin flags describe.
fn flags_config(a: &StationaryArgs) -> Result<Loaded, CliError> {
    let id = a.builtin.as_deref().ok_or_else(|| CliError::Schema("give a config file or --builtin".into()))?;
    let bounds = a.bounds.as_deref().ok_or_else(|| CliError::Schema("--builtin needs --bounds lo1,lo2,hi1,hi2".into()))?;
    let bounds = numbers(bounds, 4, "bounds")?;
    let mut params = Map::new();
    params.insert("id".into(), json!(id));
    match &a.x0 {
        Some(s) => {
            params.insert("x0".into(), json!(numbers(s, 2, "x0")?));
        }
        None if id != "ex5" => {
            params.insert("x0".into(), json!([0.0, 0.0]));
        }
        None => {}
    }
    for (key, v) in [("a", a.a), ("b", a.b)] {
        if let Some(v) = v {
            params.insert(key.into(), json!(v));
        }
    }
    if let Some(f) = &a.f {
        params.insert("f".into(), json!(f));
    }
    let builtin: BuiltinParams = serde_json::from_value(Value::Object(params)).map_err(|e| CliError::Schema(format!("--builtin {id}: {e}")))?;
    let config = ProblemConfig {
        metric: Default::default(),
        grid: GridConfig {
            bounds: [bounds[0], bounds[1], bounds[2], bounds[3]],
            resolution: Resolution::Square(a.res),
            mask: None,
            mask_file: None,
            stencil: 16,
        },
        problem: ProblemSpec::Stationary(StationarySpec {
            builtin: Some(builtin),
            hamiltonian: None,
            x0: None,
            k0: None,
            k1: None,
            lipschitz: None,
            condition_a: None,
            stability: None,
            solver: Default::default(),
        }),
        verify: a.verify.clone(),
        settings: Default::default(),
        output: Default::default(),
    };
    config::validate(config, std::env::current_dir().unwrap_or_default())
}

/// `--out`, then the config, then `FHJ_OUTPUT_DIR`, then `fhj-out`.
fn output_dir(flag: &Option<PathBuf>, loaded: &Loaded) -> PathBuf {
    flag.clone()
        .or_else(|| loaded.config.output.dir.clone())
        .or_else(|| std::env::var_os("FHJ_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fhj-out"))
}

fn execute(loaded: &Loaded, command: Command, out: &Option<PathBuf>) -> Result<ExitCode, CliError> {
    let dir = output_dir(out, loaded);
    let outcome = run(loaded, &command, &dir)?;
    println!("wrote {}", outcome.manifest.display());
    for r in &outcome.reports {
        println!("{} {}", if r.pass { "PASS" } else { "FAIL" }, r.check);
    }
    if outcome.pass() {
        return Ok(ExitCode::SUCCESS);
    }
    let failed: Vec<&str> = outcome.reports.iter().filter(|r| !r.pass).map(|r| r.check.as_str()).collect();
    eprintln!("verification failed: {}", failed.join(", "));
    if let Some(p) = &outcome.report_file {
        eprintln!("reports: {}", p.display());
    }
    eprintln!("manifest: {}", outcome.manifest.display());
    Ok(ExitCode::from(EXIT_VERIFY as u8))
}

fn table(rows: &[BuiltinInfo]) -> String {
    let header = ["id", "hamiltonian", "parameters", "constraints", "K0", "K1", "bounds", "lipschitz", "coercivity"];
    let cells: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            [
                r.id.clone(),
                r.hamiltonian.clone(),
                r.parameters.join(", "),
                r.constraints.clone(),
                r.k0.clone(),
                r.k1.clone(),
                r.bounds.clone(),
                r.lipschitz.clone(),
                r.coercivity.clone(),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..9).map(|k| cells.iter().map(|c| c[k].len()).chain([header[k].len()]).max().unwrap_or(0)).collect();
    let line = |cols: Vec<&str>| cols.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string();
    let mut out = vec![line(header.to_vec())];
    out.extend(cells.iter().map(|c| line(c.iter().map(String::as_str).collect())));
    out.join("\n")
}

fn list_builtins(as_json: bool, id: Option<&str>) -> Result<ExitCode, CliError> {
    let mut rows = catalog();
    if let Some(id) = id {
        rows.retain(|r| r.id == id);
        if rows.is_empty() {
            return Err(CliError::Schema(format!("no built-in problem {id:?}; ids are ex1 .. ex5")));
        }
    }
    if as_json {
        println!("{}", serde_json::to_string_pretty(&rows).expect("catalog serializes"));
    } else {
        println!("{}", table(&rows));
    }
    Ok(ExitCode::SUCCESS)
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    config::load(path)
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Cmd::SolveEikonal { config, out } => execute(&load(&config)?, Command::SolveEikonal, &out.out),
        Cmd::SolveStationary(args) => {
            let loaded = match &args.config {
                Some(p) => load(p)?,
                None => flags_config(&args)?,
            };
            execute(&loaded, Command::SolveStationary, &args.out.out)
        }
        Cmd::SolveEvolution { config, out } => execute(&load(&config)?, Command::SolveEvolution, &out.out),
        Cmd::Distance { config, out } => execute(&load(&config)?, Command::Distance, &out.out),
        Cmd::Verify { config, field, checks, out } => execute(&load(&config)?, Command::Verify { field, checks }, &out.out),
        Cmd::ListBuiltins { json, id } => list_builtins(json, id.as_deref()),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::NotLipschitz { pairs } = &e {
                for p in pairs {
                    eprintln!("  witness: {p}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
