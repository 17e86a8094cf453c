//! `repgame`: solve, sweep, simulate and inspect the catalog games.

mod lambda;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lambda::Lambda;
use repgame::analytics::{self, Method, Sequence, SweepOptions, SweepReport};
use repgame::belief::{reduce, reduce_exact, Belief};
use repgame::catalog;
use repgame::dp::{discounted_value, finite_horizon, named_values, ViOptions};
use repgame::simulator::{simulate, StrategySpec, StrategyTable};
use repgame::verify;
use repgame::GameSpec;

#[derive(Parser)]
#[command(name = "repgame", version, about = "Zero-sum repeated games with public signals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discounted or n-stage values on the belief chain of a game.
    Solve(SolveArgs),
    /// Closed-form and/or value-iteration values over a list of discount factors.
    Sweep(SweepArgs),
    /// Monte Carlo estimate of the discounted payoff of a strategy pair.
    Simulate(SimulateArgs),
    /// Enumerate the belief chain of a game.
    Reduce(ReduceArgs),
    /// List or print the built-in games.
    Catalog(CatalogArgs),
    /// Run the acceptance checks and print one line per criterion.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GameArgs {
    /// Catalog game name.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    game: Option<String>,
    /// Chain-length parameter of `gamma_r`.
    #[arg(long)]
    r: Option<u32>,
    /// Game description in JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
}

impl GameArgs {
    fn load(&self) -> Result<GameSpec, Failure> {
        match (&self.game, &self.spec) {
            (Some(name), _) => Ok(catalog::entry(name, self.r).map_err(|e| Failure::new("catalog", e))?.spec),
            (None, Some(path)) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
                GameSpec::from_json(&text).map_err(|e| Failure::new("spec", e))
            }
            (None, None) => Err(Failure::new("usage", "either --game or --spec is required")),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Discount factor: `2^-k`, `a/b` or a decimal.
    #[arg(long, conflicts_with = "horizon", required_unless_present = "horizon")]
    lambda: Option<Lambda>,
    /// Number of stages, for the n-stage game.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 4096)]
    max_nodes: usize,
    /// Leave beliefs reached with at most this probability unexpanded.
    #[arg(long, default_value_t = 0.0)]
    tail_mass: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 20_000_000)]
    max_iterations: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SequenceArg {
    #[value(name = "lambda_m")]
    LambdaM,
    #[value(name = "mu_m")]
    MuM,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    ClosedForm,
    ValueIteration,
    Both,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    /// `gamma` or `gamma_r`.
    #[arg(long)]
    game: String,
    #[arg(long)]
    r: Option<u32>,
    /// Comma-separated discount factors.
    #[arg(long, value_delimiter = ',', conflicts_with = "sequence", required_unless_present = "sequence")]
    lambda: Vec<Lambda>,
    /// `lambda_m = 2^{-4mr-1}` or `mu_m = 2^{-4mr-2r-1}`.
    #[arg(long, value_enum, requires_all = ["m_from", "m_to"])]
    sequence: Option<SequenceArg>,
    #[arg(long)]
    m_from: Option<u32>,
    #[arg(long)]
    m_to: Option<u32>,
    #[arg(long, value_enum, default_value = "closed-form")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, default_value_t = 4096)]
    max_nodes: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 20_000_000)]
    max_iterations: u64,
    #[arg(long, default_value_t = analytics::DEFAULT_N_MAX)]
    n_max: u32,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Player 1: `s:<a>`, `s:never`, `sigma*`, `informed-sigma*`.
    #[arg(long, required_unless_present = "sigma_table", conflicts_with = "sigma_table")]
    sigma: Option<String>,
    /// Player 2: `t:<b>`, `t:never`, `tau*`, `informed-tau*`.
    #[arg(long, required_unless_present = "tau_table", conflicts_with = "tau_table")]
    tau: Option<String>,
    /// Player 1 strategy as a JSON table `{"states": {..}, "default": [..]}`.
    #[arg(long)]
    sigma_table: Option<PathBuf>,
    #[arg(long)]
    tau_table: Option<PathBuf>,
    #[arg(long)]
    lambda: Lambda,
    #[arg(long, default_value_t = 100_000)]
    episodes: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to the smallest horizon with discounted tail at most 1e-9.
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value_t = 4096)]
    max_nodes: usize,
    #[arg(long, default_value_t = 0.0, conflicts_with = "exact")]
    tail_mass: f64,
    /// Fail unless the whole reachable belief set fits in --max-nodes.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CatalogArgs {
    /// Print the catalog names.
    #[arg(long, conflicts_with = "dump", required_unless_present = "dump")]
    list: bool,
    /// Print one game as JSON.
    #[arg(long)]
    dump: Option<String>,
    #[arg(long)]
    r: Option<u32>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated criteria to run, e.g. `A1,A5`. Default: all.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(kind: &'static str, message: impl ToString) -> Self {
        Failure {
            kind,
            message: message.to_string(),
        }
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::new("io", format!("{}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new("io", e)),
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn vi_options(tol: f64, max_iterations: u64) -> Result<ViOptions, Failure> {
    if !(tol > 0.0) || max_iterations == 0 {
        return Err(Failure::new("usage", "--tol and --max-iterations must be positive"));
    }
    Ok(ViOptions {
        tol,
        max_iterations,
        ..ViOptions::default()
    })
}

fn solve_cmd(a: &SolveArgs) -> Result<(), Failure> {
    let spec = a.game.load()?;
    let root = Belief::initial(&spec).map_err(|e| Failure::new("belief", e))?;
    let chain = reduce(&spec, &root, a.max_nodes, a.tail_mass).map_err(|e| Failure::new("belief", e))?;
    let base = json!({
        "game": spec.name,
        "nodes": chain.len(),
        "boundary_nodes": chain.boundary_count(),
        "root": chain.labels[0],
    });
    let mut out = base.as_object().cloned().expect("object");
    if let Some(lambda) = &a.lambda {
        let s = discounted_value(&chain, lambda.value, &vi_options(a.tol, a.max_iterations)?)
            .map_err(|e| Failure::new("solver", e))?;
        out.insert("lambda".into(), json!(lambda.text));
        out.insert("lambda_value".into(), json!(lambda.value));
        out.insert("value".into(), json!(s.value.root()));
        out.insert("error_bound".into(), json!(s.value.error_bound));
        out.insert("iterations".into(), json!(s.value.iterations));
        out.insert("converged".into(), json!(s.value.converged));
        out.insert("values".into(), json!(named_values(&chain, &s.value.values)));
    } else if let Some(n) = a.horizon {
        let fh = finite_horizon(&chain, n).map_err(|e| Failure::new("solver", e))?;
        let last = &fh.values[n - 1];
        out.insert("horizon".into(), json!(n));
        out.insert("value".into(), json!(last[0]));
        out.insert("error_bound".into(), json!(fh.error_bounds[n - 1]));
        out.insert("values".into(), json!(named_values(&chain, last)));
    }
    emit(&a.output, &pretty(&Value::Object(out)))
}

fn sweep_csv(report: &SweepReport, with_discrepancy: bool) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["lambda", "value", "a_star", "b_star", "method", "error_bound"];
    if with_discrepancy {
        header.push("discrepancy");
    }
    w.write_record(&header).map_err(|e| Failure::new("io", e))?;
    let opt = |v: Option<u32>| v.map_or(String::new(), |v| v.to_string());
    for row in &report.rows {
        let mut rec = vec![
            format!("{:e}", row.lambda),
            row.value.to_string(),
            opt(row.a_star),
            opt(row.b_star),
            row.method.tag().to_string(),
            format!("{:e}", row.error_bound),
        ];
        if with_discrepancy {
            rec.push(row.discrepancy.map_or(String::new(), |d| format!("{d:e}")));
        }
        w.write_record(&rec).map_err(|e| Failure::new("io", e))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new("io", e))?;
    String::from_utf8(bytes).map_err(|e| Failure::new("io", e))
}

fn sweep_cmd(a: &SweepArgs) -> Result<(), Failure> {
    let lambdas: Vec<f64> = match a.sequence {
        Some(seq) => {
            let r = a.r.unwrap_or(1);
            let (from, to) = (a.m_from.unwrap_or(1), a.m_to.unwrap_or(1));
            if from > to {
                return Err(Failure::new("usage", "--m-from must not exceed --m-to"));
            }
            let kind = match seq {
                SequenceArg::LambdaM => Sequence::LambdaM,
                SequenceArg::MuM => Sequence::MuM,
            };
            let ls = analytics::sequence(kind, r, from, to);
            if ls.iter().any(|&l| l == 0.0) {
                return Err(Failure::new("usage", "sequence underflows double precision"));
            }
            ls
        }
        None => a.lambda.iter().map(|l| l.value).collect(),
    };
    let method = match a.method {
        MethodArg::ClosedForm => Method::ClosedForm,
        MethodArg::ValueIteration => Method::ValueIteration,
        MethodArg::Both => Method::Both,
    };
    let opts = SweepOptions {
        n_max: a.n_max,
        max_nodes: a.max_nodes,
        vi: vi_options(a.tol, a.max_iterations)?,
    };
    let r = if a.game == "gamma_r" { a.r } else { a.r.filter(|&r| r != 1) };
    let report = analytics::sweep(&a.game, r, &lambdas, method, &opts).map_err(|e| Failure::new("analytics", e))?;
    let text = match a.format {
        Format::Csv => sweep_csv(&report, method == Method::Both)?,
        Format::Json => pretty(&serde_json::to_value(&report).map_err(|e| Failure::new("io", e))?),
    };
    emit(&a.output, &text)
}

fn strategy(text: &Option<String>, table: &Option<PathBuf>) -> Result<StrategySpec, Failure> {
    match (text, table) {
        (Some(s), _) => s.parse().map_err(|e| Failure::new("strategy", e)),
        (None, Some(path)) => {
            let raw = fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
            let t: StrategyTable = serde_json::from_str(&raw).map_err(|e| Failure::new("strategy", e))?;
            Ok(StrategySpec::Table(t))
        }
        (None, None) => Err(Failure::new("usage", "a strategy is required for each player")),
    }
}

fn simulate_cmd(a: &SimulateArgs) -> Result<(), Failure> {
    let spec = a.game.load()?;
    let sigma = strategy(&a.sigma, &a.sigma_table)?;
    let tau = strategy(&a.tau, &a.tau_table)?;
    let r = simulate(&spec, &sigma, &tau, a.lambda.value, a.episodes, a.horizon, a.seed)
        .map_err(|e| Failure::new("simulator", e))?;
    let mut v = serde_json::to_value(&r).map_err(|e| Failure::new("io", e))?;
    v["game"] = json!(spec.name);
    v["lambda"] = json!(a.lambda.text);
    emit(&a.output, &pretty(&v))
}

fn reduce_cmd(a: &ReduceArgs) -> Result<(), Failure> {
    let spec = a.game.load()?;
    let root = Belief::initial(&spec).map_err(|e| Failure::new("belief", e))?;
    let chain = if a.exact {
        reduce_exact(&spec, &root, a.max_nodes)
    } else {
        reduce(&spec, &root, a.max_nodes, a.tail_mass)
    }
    .map_err(|e| Failure::new("belief", e))?;
    emit(&a.output, &pretty(&chain.to_json()))
}

fn catalog_cmd(a: &CatalogArgs) -> Result<(), Failure> {
    if a.list {
        return emit(&None, &catalog::NAMES.join("\n"));
    }
    let name = a.dump.as_deref().expect("clap requires --list or --dump");
    let e = catalog::entry(name, a.r).map_err(|e| Failure::new("catalog", e))?;
    emit(&None, &e.spec.to_json())
}

fn verify_cmd(a: &VerifyArgs) -> Result<bool, Failure> {
    let ids: Vec<String> = if a.only.is_empty() {
        verify::IDS.iter().map(|s| s.to_string()).collect()
    } else {
        a.only.iter().map(|s| s.trim().to_uppercase()).collect()
    };
    let mut results = Vec::new();
    for id in &ids {
        let r = verify::run(id).ok_or_else(|| Failure::new("usage", format!("unknown criterion {id:?}")))?;
        if a.format != Some(Format::Json) {
            println!("{}", r.line());
        }
        results.push(r);
    }
    if a.format == Some(Format::Json) {
        let summary: BTreeMap<&str, bool> = results.iter().map(|r| (r.id.as_str(), r.passed)).collect();
        emit(&None, &pretty(&json!({ "results": results, "passed": summary })))?;
    }
    Ok(results.iter().all(|r| r.passed))
}

fn report(f: &Failure) {
    eprintln!("{}", json!({ "error": f.kind, "message": f.message }));
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report(&Failure::new("usage", e.to_string().trim_end()));
            return ExitCode::from(2);
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => solve_cmd(a).map(|_| true),
        Command::Sweep(a) => sweep_cmd(a).map(|_| true),
        Command::Simulate(a) => simulate_cmd(a).map(|_| true),
        Command::Reduce(a) => reduce_cmd(a).map(|_| true),
        Command::Catalog(a) => catalog_cmd(a).map(|_| true),
        Command::Verify(a) => verify_cmd(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            report(&f);
            ExitCode::from(2)
        }
    }
}
