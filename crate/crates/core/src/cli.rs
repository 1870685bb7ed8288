//! Command-line front end: `eval`, `reproduce` and `list-graphs`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::classical::{self, best_response_improve, classical_optimum, StochasticStrategy};
use crate::error::{Error, Result};
use crate::npa::{self, Level, NpaBound};
use crate::rational::{self, Rational};
use crate::sdp;
use crate::seesaw::{self, QuantumRealization, SeesawConfig, Status};
use crate::tables::{self, PublishedRow, PublishedValue, TableId};
use crate::tasks::{build_game, BellGame, StartRule, TaskKind, TaskSpec};

pub const SCHEMA: u32 = 1;
pub const CSV_HEADER: [&str; 12] = [
    "graph", "task", "agents", "start", "symmetric", "R", "C", "seesaw", "npa", "level", "advantage_pct", "status",
];
/// Slack for the `R <= C <= Q <= NPA` ordering check.
pub const ORDERING_SLACK: f64 = 1e-5;
/// Tolerance for comparing computed NPA bounds to printed ones.
pub const NPA_TOLERANCE: f64 = 1e-4;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "belltasks", version, about = "Classical, random and quantum values of rendezvous and domination tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute R, C, the see-saw value and an NPA bound for one game.
    Eval(EvalArgs),
    /// Recompute one table of published values and compare.
    Reproduce(ReproduceArgs),
    /// List the graph catalog.
    ListGraphs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Embedded,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// SDP solver; the BELLTASKS_SOLVER environment variable overrides it.
    #[arg(long, value_enum, default_value = "embedded")]
    pub solver: SolverChoice,
    /// External solver command, run as `<command> <input.dat-s> <output>`;
    /// its output must use SDPA's `objValPrimal`/`objValDual` lines.
    #[arg(long, env = "BELLTASKS_SOLVER_CMD")]
    pub solver_command: Option<String>,
}

impl SolverArgs {
    /// The effective solver after applying the environment override.
    pub fn resolve(&self) -> Result<SolverChoice> {
        match std::env::var("BELLTASKS_SOLVER") {
            Ok(v) if !v.trim().is_empty() => SolverChoice::from_str(v.trim(), true)
                .map_err(|_| Error::InvalidParameter(format!("BELLTASKS_SOLVER must be embedded or external, got `{v}`"))),
            _ => Ok(self.solver),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Catalog name, parametric name (`7-gon`, `5-line curly`) or edge-list file.
    #[arg(long)]
    pub graph: String,
    #[arg(long, default_value = "rendezvous")]
    pub task: TaskKind,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub agents: u8,
    #[arg(long, default_value = "any")]
    pub start: StartRule,
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    /// Restrict every agent to the same strategy.
    #[arg(long)]
    pub symmetric: bool,
    #[arg(long, default_value = "1+ab")]
    pub npa_level: Level,
    /// Local dimension for the see-saw; defaults to the vertex count.
    #[arg(long)]
    pub seesaw_dim: Option<usize>,
    #[arg(long, default_value_t = 100)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the relaxation in SDPA sparse format.
    #[arg(long)]
    pub export_sdpa: Option<PathBuf>,
    /// Only export the relaxation; skip NPA solving and the see-saw.
    #[arg(long, requires = "export_sdpa")]
    pub export_sdpa_only: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Skip the see-saw search.
    #[arg(long)]
    pub no_seesaw: bool,
    /// Skip the NPA bound.
    #[arg(long)]
    pub no_npa: bool,
    /// Write the best see-saw realization as JSON.
    #[arg(long)]
    pub dump_realization: Option<PathBuf>,
    /// Load figure-derived graphs even when they fail verification.
    #[arg(long)]
    pub allow_unverified: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// Table number, 1 to 5.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    pub table: u8,
    /// CSV output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for exported `.dat-s` files; defaults to `<out>.sdpa/`.
    #[arg(long)]
    pub export_dir: Option<PathBuf>,
    /// Rows computed concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// See-saw restarts per row; 0 skips the see-saw and the advantage.
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rows whose graph has more vertices are not solved in-process.
    #[arg(long, default_value_t = 13)]
    pub max_vertices: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

/// A rational reported both exactly and as a rounded decimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactValue {
    pub exact: String,
    pub decimal: f64,
    /// Set when only a lower bound could be computed.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lower_bound: bool,
}

fn round6(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

impl ExactValue {
    pub fn new(v: &Rational, lower_bound: bool) -> ExactValue {
        ExactValue { exact: rational::format(v), decimal: round6(rational::to_f64(v)), lower_bound }
    }

    pub fn rational(&self) -> Result<Rational> {
        rational::parse(&self.exact)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub classical_s: f64,
    pub npa_s: f64,
    pub seesaw_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: u32,
    pub graph: String,
    pub task: TaskSpec,
    #[serde(rename = "R")]
    pub random: ExactValue,
    #[serde(rename = "C")]
    pub classical: ExactValue,
    pub seesaw: Option<f64>,
    pub npa: Option<f64>,
    pub level: Option<Level>,
    pub npa_certified: Option<bool>,
    pub advantage_pct: Option<f64>,
    pub status: Status,
    /// Set when the computed values break `R <= C <= Q <= NPA`.
    pub ordering_violation: Option<String>,
    pub notes: Vec<String>,
    pub timings: Timings,
    pub seed: u64,
    pub version: String,
}

/// The fixed-column CSV view of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub graph: String,
    pub task: TaskKind,
    pub agents: usize,
    pub start: StartRule,
    pub symmetric: bool,
    #[serde(rename = "R")]
    pub random: String,
    /// Prefixed with `>=` when only a lower bound is known.
    #[serde(rename = "C")]
    pub classical: String,
    pub seesaw: Option<f64>,
    pub npa: Option<f64>,
    pub level: Option<Level>,
    pub advantage_pct: Option<f64>,
    pub status: Status,
}

impl ResultRecord {
    pub fn csv_row(&self) -> CsvRow {
        CsvRow {
            graph: self.graph.clone(),
            task: self.task.kind,
            agents: self.task.agents,
            start: self.task.start,
            symmetric: self.task.symmetric_only,
            random: self.random.exact.clone(),
            classical: if self.classical.lower_bound {
                format!(">={}", self.classical.exact)
            } else {
                self.classical.exact.clone()
            },
            seesaw: self.seesaw,
            npa: self.npa,
            level: self.level,
            advantage_pct: self.advantage_pct,
            status: self.status,
        }
    }

    /// Checks `R <= C <= Q <= NPA` on the values present.
    pub fn check_ordering(&self) -> Option<String> {
        let mut chain = vec![("R", self.random.decimal), ("C", self.classical.decimal)];
        if let Some(q) = self.seesaw {
            chain.push(("seesaw", q));
        }
        if let Some(b) = self.npa {
            chain.push(("npa", b));
        }
        let broken: Vec<String> = chain
            .windows(2)
            .filter(|w| w[0].1 > w[1].1 + ORDERING_SLACK)
            .filter(|w| !(self.classical.lower_bound && w[0].0 == "C"))
            .map(|w| format!("{} = {} exceeds {} = {}", w[0].0, w[0].1, w[1].0, w[1].1))
            .collect();
        (!broken.is_empty()).then(|| broken.join("; "))
    }

    pub fn exit_code(&self) -> i32 {
        if self.status == Status::Inconclusive {
            EXIT_INCONCLUSIVE
        } else {
            EXIT_OK
        }
    }
}

pub fn write_csv<W: std::io::Write>(out: W, records: &[ResultRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<CsvRow>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::parse(1, format!("unexpected CSV header `{}`", header.join(","))));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// `100 (Q - C) / (C - R)`.
pub fn advantage(r: f64, c: f64, q: f64) -> Result<f64> {
    if c <= r {
        return Err(Error::UndefinedAdvantage { random: r, classical: c });
    }
    Ok(100.0 * (q - c) / (c - r))
}

/// Integer display of an advantage percentage. Halves round up after
/// trimming solver noise below `1e-3` percent.
pub fn display_advantage(pct: f64) -> String {
    let trimmed = (pct * 1e3).round() / 1e3;
    format!("{}", (trimmed + 0.5).floor() as i64)
}

/// Classical optimum, or a best-response lower bound when the exhaustive
/// search is over budget. Returns the value, whether it is only a bound, and
/// the strategies reaching it.
pub fn classical_value(game: &BellGame) -> Result<(Rational, bool, Vec<StochasticStrategy>)> {
    match classical_optimum(game, game.spec().symmetric_only) {
        Ok(opt) => {
            let s = opt.strategies.iter().map(|s| StochasticStrategy::from_deterministic(game, s)).collect();
            Ok((opt.value, false, s))
        }
        Err(Error::TooLarge(_)) if !game.spec().symmetric_only => {
            let u = StochasticStrategy::uniform(game);
            let run = best_response_improve(game, &vec![u; game.parties()])?;
            let s = run.strategies.iter().map(|s| StochasticStrategy::from_deterministic(game, s)).collect();
            Ok((run.value().clone(), true, s))
        }
        Err(e) => Err(e),
    }
}

fn external_solve(command: &str, problem: &sdp::SdpProblem) -> Result<sdp::SdpSolution> {
    let dir = tempfile::tempdir()?;
    let input = dir.path().join("problem.dat-s");
    let output = dir.path().join("problem.out");
    fs::write(&input, sdp::export_sdpa(problem))?;
    let mut parts = command.split_whitespace();
    let program = parts
        .next()
        .ok_or_else(|| Error::InvalidParameter("the external solver command is empty".into()))?;
    let status = Process::new(program).args(parts).arg(&input).arg(&output).status()?;
    if !status.success() {
        return Err(Error::Solver(format!("`{command}` exited with {status}")));
    }
    sdp::import_sdpa_solution(&fs::read_to_string(&output)?)
}

/// NPA bound with the chosen solver.
pub fn solve_npa(game: &BellGame, level: Level, solver: &SolverArgs) -> Result<NpaBound> {
    match solver.resolve()? {
        SolverChoice::Embedded => npa::npa_bound(game, level, 1e-8),
        SolverChoice::External => {
            let command = solver.solver_command.as_deref().ok_or_else(|| {
                Error::InvalidParameter("--solver external needs --solver-command or BELLTASKS_SOLVER_CMD".into())
            })?;
            let (rel, p) = npa::build_relaxation(game, level)?;
            let sol = external_solve(command, &p)?;
            let mut b = npa::bound_from_solution(&rel, &sol)?;
            b.constraints = p.m();
            Ok(b)
        }
    }
}

/// Runs `eval`; the realization is returned alongside the record.
pub fn run_eval(args: &EvalArgs) -> Result<(ResultRecord, Option<QuantumRealization>, BellGame)> {
    let g = catalog::load_graph(&args.graph, args.allow_unverified)?;
    let spec = TaskSpec::new(args.task, args.agents as usize, args.start)
        .with_steps(args.steps)
        .symmetric(args.symmetric);
    let game = build_game(&g, &spec)?;
    let mut notes = Vec::new();
    let mut timings = Timings::default();

    let t = Instant::now();
    let r = classical::random_value(&game);
    let (c, c_bound, c_strategies) = classical_value(&game)?;
    if c_bound {
        notes.push("exhaustive classical search over budget; C is a best-response lower bound".into());
    }
    timings.classical_s = t.elapsed().as_secs_f64();

    if let Some(path) = &args.export_sdpa {
        let (_, p) = npa::build_relaxation(&game, args.npa_level)?;
        fs::write(path, sdp::export_sdpa(&p))?;
        notes.push(format!("relaxation written to {}", path.display()));
    }

    let mut npa_bound = None;
    if !args.export_sdpa_only && !args.no_npa {
        let t = Instant::now();
        match solve_npa(&game, args.npa_level, &args.solver) {
            Ok(b) => npa_bound = Some(b),
            Err(Error::TooLarge(msg)) => notes.push(format!("NPA not solved in-process: {msg}")),
            Err(e) => return Err(e),
        }
        timings.npa_s = t.elapsed().as_secs_f64();
    }

    let mut realization = None;
    if !args.export_sdpa_only && !args.no_seesaw {
        let t = Instant::now();
        let cfg = SeesawConfig {
            d: args.seesaw_dim.unwrap_or(game.inputs()),
            restarts: args.restarts,
            seed: args.seed,
            symmetric: args.symmetric,
            ..SeesawConfig::for_game(&game)
        };
        let starts: Vec<QuantumRealization> =
            QuantumRealization::from_classical(&game, &c_strategies, cfg.d).into_iter().collect();
        match seesaw::optimize_with_starts(&game, &cfg, &starts) {
            Ok(res) => {
                if args.symmetric {
                    notes.push(format!("largest marginal difference between agents: {:.3e}", res.marginal_distance));
                }
                realization = Some(res.realization);
            }
            Err(Error::TooLarge(msg)) => notes.push(format!("see-saw skipped: {msg}")),
            Err(e) => return Err(e),
        }
        timings.seesaw_s = t.elapsed().as_secs_f64();
    }

    let (rf, cf) = (rational::to_f64(&r), rational::to_f64(&c));
    let q = realization.as_ref().map(|q| q.value);
    let advantage_pct = match q {
        Some(q) if cf > rf => Some(advantage(rf, cf, q)?),
        _ => None,
    };
    let status = if args.export_sdpa_only {
        Status::ExportOnly
    } else {
        seesaw::classify(cf, q, npa_bound.as_ref().map(|b| b.value))
    };
    let mut record = ResultRecord {
        schema: SCHEMA,
        graph: g.name().to_string(),
        task: spec,
        random: ExactValue::new(&r, false),
        classical: ExactValue::new(&c, c_bound),
        seesaw: q,
        npa: npa_bound.as_ref().map(|b| b.value),
        level: npa_bound.as_ref().map(|b| b.level),
        npa_certified: npa_bound.as_ref().map(|b| b.certified),
        advantage_pct,
        status,
        ordering_violation: None,
        notes,
        timings,
        seed: args.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    record.ordering_violation = record.check_ordering();
    Ok((record, realization, game))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"))
}

pub fn render_table(rec: &ResultRecord) -> String {
    let mut s = String::new();
    let t = &rec.task;
    s += &format!(
        "{} | {} | agents {} | start {} | steps {}{}\n",
        rec.graph,
        t.kind,
        t.agents,
        t.start,
        t.steps,
        if t.symmetric_only { " | symmetric" } else { "" }
    );
    s += &format!("R          {} ({:.6})\n", rec.random.exact, rec.random.decimal);
    s += &format!(
        "C          {}{} ({:.6})\n",
        if rec.classical.lower_bound { ">= " } else { "" },
        rec.classical.exact,
        rec.classical.decimal
    );
    s += &format!("see-saw    {}\n", fmt_opt(rec.seesaw));
    s += &format!(
        "NPA        {}{}\n",
        fmt_opt(rec.npa),
        rec.level.map(|l| format!(" (level {l})")).unwrap_or_default()
    );
    s += &format!(
        "advantage  {}\n",
        rec.advantage_pct.map_or("-".into(), |a| format!("{a:.4}% (displays {})", display_advantage(a)))
    );
    s += &format!("status     {}\n", rec.status);
    if let Some(v) = &rec.ordering_violation {
        s += &format!("WARNING    ordering violated: {v}\n");
    }
    for n in &rec.notes {
        s += &format!("note       {n}\n");
    }
    s
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn eval_command(args: &EvalArgs) -> Result<i32> {
    let (rec, realization, game) = run_eval(args)?;
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&rec)? + "\n",
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, std::slice::from_ref(&rec))?;
            String::from_utf8(buf).expect("CSV is UTF-8")
        }
        Format::Table => render_table(&rec),
    };
    emit(&text, args.out.as_deref())?;
    if let (Some(path), Some(q)) = (&args.dump_realization, &realization) {
        fs::write(path, serde_json::to_string_pretty(&q.to_dump(&game)?)?)?;
    }
    Ok(rec.exit_code())
}

/// One line of the reproduction CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub table: u8,
    pub graph: String,
    pub quantity: String,
    pub published: String,
    pub computed: String,
    pub abs_diff: Option<f64>,
    /// `match`, `mismatch`, `export-only` or `unavailable`.
    pub status: String,
}

fn exact_row(row: &PublishedRow, quantity: &str, published: PublishedValue, computed: &Rational, lower_bound: bool) -> ComparisonRow {
    let diff = (published.to_f64() - rational::to_f64(computed)).abs();
    let ok = !lower_bound && published.matches(computed);
    ComparisonRow {
        table: row.table.number(),
        graph: row.graph.into(),
        quantity: quantity.into(),
        published: published.to_string(),
        computed: format!("{}{}", if lower_bound { ">=" } else { "" }, rational::format(computed)),
        abs_diff: Some(diff),
        status: if ok { "match" } else { "mismatch" }.into(),
    }
}

fn other_row(row: &PublishedRow, quantity: &str, published: String, computed: Option<f64>, ok: impl Fn(f64) -> bool, diff: impl Fn(f64) -> f64, missing: &str) -> ComparisonRow {
    ComparisonRow {
        table: row.table.number(),
        graph: row.graph.into(),
        quantity: quantity.into(),
        published,
        computed: computed.map_or_else(String::new, |v| format!("{v:.6}")),
        abs_diff: computed.map(&diff),
        status: match computed {
            Some(v) if ok(v) => "match".into(),
            Some(_) => "mismatch".into(),
            None => missing.into(),
        },
    }
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

/// Recomputes one published row. Rows too large for the embedded solver get
/// their relaxation exported to `export_dir` instead.
pub fn reproduce_row(row: &PublishedRow, args: &ReproduceArgs, export_dir: &Path) -> Result<Vec<ComparisonRow>> {
    let g = catalog::load_graph(row.graph, true)?;
    let game = build_game(&g, &row.table.spec())?;
    let r = classical::random_value(&game);
    let (c, c_bound, c_strategies) = classical_value(&game)?;
    let mut out = vec![
        exact_row(row, "R", row.random_value(), &r, false),
        exact_row(row, "C", row.classical_value(), &c, c_bound),
    ];

    let level = if row.npa_level2 { Level::Two } else { Level::OnePlusAb };
    let (_, problem) = npa::build_relaxation(&game, level)?;
    let fits = problem.total_dimension() <= sdp::MAX_DIMENSION
        && problem.m() <= sdp::MAX_CONSTRAINTS
        && g.n() <= args.max_vertices;
    let external = args.solver.resolve()? == SolverChoice::External;
    let bound = if fits || external {
        match solve_npa(&game, level, &args.solver) {
            Ok(b) => Some(b.value),
            Err(Error::TooLarge(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    if bound.is_none() {
        fs::create_dir_all(export_dir)?;
        let path = export_dir.join(format!("table{}_{}_level{}.dat-s", row.table.number(), file_stem(row.graph), level));
        fs::write(path, sdp::export_sdpa(&problem))?;
    }
    let published_npa = row.npa_value();
    out.push(other_row(
        row,
        if row.npa_level2 { "NPA level 2" } else { "NPA" },
        published_npa.to_string(),
        bound,
        |v| (v - published_npa.to_f64()).abs() <= NPA_TOLERANCE,
        |v| (v - published_npa.to_f64()).abs(),
        "export-only",
    ));

    let mut q = None;
    if args.restarts > 0 {
        let cfg = SeesawConfig { restarts: args.restarts, seed: args.seed, ..SeesawConfig::for_game(&game) };
        let starts: Vec<QuantumRealization> =
            QuantumRealization::from_classical(&game, &c_strategies, cfg.d).into_iter().collect();
        match seesaw::optimize_with_starts(&game, &cfg, &starts) {
            Ok(res) => q = Some(res.value),
            Err(Error::TooLarge(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let (rf, cf) = (rational::to_f64(&r), rational::to_f64(&c));
    let adv = q.and_then(|q| advantage(rf, cf, q).ok());
    let printed = row.advantage_value();
    out.push(other_row(
        row,
        "advantage",
        row.advantage.to_string(),
        adv,
        |v| (v - printed).abs() <= 0.51,
        |v| (v - printed).abs(),
        "unavailable",
    ));
    Ok(out)
}

/// Runs every row of `args.table`, writing each finished row to
/// `<out>.partial` and then the ordered CSV to `out`.
pub fn reproduce(args: &ReproduceArgs) -> Result<Vec<ComparisonRow>> {
    let table = TableId::from_number(args.table)?;
    let export_dir = args.export_dir.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".sdpa");
        PathBuf::from(p)
    });
    let rows: Vec<&PublishedRow> = tables::rows(table).collect();
    let partial_path = {
        let mut p = args.out.clone().into_os_string();
        p.push(".partial");
        PathBuf::from(p)
    };
    let partial = Mutex::new(fs::File::create(&partial_path)?);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<ComparisonRow>>> = pool.install(|| {
        rows.par_iter()
            .map(|row| {
                let res = reproduce_row(row, args, &export_dir);
                if let Ok(lines) = &res {
                    let mut buf = Vec::new();
                    {
                        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
                        for l in lines {
                            w.serialize(l)?;
                        }
                        w.flush()?;
                    }
                    let mut f = partial.lock().expect("partial file lock");
                    f.write_all(&buf)?;
                    f.flush()?;
                }
                res
            })
            .collect()
    });
    let mut all = Vec::new();
    for r in results {
        all.extend(r?);
    }
    let tmp = {
        let mut p = args.out.clone().into_os_string();
        p.push(".tmp");
        PathBuf::from(p)
    };
    {
        let mut w = csv::Writer::from_path(&tmp)?;
        for row in &all {
            w.serialize(row)?;
        }
        w.flush()?;
    }
    fs::rename(&tmp, &args.out)?;
    fs::remove_file(&partial_path)?;
    Ok(all)
}

pub fn summarize(rows: &[ComparisonRow]) -> String {
    let count = |s: &str| rows.iter().filter(|r| r.status == s).count();
    let mut text = format!(
        "{} comparisons: {} match, {} mismatch, {} export-only, {} unavailable\n",
        rows.len(),
        count("match"),
        count("mismatch"),
        count("export-only"),
        count("unavailable")
    );
    for r in rows.iter().filter(|r| r.status == "mismatch") {
        text += &format!("  mismatch: {} {}: published {} computed {}\n", r.graph, r.quantity, r.published, r.computed);
    }
    text
}

/// Parses `argv` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Eval(a) => eval_command(a),
        Command::Reproduce(a) => reproduce(a).map(|rows| {
            print!("{}", summarize(&rows));
            EXIT_OK
        }),
        Command::ListGraphs => catalog::list_graphs().map(|t| {
            print!("{t}");
            EXIT_OK
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advantage_formula() {
        assert!((advantage(1.0 / 3.0, 5.0 / 9.0, 7.0 / 12.0).unwrap() - 12.5).abs() < 1e-9);
        assert_eq!(display_advantage(12.5), "13");
        assert!((advantage(0.25, 1.0 / 3.0, 0.5).unwrap() - 200.0).abs() < 1e-9);
        assert!(matches!(advantage(0.2, 0.2, 0.3), Err(Error::UndefinedAdvantage { .. })));
    }

    #[test]
    fn flags_parse() {
        let cli = Cli::try_parse_from([
            "belltasks", "eval", "--graph", "triangle", "--task", "domination", "--start", "distinct", "--npa-level", "2",
            "--agents", "3", "--format", "json",
        ])
        .unwrap();
        let Command::Eval(a) = cli.command else { panic!() };
        assert_eq!(a.task, TaskKind::Domination);
        assert_eq!(a.npa_level, Level::Two);
        assert_eq!(a.agents, 3);
        assert!(Cli::try_parse_from(["belltasks", "eval", "--graph", "x", "--agents", "4"]).is_err());
        assert!(Cli::try_parse_from(["belltasks", "eval", "--graph", "x", "--export-sdpa-only"]).is_err());
    }
}
