//! `plderive` command line. Results go to `out`, diagnostics and conflict
//! trails to `err`; the return value is the process exit status.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use plderive::compiler::BoundDirection;
use plderive::io::{parse_any_draft, parse_lexicon, parse_requirements, SourceDocument};
use plderive::matcher::{match_requirements, Lexicon, Metric, Thresholds};
use plderive::rational::{format_decimal, parse_decimal};
use plderive::solver::{self, Conflict, Depth, Direction, Objective, SolutionCursor, SolverError};
use plderive::validator::validate;
use plderive::{compile, dump, ConstraintSystem, FeatureModel, ModelError, PartialConfiguration, Rational, State};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_UNSAT: i32 = 2;
pub const EXIT_USAGE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "plderive", version, about = "Product-line requirements derivation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model and list its diagnostics
    Validate { model: PathBuf },
    /// Enumerate or count configurations
    Solve {
        model: PathBuf,
        #[command(flatten)]
        partial: PartialArgs,
        #[command(flatten)]
        mode: SolveMode,
    },
    /// Find a configuration optimizing an attribute total
    Optimize {
        model: PathBuf,
        #[arg(long)]
        attr: String,
        #[arg(long, conflicts_with = "max")]
        min: bool,
        #[arg(long)]
        max: bool,
        #[command(flatten)]
        partial: PartialArgs,
        /// `attr<=value` or `attr>=value`; repeatable
        #[arg(long = "bound", value_name = "BOUND")]
        bounds: Vec<String>,
    },
    /// Show forced and open features for a partial configuration
    Consequences {
        model: PathBuf,
        #[command(flatten)]
        partial: PartialArgs,
        #[arg(long, value_enum, default_value = "probing")]
        depth: DepthArg,
    },
    /// Print the compiled constraint system
    Compile { model: PathBuf },
    /// Match stakeholder requirements against feature terms
    Match {
        model: PathBuf,
        #[arg(long)]
        reqs: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value = "dice")]
        metric: Metric,
        #[arg(long)]
        threshold: Option<String>,
        #[arg(long)]
        gap: Option<String>,
    },
    /// Run the HTTP service
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Directory whose model files are loaded at startup
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct PartialArgs {
    #[arg(long = "select", value_name = "FEATURE")]
    select: Vec<String>,
    #[arg(long = "exclude", value_name = "FEATURE")]
    exclude: Vec<String>,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct SolveMode {
    #[arg(long)]
    first: bool,
    #[arg(long)]
    all: bool,
    #[arg(long)]
    count: bool,
    #[arg(long, value_name = "N")]
    limit: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DepthArg {
    Propagation,
    Probing,
}

/// A failed command: exit status plus what to print on the diagnostic stream.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    fn unsat(conflict: &Conflict) -> Self {
        Failure::new(EXIT_UNSAT, format!("no configuration exists\n{}", conflict.explain().trim_end()))
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Unsat(conflict) => Failure::unsat(&conflict),
            SolverError::UnknownFeature(_) | SolverError::UnknownAttribute(_) | SolverError::Contradictory(_) => {
                Failure::new(EXIT_USAGE, e.to_string())
            }
            SolverError::StaleCursor | SolverError::Overflow(_) => Failure::new(EXIT_INVALID, e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_IO, e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Validate { model } => cmd_validate(&model, out),
        Command::Solve { model, partial, mode } => cmd_solve(&model, &partial, &mode, out),
        Command::Optimize { model, attr, min: _, max, partial, bounds } => {
            let direction = if max { Direction::Maximize } else { Direction::Minimize };
            cmd_optimize(&model, &attr, direction, &partial, &bounds, out)
        }
        Command::Consequences { model, partial, depth } => {
            let depth = match depth {
                DepthArg::Propagation => Depth::Propagation,
                DepthArg::Probing => Depth::Probing,
            };
            cmd_consequences(&model, &partial, depth, out)
        }
        Command::Compile { model } => load(&model).and_then(|m| Ok(write!(out, "{}", dump(&compile(&m)))?)),
        Command::Match { model, reqs, lexicon, metric, threshold, gap } => {
            cmd_match(&model, &reqs, lexicon.as_deref(), metric, threshold.as_deref(), gap.as_deref(), out)
        }
        Command::Serve { port, host, models } => cmd_serve(&host, port, models.as_deref(), err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            if !f.message.is_empty() {
                let _ = writeln!(err, "{}", f.message);
            }
            f.code
        }
    }
}

fn read(path: &Path) -> Result<SourceDocument, Failure> {
    SourceDocument::read(path).map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", path.display())))
}

/// Reads and builds a model; parse and structural errors exit with 1.
fn load(path: &Path) -> Result<FeatureModel, Failure> {
    let doc = read(path)?;
    let draft = parse_any_draft(&doc).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    draft.build().map_err(|e| match e {
        ModelError::Invalid(diagnostics) => {
            Failure::new(EXIT_INVALID, diagnostics.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))
        }
        other => Failure::new(EXIT_INVALID, other.to_string()),
    })
}

fn partial(model: &FeatureModel, args: &PartialArgs) -> Result<PartialConfiguration, Failure> {
    let mut p = PartialConfiguration::empty();
    let decisions = args.select.iter().map(|f| (f, State::In)).chain(args.exclude.iter().map(|f| (f, State::Out)));
    for (name, state) in decisions {
        let feature =
            model.feature(name).ok_or_else(|| Failure::new(EXIT_USAGE, format!("unknown feature `{name}`")))?;
        if p.state_of(name).is_some_and(|s| s != state) {
            return Err(Failure::new(EXIT_USAGE, format!("feature `{name}` is both selected and excluded")));
        }
        p.decide(feature.id.clone(), state).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    }
    Ok(p)
}

fn cmd_validate(path: &Path, out: &mut dyn Write) -> CmdResult {
    let doc = read(path)?;
    let draft = parse_any_draft(&doc).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let (validation, _) = validate(&draft);
    for d in &validation.diagnostics {
        writeln!(out, "{d}")?;
    }
    if validation.has_errors() {
        Err(Failure::new(EXIT_INVALID, ""))
    } else {
        Ok(())
    }
}

fn cmd_solve(path: &Path, args: &PartialArgs, mode: &SolveMode, out: &mut dyn Write) -> CmdResult {
    let model = load(path)?;
    let p = partial(&model, args)?;
    let system = compile(&model);
    if mode.count {
        let n = solver::count(&system, &p)?;
        writeln!(out, "{n}")?;
        return if n == 0 { Err(unsat_after_search(&system, &p)) } else { Ok(()) };
    }
    let limit = match (mode.all, mode.limit) {
        (true, _) => u64::MAX,
        (_, Some(n)) => n,
        _ => 1,
    };
    let mut cursor = SolutionCursor::new(&system, &p)?;
    let mut delivered = 0;
    while delivered < limit {
        let Some(config) = cursor.next(&system)? else { break };
        writeln!(out, "{config}")?;
        delivered += 1;
    }
    if delivered == 0 && limit > 0 {
        return Err(unsat_after_search(&system, &p));
    }
    Ok(())
}

fn unsat_after_search(system: &ConstraintSystem, p: &PartialConfiguration) -> Failure {
    match solver::first_solution(system, p) {
        Err(e) => e.into(),
        Ok(_) => Failure::new(EXIT_UNSAT, "no configuration exists"),
    }
}

fn parse_bound(text: &str) -> Result<(String, BoundDirection, Rational), Failure> {
    let usage = || Failure::new(EXIT_USAGE, format!("bad bound `{text}`: expected attr<=value or attr>=value"));
    let (attr, direction, value) = if let Some((a, v)) = text.split_once("<=") {
        (a, BoundDirection::AtMost, v)
    } else if let Some((a, v)) = text.split_once(">=") {
        (a, BoundDirection::AtLeast, v)
    } else {
        return Err(usage());
    };
    let value = parse_decimal(value.trim()).ok_or_else(usage)?;
    Ok((attr.trim().to_owned(), direction, value))
}

fn cmd_optimize(
    path: &Path,
    attr: &str,
    direction: Direction,
    args: &PartialArgs,
    bounds: &[String],
    out: &mut dyn Write,
) -> CmdResult {
    let model = load(path)?;
    let p = partial(&model, args)?;
    let mut system = compile(&model);
    for b in bounds {
        let (name, dir, value) = parse_bound(b)?;
        system.add_attribute_bound(&name, dir, &value)?;
    }
    let objective = Objective::attribute(&system, attr, direction)?;
    let best = solver::optimize(&system, &p, &objective)?;
    writeln!(out, "{} | {attr} = {}", best.configuration, format_decimal(&best.value))?;
    Ok(())
}

fn join<'a>(ids: impl IntoIterator<Item = &'a plderive::FeatureId>) -> String {
    ids.into_iter().map(|f| format!(" {f}")).collect()
}

fn cmd_consequences(path: &Path, args: &PartialArgs, depth: Depth, out: &mut dyn Write) -> CmdResult {
    let model = load(path)?;
    let p = partial(&model, args)?;
    let c = solver::consequences(&compile(&model), &p, depth)?;
    if let Some(conflict) = c.conflict() {
        return Err(Failure::unsat(conflict));
    }
    writeln!(out, "in:{}", join(&c.all_in()))?;
    writeln!(out, "out:{}", join(&c.all_out()))?;
    writeln!(out, "open:{}", join(&c.open))?;
    Ok(())
}

fn cmd_match(
    path: &Path,
    reqs: &Path,
    lexicon: Option<&Path>,
    metric: Metric,
    threshold: Option<&str>,
    gap: Option<&str>,
    out: &mut dyn Write,
) -> CmdResult {
    let model = load(path)?;
    let reqs = parse_requirements(&read(reqs)?).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let lexicon = match lexicon {
        Some(p) => parse_lexicon(&read(p)?).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?,
        None => Lexicon::default(),
    };
    let decimal = |flag: &str, text: Option<&str>, default: Rational| match text {
        None => Ok(default),
        Some(t) => {
            parse_decimal(t).ok_or_else(|| Failure::new(EXIT_USAGE, format!("--{flag}: `{t}` is not a decimal")))
        }
    };
    let defaults = Thresholds::default();
    let thresholds =
        Thresholds::new(decimal("threshold", threshold, defaults.matched)?, decimal("gap", gap, defaults.gap)?)
            .map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    let report = match_requirements(&reqs, &model, &lexicon, metric, &thresholds)
        .map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    write!(out, "{}", report.render())?;
    Ok(())
}

fn cmd_serve(host: &str, port: u16, models: Option<&Path>, err: &mut dyn Write) -> CmdResult {
    let state = plderive_service::AppState::new();
    if let Some(dir) = models {
        let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| Failure::new(EXIT_IO, format!("{}: {e}", dir.display())))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for file in files {
            match state.load_model(&read(&file)?) {
                Ok((id, _)) => writeln!(err, "loaded {} as model {id}", file.display())?,
                Err(e) => writeln!(err, "skipped {}: {}", file.display(), e.message)?,
            }
        }
    }
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port))
            .await
            .map_err(|e| Failure::new(EXIT_IO, format!("cannot listen on {host}:{port}: {e}")))?;
        writeln!(err, "listening on {}", listener.local_addr()?)?;
        err.flush()?;
        plderive_service::serve(listener, state).await?;
        Ok(())
    })
}
