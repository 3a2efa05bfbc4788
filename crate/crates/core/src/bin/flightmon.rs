use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context as _};
use clap::{Args, Parser, Subcommand, ValueEnum};

use flightmon::analysis::{analyze, face_scaling_report, render_scaling_table, AnalyzedSpec};
use flightmon::fence::{generate_fence_spec, Polygon, DEFAULT_EPSILON};
use flightmon::frontend::parse_spec;
use flightmon::trace::{
    parse_binding, replay, JsonLinesSink, ReplayMode, ReplayOptions, TimeUnit, TraceReader, TraceSchema,
};

/// Stream-based runtime monitor for flight sensor logs.
#[derive(Parser)]
#[command(name = "flightmon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a specification and print its resource report.
    Analyze {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table, env = "FLIGHTMON_FORMAT")]
        format: Format,
    },
    /// Replay a trace against a specification.
    Replay(ReplayArgs),
    /// Replay with --strict: exit 3 if any violation fired.
    Check(ReplayArgs),
    /// Generate a geo-fence specification from a polygon file.
    FenceGen {
        polygon: PathBuf,
        #[arg(long, default_value_t = DEFAULT_EPSILON, env = "FLIGHTMON_EPSILON")]
        epsilon: f64,
        /// Output file; standard output when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the resource report of a spec, or the face-scaling table.
    Report {
        #[arg(required_unless_present = "scaling", conflicts_with = "scaling")]
        spec: Option<PathBuf>,
        /// Face counts as `A..B` (inclusive), a single number, or a comma list.
        #[arg(long)]
        scaling: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Table, env = "FLIGHTMON_FORMAT")]
        format: Format,
    },
}

#[derive(Args)]
struct ReplayArgs {
    spec: PathBuf,
    trace: PathBuf,
    #[arg(long, default_value = "time", env = "FLIGHTMON_TIME_COLUMN")]
    time_column: String,
    /// Unit of the time column: s, ms, us or ns.
    #[arg(long, default_value = "s", env = "FLIGHTMON_TIME_UNIT")]
    time_unit: TimeUnit,
    /// Bind a trace column to an input stream, `column=stream`; repeatable.
    #[arg(long = "bind", value_parser = parse_binding)]
    bindings: Vec<(String, String)>,
    #[arg(long, value_enum, default_value_t = Mode::Fast, env = "FLIGHTMON_MODE")]
    mode: Mode,
    /// Read the trace on a separate thread.
    #[arg(long)]
    pipeline: bool,
    /// Shuffle evaluation order within layers.
    #[arg(long)]
    seed: Option<u64>,
    /// Verdict file; verdicts go to standard output and the summary to
    /// standard error when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Exit with status 3 when a VIOLATION trigger fired or a fault occurred.
    #[arg(long)]
    strict: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fast,
    Realtime,
}

enum Failure {
    Analysis(Vec<String>),
    Usage(anyhow::Error),
    Violations,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Analysis(diagnostics)) => {
            for d in diagnostics {
                eprintln!("{d}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Violations) => ExitCode::from(3),
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Analyze { spec, format } => {
            let spec = load_spec(&spec)?;
            print_report(&spec, format)
        }
        Command::Report { spec: Some(spec), format, .. } => {
            let spec = load_spec(&spec)?;
            print_report(&spec, format)
        }
        Command::Report { scaling, format, .. } => {
            let sizes = parse_sizes(scaling.as_deref().unwrap_or_default())?;
            let rows = face_scaling_report(&sizes).map_err(|e| Failure::Analysis(vec![e]))?;
            let text = match format {
                Format::Table => render_scaling_table(&rows),
                Format::Json => rows.iter().map(|r| serde_json::to_string(r).expect("rows serialize") + "\n").collect(),
            };
            write_stdout(&text)
        }
        Command::FenceGen { polygon, epsilon, out } => {
            if !(epsilon > 0.0 && epsilon.is_finite()) {
                return Err(anyhow!("epsilon must be positive, got {epsilon}").into());
            }
            let text = read(&polygon)?;
            let poly = Polygon::parse(&text).with_context(|| format!("invalid polygon {}", polygon.display()))?;
            let spec = generate_fence_spec(&poly, epsilon).context("invalid polygon")?;
            match out {
                Some(path) => std::fs::write(&path, spec).with_context(|| format!("writing {}", path.display()))?,
                None => write_stdout(&spec)?,
            }
            Ok(())
        }
        Command::Replay(args) => run_replay(args, false),
        Command::Check(args) => run_replay(args, true),
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_spec(path: &Path) -> Result<AnalyzedSpec, Failure> {
    let text = read(path)?;
    let name = path.display();
    let ast = parse_spec(&text).map_err(|e| Failure::Analysis(vec![format!("{name}:{e}")]))?;
    analyze(&ast).map_err(|errs| Failure::Analysis(errs.iter().map(|e| format!("{name}:{e}")).collect()))
}

fn write_stdout(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).context("writing to standard output")?;
    Ok(())
}

fn print_report(spec: &AnalyzedSpec, format: Format) -> Result<(), Failure> {
    match format {
        Format::Table => write_stdout(&spec.report.render_table()),
        Format::Json => write_stdout(&spec.report.render_json_lines()),
    }
}

fn parse_sizes(text: &str) -> anyhow::Result<Vec<usize>> {
    let text = text.trim();
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().with_context(|| format!("invalid range `{text}`"))?;
        let b: usize = b.trim().trim_start_matches('=').parse().with_context(|| format!("invalid range `{text}`"))?;
        if a > b {
            bail!("empty range `{text}`");
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().with_context(|| format!("invalid face count `{s}`"))).collect()
}

fn run_replay(args: ReplayArgs, check: bool) -> Result<(), Failure> {
    let spec = load_spec(&args.spec)?;
    let schema = TraceSchema { time_column: args.time_column, unit: args.time_unit, bindings: args.bindings };
    let file = File::open(&args.trace).with_context(|| format!("opening {}", args.trace.display()))?;
    let reader = TraceReader::new(io::BufReader::new(file), &spec, &schema)
        .with_context(|| format!("trace {}", args.trace.display()))?;
    let options = ReplayOptions {
        mode: match args.mode {
            Mode::Fast => ReplayMode::Fast,
            Mode::Realtime => ReplayMode::Realtime,
        },
        pipeline: args.pipeline,
        permutation_seed: args.seed,
    };
    let (summary, to_stdout) = match &args.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut sink = JsonLinesSink::new(BufWriter::new(f));
            let summary = replay(&spec, reader, options, &mut sink).context("replay failed")?;
            sink.into_inner().flush().context("writing verdicts")?;
            (summary, true)
        }
        None => {
            let mut sink = JsonLinesSink::new(BufWriter::new(io::stdout().lock()));
            let summary = replay(&spec, reader, options, &mut sink).context("replay failed")?;
            sink.into_inner().flush().context("writing verdicts")?;
            (summary, false)
        }
    };
    let text = summary.render(&spec);
    if to_stdout {
        write_stdout(&text)?;
    } else {
        eprint!("{text}");
    }
    let violated = summary.faults > 0
        || summary
            .per_trigger
            .iter()
            .enumerate()
            .any(|(k, n)| *n > 0 && spec.streams[spec.trigger_stream(k).0].message.starts_with("VIOLATION"));
    if (check || args.strict) && violated {
        return Err(Failure::Violations);
    }
    Ok(())
}
