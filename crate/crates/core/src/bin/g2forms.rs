use clap::{Parser, Subcommand, ValueEnum};
use g2forms::cli::builtins::BUILTINS;
use g2forms::cli::report::{self, Report};
use g2forms::cli::scenario::{Overrides, Scenario, Task};
use g2forms::cli::{self, scenario::Operation};
use g2forms::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

/// Directory for reports when `--out` is not given.
const OUT_DIR_ENV: &str = "G2FORMS_OUT_DIR";

#[derive(Parser)]
#[command(name = "g2forms", version, about = "Verification scenarios for closed 3-forms in dimensions 6 and 7")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunArgs {
    /// Scenario JSON file or builtin name.
    scenario: String,
    /// Grid resolution override.
    #[arg(long)]
    grid: Option<usize>,
    /// Finite-difference step override.
    #[arg(long = "fd-step")]
    fd_step: Option<f64>,
    /// Solver tolerance override.
    #[arg(long)]
    tol: Option<f64>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Report path. Defaults to `$G2FORMS_OUT_DIR/<name>.<ext>`, else stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and report its checks. Exit status 0 iff all pass.
    Verify(RunArgs),
    /// List the builtin scenarios.
    ListBuiltins,
    /// Solve a maximal graph problem from a scenario with a `maximal` operation.
    SolveMaximal(RunArgs),
    /// Re-render a saved JSON report.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let errors = match &e {
                Error::Scenario(list) => list.clone(),
                other => vec![other.to_string()],
            };
            println!("{}", report::to_json(&serde_json::json!({ "schema": report::SCHEMA, "errors": errors })));
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> g2forms::Result<bool> {
    match cli.command {
        Command::ListBuiltins => {
            for b in &BUILTINS {
                println!("{:<26} {}", b.name, b.summary);
            }
            Ok(true)
        }
        Command::Verify(args) => verify(&args, false),
        Command::SolveMaximal(args) => verify(&args, true),
        Command::Report { report, format, out } => {
            let text = std::fs::read_to_string(&report).map_err(|e| io_error(&report, e))?;
            let r: Report = serde_json::from_str(&text).map_err(|e| Error::Scenario(vec![format!("invalid report: {e}")]))?;
            emit(&render(&r, format), out.as_deref())?;
            Ok(r.pass)
        }
    }
}

fn load(args: &RunArgs) -> g2forms::Result<Scenario> {
    let overrides = Overrides { grid: args.grid, fd_step: args.fd_step, solver_tol: args.tol, seed: args.seed };
    let path = Path::new(&args.scenario);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Scenario::from_json_str(&text, &overrides)
    } else if g2forms::cli::builtins::find(&args.scenario).is_some() {
        let mut v = Scenario::builtin(&args.scenario);
        overrides.apply(&mut v);
        Scenario::from_value(v)
    } else {
        Err(Error::Scenario(vec![format!("`{}` is neither a scenario file nor a builtin", args.scenario)]))
    }
}

fn verify(args: &RunArgs, maximal_only: bool) -> g2forms::Result<bool> {
    let scenario = load(args)?;
    if maximal_only && !matches!(scenario.task, Task::Operation(Operation::Maximal { .. })) {
        return Err(Error::Scenario(vec!["solve-maximal needs a scenario with a `maximal` operation".into()]));
    }
    let start = Instant::now();
    let report = cli::run(&scenario)?;
    let seconds = start.elapsed().as_secs_f64();
    let ext = if args.format == Format::Csv { "csv" } else { "json" };
    let out = args.out.clone().or_else(|| std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(format!("{}.{ext}", scenario.name))));
    emit(&render(&report, args.format), out.as_deref())?;
    // Timing lives outside the report so reports stay byte-identical across runs.
    let timing = report::to_json(&serde_json::json!({ "scenario": scenario.name, "seconds": seconds }));
    match &out {
        Some(p) => std::fs::write(p.with_extension("timing.json"), timing).map_err(|e| io_error(p, e))?,
        None => eprint!("{timing}"),
    }
    Ok(report.pass)
}

fn render(r: &Report, format: Format) -> String {
    match format {
        Format::Json => r.to_json(),
        Format::Csv => r.to_csv(),
    }
}

fn emit(text: &str, out: Option<&Path>) -> g2forms::Result<()> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            }
            std::fs::write(p, text).map_err(|e| io_error(p, e))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Scenario(vec![format!("{}: {e}", path.display())])
}
