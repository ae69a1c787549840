use clap::{Parser, Subcommand, ValueEnum};
use qtotal_cli::builtins::BuiltinRegistry;
use qtotal_cli::checks::CheckOptions;
use qtotal_cli::document::{ScenarioDoc, StateDoc};
use qtotal_cli::error::CliError;
use qtotal_cli::report::Report;
use qtotal_cli::sweep::{run_sweep, SweepRange};
use std::path::PathBuf;

/// Two-time conditional probabilities for POVM measurements and checks of
/// the quantum law of total probability.
#[derive(Parser)]
#[command(name = "qtotal", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks declared in a scenario file.
    Run {
        /// Path to a JSON scenario document.
        file: PathBuf,
        /// Comma-separated check names overriding the file's own list.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
        /// Tolerance for condition verdicts.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Seed forwarded to sampling checks.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep a builtin parameter across a grid and run one check per point.
    Sweep {
        /// Path to a scenario file, or a builtin name.
        target: String,
        #[arg(long)]
        param: String,
        /// Grid as start:stop:steps (steps = number of points).
        #[arg(long)]
        range: String,
        #[arg(long)]
        check: String,
        #[arg(long, value_enum, default_value_t = OutputFormat::Table)]
        format: OutputFormat,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Seed forwarded to sampling checks.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List the builtin scenarios and their parameters.
    List,
}

fn emit(report: &Report, format: OutputFormat) {
    let text = match format {
        OutputFormat::Table => report.to_table_string(),
        OutputFormat::Csv => report.to_csv_string(),
        OutputFormat::Json => report.to_json_string(),
    };
    print!("{text}");
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            file,
            checks,
            format,
            tol,
            seed,
        } => {
            let opts = CheckOptions { tol, seed };
            let report = qtotal_cli::run_scenario_file(&file, &checks, &opts)?;
            emit(&report, format);
            Ok(())
        }
        Command::Sweep {
            target,
            param,
            range,
            check,
            format,
            tol,
            seed: _seed,
        } => {
            let registry = BuiltinRegistry::standard();
            let doc = if std::path::Path::new(&target).is_file() {
                qtotal_cli::document::load_document(std::path::Path::new(&target))?
            } else if registry.get(&target).is_ok() {
                ScenarioDoc {
                    state: Some(StateDoc {
                        builtin: Some(target.clone()),
                        ..Default::default()
                    }),
                    ..Default::default()
                }
            } else {
                return Err(CliError::UnknownScenario { name: target });
            };
            let range = SweepRange::parse(&range)?;
            let report = run_sweep(&doc, &registry, &param, range, &check, tol)?;
            emit(&report, format);
            Ok(())
        }
        Command::List => {
            let registry = BuiltinRegistry::standard();
            for builtin in registry.entries() {
                println!("{}: {}", builtin.name(), builtin.summary());
                for p in builtin.params_doc() {
                    println!("    {} (default {}): {}", p.name, p.default, p.doc);
                }
                let checks: Vec<String> = builtin
                    .default_checks()
                    .iter()
                    .map(|c| c.name.clone())
                    .collect();
                println!("    default checks: {}", checks.join(", "));
            }
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
