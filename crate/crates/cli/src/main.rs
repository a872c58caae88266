use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use cnls_core::io::{parse_config, run, write_outputs, RunSpec};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Command {
    GroundState,
    SigmaMap,
    ThresholdSweep,
    Semiclassical,
    Validate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::GroundState => "ground-state",
            Command::SigmaMap => "sigma-map",
            Command::ThresholdSweep => "threshold-sweep",
            Command::Semiclassical => "semiclassical",
            Command::Validate => "validate",
        }
    }
}

/// Ground states, ground energy maps and semiclassical continuation for
/// weakly coupled cubic Schrödinger systems.
#[derive(Debug, Parser)]
#[command(name = "cnls", version)]
struct Cli {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(cli: &Cli) -> Result<RunSpec, String> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| format!("cannot read {}: {e}", cli.config.display()))?;
    let spec = parse_config(&text).map_err(|e| e.to_string())?;
    if spec.command() != cli.command.name() {
        return Err(format!(
            "config command `{}` does not match `{}`",
            spec.command(),
            cli.command.name()
        ));
    }
    Ok(spec)
}

fn execute(cli: &Cli, spec: &RunSpec) -> ExitCode {
    let report = match run(spec) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_SOLVER });
        }
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| spec.output_dir().cloned())
        .unwrap_or_else(|| PathBuf::from("cnls-out"));
    match write_outputs(&report, &dir) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_SOLVER);
        }
    }
    if report.success {
        ExitCode::SUCCESS
    } else {
        eprintln!("error: {} finished with failures; see {}", spec.command(), dir.join("report.json").display());
        ExitCode::from(EXIT_SOLVER)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let spec = match load(&cli) {
        Ok(s) => s,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(EXIT_CONFIG);
    }
    #[cfg(feature = "parallel")]
    if let Some(k) = cli.threads {
        return match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| execute(&cli, &spec)),
            Err(e) => {
                eprintln!("error: cannot start {k} threads: {e}");
                ExitCode::from(EXIT_SOLVER)
            }
        };
    }
    execute(&cli, &spec)
}
