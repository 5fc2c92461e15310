use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use unwrap_dd::phase::CostScheme;
use unwrap_dd_cli::commands::{self, bench_csv, trace_csv};
use unwrap_dd_cli::field_file::write_atomic;
use unwrap_dd_cli::{CliError, ExperimentConfig, SolverChoice};

/// Phase unwrapping with redundant arcs by dual decomposition.
///
/// Exit codes: 0 success, 1 usage error, 2 input error, 3 nonconvergence or
/// failed verification. UNWRAP_DD_THREADS caps worker threads.
#[derive(Parser)]
#[command(name = "unwrap-dd", version)]
struct Cli {
    /// Experiment config file, TOML (.toml) or JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one field file per (shape, size, noise level, instance).
    Generate(#[command(flatten)] Overrides),
    /// Unwrap a field file; writes <out>.result.json and <out>.report.json.
    Unwrap {
        field: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Output prefix; defaults to the field path without extension.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Timing table (CSV) over the configured sweep.
    Bench {
        /// Defaults to <output_dir>/bench.csv.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Per-iteration dual evolution (CSV) of one run.
    Trace {
        field: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a quick oracle and invariant suite.
    Verify {
        #[arg(long, default_value_t = 10)]
        instances: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Redundant arc level (0, 1 or 2); defaults to the first configured.
    #[arg(short = 'r', long)]
    arc_level: Option<u8>,
    /// Defaults to the first configured solver.
    #[arg(long, value_enum)]
    solver: Option<SolverChoice>,
}

/// Flags mirroring the config fields; each replaces the loaded value.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long, value_delimiter = ',')]
    shapes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    noise_levels: Option<Vec<f64>>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    arc_levels: Option<Vec<u8>>,
    #[arg(long, value_delimiter = ',', value_enum)]
    solvers: Option<Vec<SolverChoice>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha0: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    epsilon_factor: Option<u32>,
    #[arg(long)]
    cost_scheme: Option<CostScheme>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Overrides {
    fn apply(self, c: &mut ExperimentConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f { c.$f = v; } )*};
        }
        set!(
            shapes, sizes, noise_levels, instances, arc_levels, solvers, seed, alpha0,
            max_iterations, window, epsilon_factor, cost_scheme, output_dir
        );
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("UNWRAP_DD_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("UNWRAP_DD_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn load(path: Option<&PathBuf>, overrides: Overrides) -> Result<ExperimentConfig, CliError> {
    let mut c = match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    overrides.apply(&mut c);
    c.validate()?;
    Ok(c)
}

fn resolve(run: &RunArgs, c: &ExperimentConfig) -> (u8, SolverChoice) {
    (
        run.arc_level.unwrap_or(c.arc_levels[0]),
        run.solver.unwrap_or(c.solvers[0]),
    )
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Generate(overrides) => {
            let c = load(cli.config.as_ref(), overrides)?;
            let paths = commands::generate(&c)?;
            println!("wrote {} field files to {}", paths.len(), c.output_dir.display());
        }
        Command::Unwrap { field, run, out, overrides } => {
            let c = load(cli.config.as_ref(), overrides)?;
            let (r, solver) = resolve(&run, &c);
            let prefix = out.unwrap_or_else(|| field.with_extension(""));
            let s = commands::unwrap(&field, r, solver, &c, &prefix)?;
            let inc = s
                .inconsistency
                .map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}%"));
            println!(
                "{} r={}: objective {:.6}, {} iterations, inconsistency {inc}",
                solver.name(),
                s.arc_level,
                s.objective,
                s.iterations
            );
            if !s.converged {
                return Err(CliError::Nonconvergence(format!(
                    "iteration cap of {} reached before convergence",
                    c.max_iterations
                )));
            }
        }
        Command::Bench { out, overrides } => {
            let c = load(cli.config.as_ref(), overrides)?;
            let rows = commands::bench(&c)?;
            let path = out.unwrap_or_else(|| c.output_dir.join("bench.csv"));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| unwrap_dd_cli::field_file::io_error(dir, e))?;
            }
            write_atomic(&path, &bench_csv(&rows))?;
            println!("wrote {} rows to {}", rows.len(), path.display());
        }
        Command::Trace { field, run, out, overrides } => {
            let c = load(cli.config.as_ref(), overrides)?;
            let (r, solver) = resolve(&run, &c);
            let report = commands::trace(&field, r, solver, &c)?;
            let csv = trace_csv(&report.iterations);
            match out {
                Some(path) => write_atomic(&path, &csv)?,
                None => {
                    let _ = std::io::stdout().write_all(&csv);
                }
            }
            if let Some(it) = report.phase_transition_iteration {
                eprintln!("phase transition at iteration {it}");
            }
            if report.nonconvergence {
                return Err(CliError::Nonconvergence("iteration cap reached".into()));
            }
        }
        Command::Verify { instances } => {
            if instances == 0 {
                return Err(CliError::Usage("instances must be positive".into()));
            }
            let checks = commands::verify(instances)?;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if checks.iter().any(|c| !c.passed) {
                return Err(CliError::Nonconvergence("verification failed".into()));
            }
        }
    }
    Ok(())
}
