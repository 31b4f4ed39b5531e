use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use mkv_cubature::{builtin_formula, solve_with_progress, Limits};
use mkv_harness::config::{ExperimentConfig, PartitionKindConfig};
use mkv_harness::converge::{run_convergence, write_csv};
use mkv_harness::svg;
use mkv_harness::verify::{verify, Subject};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "MKV_THREADS";

#[derive(Parser)]
#[command(name = "mkv-cubature", version, about = "Cubature on Wiener space for McKean-Vlasov equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once, at the largest n of the sweep unless --n is given.
    Solve {
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run the sweep, write the CSV (and SVG) and fit the error slope.
    Converge {
        config: PathBuf,
        /// Overrides output.csv from the config.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Overrides output.svg from the config.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run a self-check and print its JSON report.
    Verify {
        #[command(subcommand)]
        subject: VerifySubject,
    },
}

#[derive(Subcommand)]
enum VerifySubject {
    /// Moment matching of a built-in formula.
    Cubature {
        #[arg(long)]
        degree: u32,
        #[arg(long)]
        d: usize,
    },
    /// Boundedness of normalised partition sums over n = 10..1000.
    Partition {
        #[arg(long, value_parser = parse_kind)]
        kind: PartitionKindConfig,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        r: Option<usize>,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
    },
    /// Interpolation identities on random node sets.
    Lagrange,
    /// Closed form against symbolic Taylor coefficients on example1.
    Taylor,
}

fn parse_kind(s: &str) -> Result<PartitionKindConfig, String> {
    match s {
        "uniform" => Ok(PartitionKindConfig::Uniform),
        "kusuoka" => Ok(PartitionKindConfig::Kusuoka),
        "modified_kusuoka" | "modified-kusuoka" => Ok(PartitionKindConfig::ModifiedKusuoka),
        other => Err(format!("unknown partition kind '{other}'")),
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_VAR}={v} is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

/// Pretty JSON on stdout; a closed pipe is not an error.
fn emit<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { config, n } => {
            let cfg = ExperimentConfig::load(&config)?;
            let problem = cfg.problem()?;
            let n = n.unwrap_or(*cfg.sweep.last().unwrap());
            let (part, warning) = cfg.partition(problem.horizon(), n)?;
            if let Some(w) = warning {
                eprintln!("warning: {w}");
            }
            let formula = builtin_formula(cfg.formula.degree, cfg.formula.d)?;
            let limits = Limits {
                max_nodes: cfg.max_nodes.unwrap_or(Limits::default().max_nodes),
            };
            let mut progress = |p: &mkv_cubature::tree::Progress<'_>| {
                eprintln!("level {}/{} ({} nodes)", p.level, p.steps, p.nodes);
            };
            let r = solve_with_progress(&problem, &formula, &part, cfg.method.method(), &cfg.ode, &limits, &mut progress)?;
            emit(&r)?;
            Ok(true)
        }
        Command::Converge { config, csv, svg: svg_path } => {
            let cfg = ExperimentConfig::load(&config)?;
            let report = run_convergence(&cfg, &|msg| eprintln!("{msg}"))?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for (n, msg) in &report.failures {
                eprintln!("failed: n = {n}: {msg}");
            }
            let csv_path = csv.or(cfg.output.csv.clone());
            match &csv_path {
                Some(p) => {
                    let f = std::fs::File::create(p).with_context(|| p.display().to_string())?;
                    write_csv(&report.rows, f)?;
                }
                None => write_csv(&report.rows, std::io::stdout())?,
            }
            if let Some(p) = svg_path.or(cfg.output.svg.clone()) {
                let title = format!("{} {:?}", cfg.problem, cfg.method);
                std::fs::write(&p, svg::render(&title, &report.rows, report.fit.as_ref()))
                    .with_context(|| p.display().to_string())?;
            }
            match report.fit {
                Some(f) => eprintln!("fitted slope {:.4} over the last {} points", f.slope, f.points),
                None => eprintln!("not enough points for a slope fit"),
            }
            Ok(report.ok())
        }
        Command::Verify { subject } => {
            let subject = match subject {
                VerifySubject::Cubature { degree, d } => Subject::Cubature { degree, d },
                VerifySubject::Partition { kind, gamma, r, a, b } => Subject::Partition { kind, gamma, r, a, b },
                VerifySubject::Lagrange => Subject::Lagrange,
                VerifySubject::Taylor => Subject::Taylor,
            };
            let report = verify(subject);
            emit(&report)?;
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_threads().and_then(|()| run(cli));
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
