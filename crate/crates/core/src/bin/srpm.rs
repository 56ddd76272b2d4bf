//! Command-line front end for the simulation harness.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use srpm::channels::write_channel_set;
use srpm::harness::{self, ConfigSource, ExperimentPlan, OutputFormat};
use srpm::Error;

#[derive(Parser, Debug)]
#[command(name = "srpm", version, about = "RIS phase-modulation link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment plan (TOML, or JSON with a .json extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the plan seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Record detection wall time. Makes outputs run-dependent.
    #[arg(long, global = true)]
    timing: bool,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Monte Carlo ABER sweep with the analytical bound alongside.
    SimulateAber,
    /// Capacity sweep with the PBF baseline and a Monte Carlo estimate.
    SimulateCapacity,
    /// Analytical ABER bound only.
    AnalyzeAber,
    /// Analytical capacity only.
    AnalyzeCapacity,
    /// SDR precoder optimization (single stream).
    OptimizePrecoder,
    /// ML against sphere decoding: visited nodes and complexity exponent.
    BenchDetectors,
    /// Binary dump of one channel realization.
    DumpChannel,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::SimulateAber => "simulate-aber",
            Command::SimulateCapacity => "simulate-capacity",
            Command::AnalyzeAber => "analyze-aber",
            Command::AnalyzeCapacity => "analyze-capacity",
            Command::OptimizePrecoder => "optimize-precoder",
            Command::BenchDetectors => "bench-detectors",
            Command::DumpChannel => "dump-channel",
        }
    }
}

const EXIT_OTHER: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NONCONVERGED: u8 = 3;

fn load_plan(cli: &Cli) -> srpm::Result<ExperimentPlan> {
    let mut plan = match &cli.config {
        Some(p) => harness::parse_config(ConfigSource::Path(p))?,
        None => ExperimentPlan::default(),
    };
    if let Some(s) = cli.seed {
        plan.seed = s;
    }
    if cli.timing {
        plan.timing = true;
    }
    if let Some(out) = &cli.out {
        plan.output.path = Some(out.clone());
    }
    if let Some(f) = cli.format {
        plan.output.format = Some(match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        });
    }
    plan.validate()?;
    Ok(plan)
}

fn run(cmd: Command, plan: &ExperimentPlan) -> srpm::Result<bool> {
    let path = plan.output.path.as_deref();
    let format = plan.output.resolved_format();
    let sweep = match cmd {
        Command::SimulateAber => harness::run_aber_sweep(plan)?,
        Command::SimulateCapacity => harness::run_capacity_sweep(plan)?,
        Command::AnalyzeAber => harness::run_analytical_aber(plan)?,
        Command::AnalyzeCapacity => harness::run_analytical_capacity(plan)?,
        Command::BenchDetectors => harness::bench_detectors(plan)?,
        Command::OptimizePrecoder => {
            let res = harness::optimize_precoder(plan)?;
            harness::emit(path, format, &res.command, plan, &res.points)?;
            return Ok(res.converged());
        }
        Command::DumpChannel => {
            let set = harness::dump_channel(plan)?;
            let io = |p: PathBuf| move |e| Error::Io { path: p, source: e };
            match path {
                Some(p) => {
                    let file = std::fs::File::create(p).map_err(io(p.to_path_buf()))?;
                    let mut buf = std::io::BufWriter::new(file);
                    write_channel_set(&mut buf, &set).map_err(io(p.to_path_buf()))?;
                    buf.flush().map_err(io(p.to_path_buf()))?;
                }
                None => {
                    let mut out = std::io::stdout().lock();
                    write_channel_set(&mut out, &set).map_err(io("<stdout>".into()))?;
                }
            }
            return Ok(true);
        }
    };
    harness::emit(path, format, &sweep.command, plan, &sweep.points)?;
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_OTHER);
        }
    }
    let plan = match load_plan(&cli) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match run(cli.command, &plan) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: {}: solver did not converge", cli.command.name());
            ExitCode::from(EXIT_NONCONVERGED)
        }
        Err(e) => {
            eprintln!("error: {}: {e}", cli.command.name());
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_OTHER })
        }
    }
}
