//! `ddmapd`: generate, solve, validate, benchmark and render shelf
//! rearrangement instances.
//!
//! Exit status: 0 success, 1 invalid input, 2 planner failure, 3 the log
//! breaks a rule.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ddmapd::domain::validate;
use ddmapd::generate::{generate, GeneratorSpec};
use ddmapd::io::{load_instance, load_log, save_instance, save_log};
use ddmapd::render::render_frames;
use ddmapd::suite::{run_suite, solve, Algo, Settings};

#[derive(Parser)]
#[command(name = "ddmapd", version, about = "Shelf rearrangement with dependency-graph execution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct PlannerArgs {
    /// How far ahead assignment looks for agents about to become free.
    #[arg(long, default_value_t = 8)]
    k: usize,
    /// Suboptimality bound of each MAPF call.
    #[arg(long, default_value_t = 1.2, value_parser = parse_subopt)]
    subopt: f64,
    /// Budget of each MAPF call, in seconds.
    #[arg(long, default_value_t = 60.0, value_parser = parse_timeout)]
    timeout: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl PlannerArgs {
    fn settings(&self) -> Settings {
        Settings { k: self.k, suboptimality: self.subopt, time_budget: Duration::from_secs_f64(self.timeout) }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance (and its map) to --out.
    Generate {
        #[arg(long)]
        size: Option<usize>,
        /// Shelf density, in percent of all cells.
        #[arg(long, value_parser = parse_density)]
        den: Option<f64>,
        #[arg(long = "n", default_value_t = 4)]
        agents: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Shelves off the border, agents on it.
        #[arg(long, conflicts_with = "warehouse")]
        well_formed: bool,
        /// The 27x27 warehouse layout; --size and --den are ignored.
        #[arg(long)]
        warehouse: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan an instance and write the execution log.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "ivf", value_parser = parse_algo)]
        algo: Algo,
        #[command(flatten)]
        planner: PlannerArgs,
        /// Where to write the log; defaults to `<instance>.<algo>.log.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a log against its instance.
    Validate { instance: PathBuf, log: PathBuf },
    /// Average results over random instances and write a CSV.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Shelf densities in percent.
        #[arg(long, value_delimiter = ',', required = true, value_parser = parse_density)]
        den: Vec<f64>,
        #[arg(long = "n", value_delimiter = ',', default_value = "4")]
        agents: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "ivf", value_parser = parse_algo)]
        algos: Vec<Algo>,
        #[arg(long, default_value_t = 50)]
        reps: usize,
        #[arg(long)]
        well_formed: bool,
        #[command(flatten)]
        planner: PlannerArgs,
        /// CSV destination; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep instances and logs under this directory.
        #[arg(long)]
        artifacts: Option<PathBuf>,
    },
    /// Write one SVG frame per timestep of a log.
    Render {
        instance: PathBuf,
        log: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse()
}

fn parse_density(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !(0.0..=100.0).contains(&v) {
        return Err(format!("density {v} is not a percentage"));
    }
    Ok(v / 100.0)
}

fn parse_subopt(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !v.is_finite() || v < 1.0 {
        return Err("the suboptimality bound must be at least 1".into());
    }
    Ok(v)
}

fn parse_timeout(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("not a number: {s:?}"))?;
    if !v.is_finite() || v <= 0.0 {
        return Err("the timeout must be positive".into());
    }
    Ok(v)
}

/// Errors that map to a specific exit status.
enum Exit {
    Input(anyhow::Error),
    Failure(String),
    Violations,
}

impl<E: Into<anyhow::Error>> From<E> for Exit {
    fn from(e: E) -> Self {
        Exit::Input(e.into())
    }
}

fn run(cli: Cli) -> Result<(), Exit> {
    match cli.command {
        Command::Generate { size, den, agents, seed, well_formed, warehouse, out } => {
            let spec = if warehouse {
                GeneratorSpec::warehouse(agents, seed)
            } else {
                let size = size.context("--size is required")?;
                let den = den.context("--den is required")?;
                let spec = GeneratorSpec::new(size, den, agents, seed);
                if well_formed {
                    spec.well_formed()
                } else {
                    spec
                }
            };
            let instance = generate(&spec).context("cannot generate the instance")?;
            save_instance(&out, &instance)?;
            println!("{}: {} agents, {} shelves", out.display(), instance.num_agents(), instance.num_shelves());
        }
        Command::Solve { instance, algo, planner, out } => {
            let inst = load_instance(&instance)?;
            let output = solve(algo, &inst, &planner.settings(), planner.seed).map_err(|e| Exit::Failure(format!("{e} [{}]", e.tag())))?;
            let out = out.unwrap_or_else(|| instance.with_extension(format!("{algo}.log.json")));
            save_log(&out, inst.map(), &output.log)?;
            let s = &output.stats;
            println!(
                "algo={algo} makespan={} flowtime={} total_time={:.3} agent_time={:.3} replans={} log={}",
                s.makespan,
                s.flowtime,
                s.total_time.as_secs_f64(),
                s.agent_time.as_secs_f64(),
                s.replans,
                out.display()
            );
        }
        Command::Validate { instance, log } => {
            let inst = load_instance(&instance)?;
            let log = load_log(&log, inst.map())?;
            let report = validate(&inst, &log).context("log does not fit the instance")?;
            if !report.is_valid() {
                for v in &report.violations {
                    println!("{v:?}");
                }
                return Err(Exit::Violations);
            }
            println!("valid: makespan={} flowtime={}", log.makespan(), log.flowtime());
        }
        Command::Bench { sizes, den, agents, algos, reps, well_formed, planner, out, artifacts } => {
            let mut specs = Vec::new();
            for &size in &sizes {
                for &d in &den {
                    for &n in &agents {
                        let spec = GeneratorSpec::new(size, d, n, planner.seed);
                        specs.push(if well_formed { spec.well_formed() } else { spec });
                    }
                }
            }
            let sink: Box<dyn Write> = match &out {
                Some(p) => Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
                None => Box::new(io::stdout()),
            };
            run_suite(&specs, &algos, reps, &planner.settings(), artifacts.as_deref(), sink)?;
        }
        Command::Render { instance, log, out } => {
            let inst = load_instance(&instance)?;
            let log = load_log(&log, inst.map())?;
            let frames = render_frames(&inst, &log, &out)?;
            println!("{} frames in {}", frames.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Exit::Failure(msg)) => {
            eprintln!("planner failed: {msg}");
            ExitCode::from(2)
        }
        Err(Exit::Violations) => ExitCode::from(3),
    }
}
