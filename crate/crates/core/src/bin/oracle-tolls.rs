use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use oracle_tolls::experiments::{
    run_bench, run_enforce, run_impossibility_demo, run_pipeline, run_solve_eq, BenchConfig, ExperimentReport,
};
use oracle_tolls::game::io::{flow_from_json, game_from_json, game_to_json, tolls_from_json};
use oracle_tolls::instances::{generate, InstanceSpec};
use oracle_tolls::zero_order::OptConfig;
use oracle_tolls::{Error, RoutingGame, TollVector};

const EXIT_TOLERANCE: u8 = 2;
const EXIT_INVALID: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "oracle-tolls", version, about = "Optimal tolls for routing games behind an equilibrium oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a game and print it as JSON.
    Gen {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve for the equilibrium under given tolls (full knowledge).
    SolveEq {
        #[command(flatten)]
        source: Source,
        /// JSON object mapping edge ids to tolls; missing edges get 0.
        #[arg(long)]
        tolls: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Find tolls enforcing a target flow using only equilibrium queries.
    Enforce {
        #[command(flatten)]
        source: Source,
        /// Target flow JSON; defaults to the optimal flow.
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        delta_enforce: f64,
        #[arg(long)]
        max_queries: Option<usize>,
        /// Write one JSON line per iteration here.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute near-optimal tolls from equilibrium and cost queries.
    Optimize {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0.02)]
        epsilon: f64,
        /// Cost-sample accuracy; defaults to ε / (8 N²).
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        max_queries: Option<usize>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Show two games no toll query can tell apart but whose optima differ.
    DemoImpossibility {
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Query counts on parallel-link games of growing size.
    Bench {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        epsilon: f64,
        #[arg(long, default_value_t = 1e-3)]
        delta_enforce: f64,
        /// Comma-separated link counts.
        #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        optimize_up_to: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// pigou, braess, fig1_l1, fig1_l2, parallel:P, grid:WxH, random_dag:N:D
    #[arg(long)]
    topology: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    degree: usize,
    #[arg(long, default_value_t = 1)]
    commodities: usize,
    #[arg(long, default_value_t = 1.0)]
    demand: f64,
}

impl SpecArgs {
    fn spec(&self) -> Result<InstanceSpec, Error> {
        Ok(InstanceSpec::new(self.topology.parse()?)
            .with_seed(self.seed)
            .with_degree(self.degree)
            .with_commodities(self.commodities)
            .with_demand(self.demand))
    }
}

#[derive(Args)]
struct Source {
    /// Game JSON file.
    #[arg(long, required_unless_present = "topology", conflicts_with = "topology")]
    instance: Option<PathBuf>,
    /// Generate the game instead: same syntax as `gen --topology`.
    #[arg(long)]
    topology: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Source {
    fn load(&self) -> Result<(String, RoutingGame), Error> {
        match (&self.instance, &self.topology) {
            (Some(path), _) => Ok((path.display().to_string(), game_from_json(&read(path)?)?)),
            (None, Some(t)) => {
                let spec = InstanceSpec::new(t.parse()?).with_seed(self.seed);
                Ok((spec.id(), generate(&spec)?))
            }
            (None, None) => Err(Error::BadSpec("need --instance or --topology".into())),
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<serde_json::Value, Error> {
    Ok(serde_json::from_str(&read(path)?)?)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut f = create(path)?;
            writeln!(f, "{text}").map_err(|e| Error::Format(e.to_string()))
        }
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Format(e.to_string())),
            _ => Ok(()),
        },
    }
}

fn emit_report(report: &ExperimentReport, out: Option<&Path>) -> Result<u8, Error> {
    emit(&report.to_json_pretty(), out)?;
    Ok(if report.passed { 0 } else { EXIT_TOLERANCE })
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OracleBudgetExceeded(_) => EXIT_BUDGET,
        Error::NoConvergence { .. }
        | Error::OracleSampleFailed(_)
        | Error::DegenerateCut(_)
        | Error::NumericBreakdown(_) => EXIT_TOLERANCE,
        _ => EXIT_INVALID,
    }
}

fn run(command: Command) -> Result<u8, Error> {
    match command {
        Command::Gen { spec, out } => {
            emit(&game_to_json(&generate(&spec.spec()?)?), out.as_deref())?;
            Ok(0)
        }
        Command::SolveEq { source, tolls, out } => {
            let (id, game) = source.load()?;
            let tolls = match tolls {
                Some(path) => tolls_from_json(game.network(), &read_json(&path)?)?,
                None => TollVector::zeros(game.num_edges()),
            };
            emit_report(&run_solve_eq(&id, &game, &tolls)?, out.as_deref())
        }
        Command::Enforce {
            source,
            target,
            delta_enforce,
            max_queries,
            trace,
            out,
        } => {
            let (id, game) = source.load()?;
            let target = match target {
                Some(path) => Some(flow_from_json(game.network(), &read_json(&path)?)?),
                None => None,
            };
            let mut sink = trace.as_deref().map(create).transpose()?;
            let report = run_enforce(
                &id,
                &game,
                target,
                delta_enforce,
                max_queries,
                sink.as_mut().map(|w| w as &mut dyn Write),
            )?;
            emit_report(&report, out.as_deref())
        }
        Command::Optimize {
            source,
            epsilon,
            delta,
            max_queries,
            trace,
            out,
        } => {
            let (id, game) = source.load()?;
            if !(epsilon > 0.0) {
                return Err(Error::BadSpec("--epsilon must be positive".into()));
            }
            let mut cfg = OptConfig::new(epsilon, game.constants());
            if let Some(d) = delta {
                cfg.delta = d;
                cfg.fd_step = d.sqrt();
            }
            let mut sink = trace.as_deref().map(create).transpose()?;
            let report = run_pipeline(&id, &game, &cfg, max_queries, sink.as_mut().map(|w| w as &mut dyn Write))?;
            emit_report(&report, out.as_deref())
        }
        Command::DemoImpossibility { grid, out } => emit_report(&run_impossibility_demo(grid)?, out.as_deref()),
        Command::Bench {
            seed,
            epsilon,
            delta_enforce,
            sizes,
            optimize_up_to,
            out,
        } => {
            let cfg = BenchConfig {
                sizes,
                seed,
                delta_enforce,
                epsilon,
                optimize_up_to,
            };
            emit_report(&run_bench(&cfg)?, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
