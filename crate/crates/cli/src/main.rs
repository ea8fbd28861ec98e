use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pzf_core::harness::{HarnessOptions, StartPolicy, DEFAULT_TRIALS};
use pzf_core::report::{self, OutputFormat, RunConfig, TableConfig, TableFamily};
use pzf_core::{ForcingRule, GraphFamilySpec};

#[derive(Parser)]
#[command(name = "pzf", version, about = "Probabilistic zero forcing simulations, exact solver and bounds")]
struct Cli {
    /// Worker threads (default: PZF_THREADS, else one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of the expected propagation time.
    Run(RunArgs),
    /// Exact expected propagation time and tail on a small graph.
    Exact(ExactArgs),
    /// Tables of estimates over grid or hypercube families.
    Table(TableArgs),
    /// Mean steps spent per doubling level of the blue set.
    Profile(RunArgs),
    /// Closed-form bounds for a graph.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct Common {
    /// Graph spec, e.g. `grid:4,5`, `hypercube:8`, `cliquering:5,60`, `file:edges.txt`.
    #[arg(long)]
    graph: GraphFamilySpec,
    /// `standard`, `constant:P`, `push`, `pull`, `pushpull` or `classic`.
    #[arg(long, default_value = "standard")]
    rule: ForcingRule,
    /// Vertex index, `corner`, `center` or `min`.
    #[arg(long, default_value = "corner")]
    start: StartPolicy,
    #[arg(long, default_value = "json")]
    format: OutputFormat,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-trial step cap (default: 1000 times the vertex count).
    #[arg(long)]
    max_steps: Option<u64>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    common: Common,
    /// Emit the tail `P(T > t)` for `t <= t_max` only.
    #[arg(long)]
    t_max: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Grid,
    Hypercube,
}

#[derive(Args)]
struct TableArgs {
    family: Family,
    /// Grid row range, e.g. `2-14`.
    #[arg(long, default_value = "2-14")]
    rows: String,
    /// Grid column range.
    #[arg(long, default_value = "2-14")]
    cols: String,
    /// Hypercube dimension range.
    #[arg(long, default_value = "1-16")]
    dims: String,
    #[arg(long, default_value = "standard")]
    rule: ForcingRule,
    /// Comma-separated start policies, one table each. Defaults to
    /// `corner,center` on grids and `0` on hypercubes.
    #[arg(long, value_delimiter = ',')]
    start: Vec<StartPolicy>,
    #[arg(long, default_value_t = DEFAULT_TRIALS)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the CSV twin instead of the table.
    #[arg(long)]
    csv: bool,
    /// Also write the CSV twin to this file.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    graph: GraphFamilySpec,
    /// Horizon for tail bounds.
    #[arg(long)]
    t: Option<u64>,
    #[arg(long, default_value = "table")]
    format: OutputFormat,
}

fn run_config(args: RunArgs) -> RunConfig {
    RunConfig {
        graph: args.common.graph,
        rule: args.common.rule,
        start: args.common.start,
        trials: args.trials,
        seed: args.seed,
        max_steps: args.max_steps,
        format: args.common.format,
        t_max: None,
    }
}

fn execute(cli: Cli) -> pzf_core::Result<String> {
    let options = HarnessOptions { max_steps: None, threads: cli.threads };
    match cli.command {
        Command::Run(args) => {
            let config = run_config(args);
            report::render_run(&report::run(&config, &options)?, config.format)
        }
        Command::Profile(args) => {
            let config = run_config(args);
            report::render_profile(&report::profile(&config, &options)?, config.format)
        }
        Command::Exact(args) => {
            let config = RunConfig {
                rule: args.common.rule,
                start: args.common.start,
                format: args.common.format,
                t_max: args.t_max,
                ..RunConfig::new(args.common.graph)
            };
            report::render_exact(&report::exact(&config)?, config.format)
        }
        Command::Table(args) => {
            let family = match args.family {
                Family::Grid => {
                    TableFamily::Grid { rows: report::parse_range(&args.rows)?, cols: report::parse_range(&args.cols)? }
                }
                Family::Hypercube => TableFamily::Hypercube { dims: report::parse_range(&args.dims)? },
            };
            let starts = if args.start.is_empty() { TableConfig::default_starts(&family) } else { args.start };
            let config = TableConfig { family, rule: args.rule, starts, trials: args.trials, seed: args.seed };
            let out = report::table(&config, &options)?;
            if let Some(path) = &args.csv_out {
                std::fs::write(path, &out.csv)
                    .map_err(|e| pzf_core::Error::Io { path: path.display().to_string(), reason: e.to_string() })?;
            }
            Ok(if args.csv { out.csv } else { out.table })
        }
        Command::Bounds(args) => report::render_bounds(&report::bounds_for(&args.graph, args.t)?, args.format),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
