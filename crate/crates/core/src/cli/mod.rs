//! Command-line front end.
//!
//! Every artifact-producing subcommand writes its files plus a
//! `manifest.json` into `--out`; `roadcast replay` reruns a manifest and
//! checks the outputs byte for byte. Errors print as `error[CODE]: message`
//! on stderr with a per-code exit status.

mod artifacts;
mod commands;
mod sweep;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use artifacts::{sha256_hex, Manifest, MANIFEST};

use crate::metrics::RateBasis;
use crate::{Error, ErrorCode, Result};

#[derive(Debug, Parser)]
#[command(name = "roadcast", version, about = "Plan roadside access point deployments")]
pub struct Cli {
    /// Seed for path sampling, scenario sampling, baselines and mobility.
    #[arg(long, global = true, env = "ROADCAST_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Network file with nodes, edges and candidate sites.
    #[arg(long)]
    pub network: PathBuf,
    /// Paths file. Paths are sampled with --min-length/--num-paths when absent.
    #[arg(long)]
    pub paths: Option<PathBuf>,
    /// Minimum length of sampled paths, m.
    #[arg(long)]
    pub min_length: Option<f64>,
    /// Number of sampled paths.
    #[arg(long, default_value_t = 100)]
    pub num_paths: usize,
    /// Drop paths whose coverage requirement is implied by another path.
    #[arg(long)]
    pub reduce: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    /// Contact opportunity in distance.
    D,
    /// Contact opportunity in time.
    T,
    /// Average throughput.
    Gamma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisArg {
    /// Load computed with every candidate deployed.
    All,
    /// Per-subsegment lower bound that ignores sharing.
    Exclusive,
    /// Load of the evaluated deployment (exact, not for planners).
    Deployment,
}

impl From<BasisArg> for RateBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::All => RateBasis::AllCandidates,
            BasisArg::Exclusive => RateBasis::Exclusive,
            BasisArg::Deployment => RateBasis::Deployment,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ObjectiveArgs {
    #[arg(long, value_enum, default_value_t = MetricArg::D)]
    pub metric: MetricArg,
    /// Scenario file; the first scenario is used. Defaults to interval midpoints.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// How subsegment rates are derived for throughput.
    #[arg(long, value_enum)]
    pub rate_basis: Option<BasisArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RobustMethod {
    Enum,
    Meanspeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TwoStageMethod {
    Saa,
    Exp,
    Sec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineMethod {
    Rand,
    Dist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Least,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateLevel {
    Lo,
    Mid,
    Hi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Desk,
    Small,
    Tiny,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split edges into coverage subsegments.
    Partition {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Per-path metrics of a deployment.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        /// Deployment file.
        #[arg(long)]
        deployment: PathBuf,
        /// Scenario file; defaults to interval midpoints.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = BasisArg::Deployment)]
        rate_basis: BasisArg,
    },
    /// Cheapest deployment reaching --lambda on every path.
    PlanMincost {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        objective: ObjectiveArgs,
        /// Target value per path (default demand for paths without one).
        #[arg(long)]
        lambda: f64,
        /// Deployment file of sites already in place (free).
        #[arg(long)]
        preexisting: Option<PathBuf>,
        /// Re-evaluate every gain each round instead of lazily.
        #[arg(long)]
        naive: bool,
    },
    /// Best worst-path value within --budget.
    PlanMaxopp {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long)]
        budget: f64,
        /// Stop the bisection once the bracket is narrower than this.
        #[arg(long, default_value_t = crate::planner::DEFAULT_DELTA)]
        delta: f64,
        #[arg(long)]
        naive: bool,
    },
    /// Throughput plan that holds under every scenario in the intervals.
    PlanRobust {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = RobustMethod::Meanspeed)]
        method: RobustMethod,
        #[arg(long, required_unless_present = "budget")]
        lambda: Option<f64>,
        /// Maximize the worst-case value within this budget instead.
        #[arg(long, conflicts_with = "lambda")]
        budget: Option<f64>,
        /// Step of the inflated-target loop.
        #[arg(long, default_value_t = crate::planner::DEFAULT_TAU)]
        tau: f64,
        #[arg(long, default_value_t = crate::planner::DEFAULT_DELTA)]
        delta: f64,
        /// Largest per-path site count for --method enum.
        #[arg(long, default_value_t = crate::planner::DEFAULT_ENUM_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = BasisArg::All)]
        rate_basis: BasisArg,
        #[arg(long)]
        naive: bool,
    },
    /// First-stage plan with per-scenario augmentation.
    PlanTwostage {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = TwoStageMethod::Saa)]
        method: TwoStageMethod,
        #[arg(long)]
        lambda: f64,
        /// Learning scenarios.
        #[arg(long, default_value_t = 20)]
        samples: usize,
        /// Fresh scenarios used to price the first stage afterwards.
        #[arg(long, default_value_t = 0)]
        test_samples: usize,
        /// Second-stage cost as a multiple of the first-stage cost.
        #[arg(long)]
        inflation: Option<f64>,
        #[arg(long, value_enum, default_value_t = BasisArg::All)]
        rate_basis: BasisArg,
        /// Keep redundant second-stage copies.
        #[arg(long)]
        no_prune: bool,
    },
    /// Worst-case scenario of a deployment.
    WorstCase {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        deployment: PathBuf,
        #[arg(long, value_enum, default_value_t = BasisArg::Deployment)]
        rate_basis: BasisArg,
    },
    /// Random or max-min-distance reference deployments.
    Baseline {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[arg(long, value_enum, default_value_t = BaselineMethod::Rand)]
        method: BaselineMethod,
        #[arg(long, required_unless_present = "budget")]
        lambda: Option<f64>,
        #[arg(long)]
        budget: Option<f64>,
    },
    /// Replay a deployment against synthetic mobility.
    Simulate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        deployment: PathBuf,
        /// Existing trace file instead of generating one.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        users: usize,
        /// Trace length, s.
        #[arg(long, default_value_t = 3600.0)]
        duration: f64,
        /// Tick length, s.
        #[arg(long, default_value_t = 1.0)]
        timestep: f64,
        /// Minimum leg length, m.
        #[arg(long, default_value_t = 2000.0)]
        min_leg: f64,
        #[arg(long, value_enum, default_value_t = PolicyArg::Least)]
        policy: PolicyArg,
        /// Which end of each site's rate interval to use.
        #[arg(long, value_enum, default_value_t = RateLevel::Lo)]
        rates: RateLevel,
    },
    /// Run another subcommand over a list of flag values and seeds.
    Sweep {
        /// Flag to vary, without dashes (e.g. `lambda`).
        #[arg(long)]
        flag: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Seeds per point, counting up from --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        /// Scalar to aggregate (cost, min_value, total, ...).
        #[arg(long, default_value = "cost")]
        y: String,
        /// Points run concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// The swept subcommand and its fixed arguments.
        #[arg(last = true, required = true)]
        inner: Vec<String>,
    },
    /// Rerun a manifest into --out and compare outputs.
    Replay {
        manifest: PathBuf,
    },
    /// Write a synthetic grid network and sampled paths.
    Synth {
        #[arg(long, value_enum, default_value_t = Preset::Desk)]
        preset: Preset,
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        /// Sampled paths written next to the network; 0 for none.
        #[arg(long, default_value_t = 0)]
        num_paths: usize,
        /// Minimum sampled path length, m; defaults to half the grid extent.
        #[arg(long)]
        min_length: Option<f64>,
        #[arg(long)]
        inflation: Option<f64>,
    },
}

/// Scalars a run reports back, used by `sweep`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    pub scalars: BTreeMap<String, f64>,
}

impl Outcome {
    fn set(&mut self, k: &str, v: f64) {
        self.scalars.insert(k.into(), v);
    }
}

/// Parses and runs `args` (without the program name).
pub fn run_args(args: &[String]) -> Result<Outcome> {
    let argv = std::iter::once("roadcast".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(first_line(&e.to_string())))?;
    run(cli, args)
}

/// Clap messages span several lines; keep the part before the usage block.
fn first_line(s: &str) -> String {
    let s = s.trim();
    let s = s.strip_prefix("error: ").unwrap_or(s);
    s.lines()
        .take_while(|l| !l.trim().is_empty() && !l.starts_with("Usage:"))
        .map(str::trim)
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn run(cli: Cli, args: &[String]) -> Result<Outcome> {
    let command = artifacts::replay_command(args, cli.seed);
    commands::dispatch(cli, command)
}

/// Binary entry point; returns the process exit status.
pub fn main_with(args: Vec<String>) -> i32 {
    let argv = std::iter::once("roadcast".to_string()).chain(args.iter().cloned());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("error[{}]: {}", ErrorCode::Usage, first_line(&e.to_string()));
            return ErrorCode::Usage.exit_status();
        }
    };
    match run(cli, &args) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e);
            e.code().exit_status()
        }
    }
}
