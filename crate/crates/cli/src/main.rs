mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qkp", version, about = "QUBO keypoint extraction, matching and kernel tools")]
struct Cli {
    /// Seed for every stochastic component; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "qkp-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Exhaustive,
    Sa,
    Tabu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Kmedoids,
    Kdc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Gaussian,
    Cosine,
    Quantum,
}

/// Solver selection shared by every command.
#[derive(Debug, Clone, Args)]
struct SolverArgs {
    /// Named solver preset: default, digital, short or tabu.
    #[arg(long)]
    preset: Option<String>,
    /// Solver kind, applied after the preset.
    #[arg(long)]
    solver: Option<SolverArg>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    sweeps: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hierarchical keypoint extraction: keypoints.json and overlay.png.
    Keypoints {
        image: PathBuf,
        /// Replace the level schedule with a single level selecting K per patch.
        #[arg(long)]
        k: Option<usize>,
        /// Patch grid as COLS,ROWS.
        #[arg(long, value_parser = parse_pair)]
        grid: Option<[usize; 2]>,
        /// Resample to WIDTH,HEIGHT before splitting.
        #[arg(long, value_parser = parse_pair)]
        size: Option<[usize; 2]>,
        #[arg(long)]
        method: Option<MethodArg>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Keypoint matching against a second image or a rotated copy.
    Match {
        image_a: PathBuf,
        image_b: Option<PathBuf>,
        /// Rotation in degrees applied to IMAGE_A when IMAGE_B is absent [default: 20].
        #[arg(long, allow_negative_numbers = true)]
        rotate: Option<f64>,
        /// Matching trade-off in [0, 1]; repeat for a sweep [default: 0.2].
        #[arg(long)]
        alpha: Vec<f64>,
        /// Keypoints extracted per image.
        #[arg(long)]
        keypoints: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Kernel matrix over a point set (CSV or JSON rows) or an image's pixels.
    KernelMatrix {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "gaussian")]
        kernel: KernelArg,
        /// Input scale for the quantum feature map.
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Gaussian bandwidth.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Sampled quantum readout with this many shots instead of exact.
        #[arg(long)]
        shots: Option<u64>,
        /// Heatmap pixels per matrix entry.
        #[arg(long, default_value_t = 8)]
        cell: u32,
    },
    /// Solve a QUBO given as JSON `{"Q": [[..]], "q": [..], "offset": ..}`.
    Solve {
        qubo: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

/// `A,B` or `AxB`.
fn parse_pair(s: &str) -> Result<[usize; 2], String> {
    let (a, b) = s
        .split_once(',')
        .or_else(|| s.split_once('x'))
        .ok_or_else(|| format!("expected two integers as A,B, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok([parse(a)?, parse(b)?])
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qkp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let file = config::FileConfig::load(cli.config.as_deref())?;
    let ctx = commands::Context::new(file, cli.seed, cli.out_dir);
    match cli.command {
        Command::Keypoints { image, k, grid, size, method, solver } => {
            commands::keypoints(ctx, &image, commands::KeypointOverrides { k, grid, size, method: method.map(Into::into) }, &solver.into())
        }
        Command::Match { image_a, image_b, rotate, alpha, keypoints, k_max, solver } => commands::matching(
            ctx,
            &image_a,
            image_b.as_deref(),
            rotate,
            alpha,
            commands::MatchOverrides { keypoints, k_max },
            &solver.into(),
        ),
        Command::KernelMatrix { input, kernel, scale, gamma, shots, cell } => {
            commands::kernel_matrix(ctx, &input, kernel.into(), commands::KernelOptions { scale, gamma, shots, cell })
        }
        Command::Solve { qubo, solver } => commands::solve(ctx, &qubo, &solver.into()),
    }
}

impl From<MethodArg> for qkp_core::clustering::ClusteringMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Kmedoids => Self::Kmedoids,
            MethodArg::Kdc => Self::Kdc,
        }
    }
}

impl From<KernelArg> for commands::KernelKind {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Gaussian => Self::Gaussian,
            KernelArg::Cosine => Self::Cosine,
            KernelArg::Quantum => Self::Quantum,
        }
    }
}

impl From<SolverArgs> for commands::SolverOverrides {
    fn from(a: SolverArgs) -> Self {
        Self {
            preset: a.preset,
            kind: a.solver.map(|s| match s {
                SolverArg::Exhaustive => qkp_core::solvers::SolverKind::Exhaustive,
                SolverArg::Sa => qkp_core::solvers::SolverKind::SimulatedAnnealing,
                SolverArg::Tabu => qkp_core::solvers::SolverKind::Tabu,
            }),
            shots: a.shots,
            sweeps: a.sweeps,
        }
    }
}
