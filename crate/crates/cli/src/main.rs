//! Command-line front end: experiment runner, sample-size calculator, VC
//! tools, Hausdorff utility, and SVG renderer. Exit codes: 0 on success,
//! 1 on domain errors (bad JSON, invalid configs, size guards), 2 on usage
//! errors (clap's default).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;

use gridapprox::error::{Error, Result};
use gridapprox::experiments::{render_one, run, ExperimentConfig};
use gridapprox::sets::{hausdorff, PointCloud, TargetSpec};
use gridapprox::vcdim::{m_uc, svc_lower_bound, FiniteFamily, UCBoundParams};
use gridapprox::{Axis, TargetSet};

#[derive(Parser)]
#[command(name = "gridapprox", version, about = "Grid-sampled set approximation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config into an output directory.
    Run(RunArgs),
    /// Print the sufficient sample size m(eps, delta, d) as JSON.
    ComputeBound(BoundArgs),
    /// Print the VC-dimension of a finite set family read from JSON.
    Vc {
        /// Family file, e.g. {"universe_size":3,"sets":[[0,1],[2],[]]}.
        family: PathBuf,
    },
    /// Lower-bound the slicewise VC-dimension of a target pool along a line.
    Svc(SvcArgs),
    /// Print the Hausdorff distance between two point clouds.
    Hausdorff {
        /// Point cloud file, e.g. {"points":[[0,0],[1,2]]}.
        a: PathBuf,
        b: PathBuf,
    },
    /// Render one sampled grid and its hypothesis for a config to SVG.
    Render(RenderArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for results.csv, summary.json, and renders.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed (beats GRIDAPPROX_SEED).
    #[arg(long, env = "GRIDAPPROX_SEED")]
    seed: Option<u64>,
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the config Monte Carlo sample count.
    #[arg(long)]
    mc_samples: Option<usize>,
}

#[derive(Args)]
struct BoundArgs {
    /// Slicewise VC bound of the class.
    #[arg(long)]
    d: u64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    /// Use the one-way (classical) constants instead of the two-way ones.
    #[arg(long)]
    one_way: bool,
}

#[derive(Args)]
struct SvcArgs {
    /// Pool file: {"pool":[{"disk":{"c":[0,0],"r":1}}, ...]}.
    #[arg(long)]
    pool: PathBuf,
    /// Orientation of the probed line.
    #[arg(long, value_enum, default_value_t = AxisArg::Vertical)]
    axis: AxisArg,
    /// Fixed coordinate of the line (x for vertical, y for horizontal).
    #[arg(long, allow_negative_numbers = true)]
    w: f64,
    /// Comma-separated witness coordinates along the line (at most 20).
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    z: Vec<f64>,
}

#[derive(Args)]
struct RenderArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed (beats GRIDAPPROX_SEED).
    #[arg(long, env = "GRIDAPPROX_SEED")]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Horizontal,
    Vertical,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Axis {
        match a {
            AxisArg::Horizontal => Axis::Horizontal,
            AxisArg::Vertical => Axis::Vertical,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => cmd_run(args),
        Command::ComputeBound(args) => cmd_compute_bound(args),
        Command::Vc { family } => cmd_vc(&family),
        Command::Svc(args) => cmd_svc(args),
        Command::Hausdorff { a, b } => cmd_hausdorff(&a, &b),
        Command::Render(args) => cmd_render(args),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Prints a result line; a closed pipe (e.g. `| head`) ends the process
/// cleanly instead of panicking.
fn emit(text: impl std::fmt::Display) {
    use std::io::Write;
    if let Err(e) = writeln!(std::io::stdout(), "{text}") {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        eprintln!("error: failed writing to stdout: {e}");
        std::process::exit(1);
    }
}

fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("thread pool setup failed: {e}")))?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    init_threads(args.threads)?;
    let mut cfg: ExperimentConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.mc_samples {
        cfg.mc_samples = n;
    }
    let summary = run(&cfg, &args.out)?;
    emit(serde_json::to_string_pretty(&summary).expect("summary serializes"));
    Ok(())
}

fn cmd_compute_bound(args: BoundArgs) -> Result<()> {
    let params = if args.one_way {
        UCBoundParams::one_way(args.d, args.eps, args.delta)
    } else {
        UCBoundParams::two_way(args.d, args.eps, args.delta)
    };
    let m = m_uc(&params)?;
    let out = serde_json::json!({
        "d": args.d,
        "eps": args.eps,
        "delta": args.delta,
        "k": params.k,
        "k_prime": params.k_prime,
        "variant": if args.one_way { "one_way" } else { "two_way" },
        "m_uc": m,
    });
    emit(out);
    Ok(())
}

fn cmd_vc(family: &Path) -> Result<()> {
    let fam: FiniteFamily = read_json(family)?;
    emit(fam.vc_dimension()?);
    Ok(())
}

#[derive(serde::Deserialize)]
struct PoolFile {
    pool: Vec<TargetSpec>,
}

fn cmd_svc(args: SvcArgs) -> Result<()> {
    let file: PoolFile = read_json(&args.pool)?;
    let targets: Vec<TargetSet> =
        file.pool.iter().map(|s| s.build()).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&TargetSet> = targets.iter().collect();
    emit(svc_lower_bound(&refs, args.w, &args.z, args.axis.into())?);
    Ok(())
}

fn cmd_hausdorff(a: &Path, b: &Path) -> Result<()> {
    let ca: PointCloud = read_json(a)?;
    let cb: PointCloud = read_json(b)?;
    emit(hausdorff(&ca, &cb));
    Ok(())
}

fn cmd_render(args: RenderArgs) -> Result<()> {
    let mut cfg: ExperimentConfig = read_json(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    render_one(&cfg, &args.out)
}
