use std::path::PathBuf;
use std::process::ExitCode;

use afc_cli::config::{ConfigError, ExperimentConfig, FileFormat, GraphSource};
use afc_cli::experiment::{self, RunError};
use afc_core::bounds::{sample_size_kernel_for_afc, sample_size_oneshot};
use afc_core::ingest;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Absorbing-frequency centrality for stochastic networks.
#[derive(Parser)]
#[command(name = "afc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an Erdős–Rényi or Watts–Strogatz graph as an edge list.
    Generate(GenerateArgs),
    /// Parse a graph file and print its summary.
    Ingest(IngestArgs),
    /// Estimate the kernel only.
    Kernel(RunArgs),
    /// Estimate the kernel and compute the AFC profile, or profile a saved kernel.
    Afc(AfcArgs),
    /// Adversarial search over a relative uncertainty set.
    Robust(RunArgs),
    /// Reward-weighted summaries.
    Reward(RunArgs),
    /// Clique-pool constrained selection.
    Constrained(RunArgs),
    /// Print a sample-size planning table.
    Bounds(BoundsArgs),
    /// Run a preset experiment and check its qualitative properties.
    Reproduce(ReproduceArgs),
    /// Run every analysis enabled in the config (a TOML file or a previous manifest.json).
    Run(RunArgs),
    /// Print the default configuration as TOML.
    Defaults,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphModel {
    Er,
    Ws,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    model: GraphModel,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Edge probability (ER).
    #[arg(long, default_value_t = 0.08)]
    p: f64,
    /// Ring degree (WS).
    #[arg(long, default_value_t = 6)]
    ring_degree: usize,
    /// Rewiring probability (WS).
    #[arg(long, default_value_t = 0.10)]
    rewire_p: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    EdgeList,
    Gml,
}

#[derive(Args)]
struct IngestArgs {
    path: PathBuf,
    /// Guessed from the extension when absent.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Edge list lines carry no weight column.
    #[arg(long)]
    unweighted: bool,
    /// Also write the graph as a 0-based edge list.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config or manifest.json; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Results directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct AfcArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Profile an existing kernel CSV instead of estimating one.
    #[arg(long, conflicts_with = "config")]
    kernel: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct BoundsArgs {
    /// Target accuracies, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.01])]
    eps: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05])]
    delta: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [100])]
    n: Vec<usize>,
    /// Leak floor for the kernel plan.
    #[arg(long, value_delimiter = ',', default_values_t = [0.15])]
    r_min: Vec<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Fig1,
    Er,
    Ws,
    Lesmis,
}

#[derive(Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    preset: Preset,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Only {
    Kernel,
    Baseline,
    Robust,
    Reward,
    Constrained,
    All,
}

fn load_config(args: &RunArgs, only: Only) -> Result<ExperimentConfig, RunError> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let set = |c: &mut ExperimentConfig, baseline, robust, reward, constrained| {
        c.baseline.enabled = baseline;
        c.robust.enabled = robust;
        c.reward.enabled = reward;
        c.constrained.enabled = constrained;
    };
    match only {
        Only::Kernel => set(&mut config, false, false, false, false),
        Only::Baseline => set(&mut config, true, false, false, false),
        Only::Robust => set(&mut config, false, true, false, false),
        Only::Reward => set(&mut config, false, false, true, false),
        Only::Constrained => set(&mut config, false, false, false, true),
        Only::All => {}
    }
    config.validate()?;
    Ok(config)
}

fn run(args: RunArgs, only: Only, name: &str) -> Result<(), RunError> {
    let config = load_config(&args, only)?;
    let out = experiment::output_dir(args.out, name);
    let summary = experiment::run_experiment(&config, &out)?;
    println!("kernel sha256 {}", summary.kernel_sha256);
    if !summary.top.is_empty() {
        println!("top nodes {:?}", summary.top);
    }
    println!("wrote {} files to {}", summary.files.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("AFC_THREADS") {
        match threads.parse::<usize>() {
            Ok(t) if t > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
            }
            _ => {
                eprintln!("configuration error: AFC_THREADS={threads:?} is not a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Ingest(a) => ingest_cmd(a),
        Command::Kernel(a) => run(a, Only::Kernel, "kernel"),
        Command::Afc(a) => match a.kernel {
            Some(path) => {
                let out = experiment::output_dir(a.run.out, "afc");
                experiment::afc_from_kernel_file(&path, None, a.top, &out).map(|top| {
                    println!("top nodes {top:?}");
                    println!("wrote profile to {}", out.display());
                })
            }
            None => run(a.run, Only::Baseline, "afc"),
        },
        Command::Robust(a) => run(a, Only::Robust, "robust"),
        Command::Reward(a) => run(a, Only::Reward, "reward"),
        Command::Constrained(a) => run(a, Only::Constrained, "constrained"),
        Command::Bounds(a) => bounds(a),
        Command::Reproduce(a) => reproduce(a),
        Command::Run(a) => run(a, Only::All, "run"),
        Command::Defaults => match toml::to_string(&ExperimentConfig::default()) {
            Ok(text) => {
                print!("{text}");
                Ok(())
            }
            Err(e) => Err(RunError::Io(std::io::Error::other(e))),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn generate(a: GenerateArgs) -> Result<(), RunError> {
    let source = match a.model {
        GraphModel::Er => GraphSource::ErdosRenyi { n: a.n, p: a.p },
        GraphModel::Ws => GraphSource::WattsStrogatz { n: a.n, ring_degree: a.ring_degree, rewire_p: a.rewire_p },
    };
    let check = ExperimentConfig { graph: source.clone(), ..Default::default() };
    check.validate()?;
    let g = experiment::build_graph(&source, a.seed)?;
    let text = ingest::write_edge_list(&g);
    match a.out {
        Some(path) => std::fs::write(&path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn ingest_cmd(a: IngestArgs) -> Result<(), RunError> {
    let format = a.format.map(|f| match f {
        Format::EdgeList => FileFormat::EdgeList,
        Format::Gml => FileFormat::Gml,
    });
    if !a.path.exists() {
        return Err(ConfigError(format!("{} does not exist", a.path.display())).into());
    }
    let source = GraphSource::File { path: a.path, format, weighted: Some(!a.unweighted) };
    let g = experiment::build_graph(&source, 0)?;
    let min_w = g.edges().iter().map(|e| e.w).fold(f64::INFINITY, f64::min);
    println!("nodes {}", g.n());
    println!("edges {}", g.edge_count());
    if g.edge_count() > 0 {
        println!("weights [{min_w}, {}]", g.max_weight());
    }
    if let Some(out) = a.out {
        std::fs::write(out, ingest::write_edge_list(&g))?;
    }
    Ok(())
}

fn bounds(a: BoundsArgs) -> Result<(), RunError> {
    println!("{:>8} {:>8} {:>6} {:>8} {:>14} {:>14} {:>12}", "eps", "delta", "n", "r_min", "M_center_law", "M_kernel", "eps_q");
    for &eps in &a.eps {
        for &delta in &a.delta {
            for &n in &a.n {
                for &r in &a.r_min {
                    let oneshot = sample_size_oneshot(eps, delta, n)?;
                    let plan = sample_size_kernel_for_afc(eps, delta, n, r)?;
                    println!("{eps:>8} {delta:>8} {n:>6} {r:>8} {oneshot:>14} {:>14} {:>12.3e}", plan.samples, plan.eps_q);
                }
            }
        }
    }
    Ok(())
}

fn reproduce(a: ReproduceArgs) -> Result<(), RunError> {
    let name = match a.preset {
        Preset::Fig1 => "fig1",
        Preset::Er => "er",
        Preset::Ws => "ws",
        Preset::Lesmis => "lesmis",
    };
    let out = experiment::output_dir(a.out, name);
    let checks = experiment::reproduce(name, a.seed, &out)?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    println!("wrote {}", out.display());
    if failed > 0 {
        return Err(RunError::Check(format!("{failed} of {} checks", checks.len())));
    }
    Ok(())
}
