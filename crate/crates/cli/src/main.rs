use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vnf_autoscale::cost::PenaltyScope;
use vnf_autoscale::labeling::LabelKind;
use vnf_autoscale::learners::Algorithm;
use vnf_autoscale::simulate::Technology;

mod commands;

/// Proactive VNF auto-scaling experiments: traces, models, evaluation,
/// QoS/energy simulation and SD-WAN leasing cost.
#[derive(Debug, Parser)]
#[command(name = "vnfscale", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed; every stage seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory receiving all outputs.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Debug, Args, Clone)]
struct TraceArg {
    /// Input trace CSV (`timestamp,load_bits`, 300 s spacing). Without it the
    /// configured synthetic trace is generated.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
struct SplitArgs {
    #[arg(long)]
    train_days: Option<u32>,
    #[arg(long)]
    test_days: Option<u32>,
}

#[derive(Debug, Args, Clone, Default)]
struct ModelArgs {
    /// Model trained on QML labels [default: <out-dir>/model-<algo>-qml.vnfm].
    #[arg(long)]
    model_qml: Option<PathBuf>,
    /// Model trained on CML labels [default: <out-dir>/model-<algo>-cml.vnfm].
    #[arg(long)]
    model_cml: Option<PathBuf>,
    /// Algorithm used to locate default model files.
    #[arg(long)]
    algo: Option<Algorithm>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic trace.
    Generate(GenerateArgs),
    /// Build the labeled dataset (dataset.csv + dataset.json).
    Dataset {
        #[command(flatten)]
        trace: TraceArg,
        /// Number of features (6..=27).
        #[arg(long)]
        features: Option<usize>,
    },
    /// Train one model on the training days.
    Train {
        #[command(flatten)]
        trace: TraceArg,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long)]
        label: Option<LabelKind>,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        features: Option<usize>,
        /// Forest size.
        #[arg(long)]
        trees: Option<usize>,
    },
    /// Evaluate models on the test days and print precision / FP rate / ROC area.
    Evaluate {
        #[command(flatten)]
        trace: TraceArg,
        /// Model files [default: every model-*.vnfm in the output directory].
        #[arg(long)]
        model: Vec<PathBuf>,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Rank features by information gain and run PCA.
    Rank {
        #[command(flatten)]
        trace: TraceArg,
        #[arg(long)]
        label: Option<LabelKind>,
        #[arg(long)]
        bins: Option<usize>,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Learning curves over feature count and training days.
    Curve {
        #[command(flatten)]
        trace: TraceArg,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long)]
        label: Option<LabelKind>,
        /// Comma-separated feature counts.
        #[arg(long, value_delimiter = ',')]
        feature_counts: Option<Vec<usize>>,
        /// Comma-separated training-day counts.
        #[arg(long, value_delimiter = ',')]
        day_counts: Option<Vec<u32>>,
        #[command(flatten)]
        split: SplitArgs,
    },
    /// Replay QML, CML and moving-average decisions on the test days.
    Simulate {
        #[command(flatten)]
        trace: TraceArg,
        #[command(flatten)]
        models: ModelArgs,
        /// Virtualization profiles [default: all configured].
        #[arg(long)]
        profile: Vec<Technology>,
        /// Also dump per-piece timelines as CSV.
        #[arg(long)]
        timeline: bool,
        #[arg(long)]
        test_days: Option<u32>,
    },
    /// SD-WAN leasing cost of each decision method.
    Cost {
        /// One trace shared by all sites, or one per site in site order.
        #[arg(long)]
        trace: Vec<PathBuf>,
        #[command(flatten)]
        models: ModelArgs,
        #[arg(long)]
        profile: Option<Technology>,
        #[arg(long)]
        penalty_scope: Option<PenaltyScope>,
        #[arg(long)]
        test_days: Option<u32>,
    },
    /// Run every stage and write all reports.
    Report {
        #[command(flatten)]
        trace: TraceArg,
        #[command(flatten)]
        split: SplitArgs,
        /// Also measure train/test times (timing.json, not reproducible).
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Output trace CSV.
    #[arg(short = 'o', long = "output")]
    output: PathBuf,
    #[arg(long)]
    days: Option<u32>,
    #[arg(long)]
    base_gbps: Option<f64>,
    #[arg(long)]
    amplitude_gbps: Option<f64>,
    #[arg(long)]
    noise_gbps: Option<f64>,
    #[arg(long)]
    weekday_factor: Option<f64>,
    /// Expected bursts per day.
    #[arg(long)]
    burst_rate: Option<f64>,
    #[arg(long)]
    burst_gbps: Option<f64>,
    #[arg(long)]
    cap_gbps: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
