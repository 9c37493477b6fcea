use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nformats: FMAT1 v1, CSRG1 v1, SQF1 v1, VQF1 v1"
);

#[derive(Debug, Parser)]
#[command(name = "featgrind", version, long_version = LONG_VERSION, about = "Feature compression toolkit for GNN training")]
pub struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: log::LevelFilter,
    /// JSON object of flag values (long names without dashes); command-line flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Generate a synthetic graph (CSRG1).
    GenGraph(GenGraph),
    /// Generate a synthetic feature matrix (FMAT1).
    GenFeatures(GenFeatures),
    /// Delete edges from a graph.
    Sparsify(Sparsify),
    /// Log-domain scalar quantization.
    #[command(subcommand)]
    Sq(SqCommand),
    /// Per-part vector quantization.
    #[command(subcommand)]
    Vq(VqCommand),
    /// Aggregation error and feature factors.
    Factors(Factors),
    /// Simulate one training epoch of feature loading.
    Simulate(Simulate),
    /// Combine simulate outputs into a stage breakdown.
    Report(Report),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKindArg {
    Star,
    Path,
    Complete,
    ErdosRenyi,
    PreferentialAttachment,
}

#[derive(Debug, Args, Serialize)]
pub struct GenGraph {
    #[arg(long, value_enum)]
    pub kind: GraphKindArg,
    #[arg(long)]
    pub n: usize,
    /// Edge probability (erdos-renyi).
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    /// Edges per new node (preferential-attachment).
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    #[arg(long)]
    pub self_loops: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKindArg {
    Gaussian,
    LogNormal,
    OneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precision {
    F32,
    F64,
}

#[derive(Debug, Args, Serialize)]
pub struct GenFeatures {
    #[arg(long, value_enum)]
    pub kind: FeatureKindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long, default_value_t = 0.0)]
    pub mean: f64,
    #[arg(long, default_value_t = 1.0)]
    pub std: f64,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Active dimensions (one-hot); defaults to d.
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long, value_enum, default_value = "f32")]
    pub precision: Precision,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Random,
    Centralized,
    Uniform,
}

#[derive(Debug, Args, Serialize)]
pub struct Sparsify {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Fraction of edges kept, as a decimal ("0.1") or ratio ("1/3").
    #[arg(long)]
    pub keep: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SqCommand {
    /// Fit the clip range and write the parameters as JSON.
    Fit(SqFit),
    /// Fit (or load parameters) and write an SQF1 file.
    Encode(SqEncode),
    /// Decode an SQF1 file to FMAT1.
    Decode(Decode),
}

#[derive(Debug, Args, Serialize)]
pub struct SqFit {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub k: u32,
    #[arg(long, default_value_t = featgrind::sq::DEFAULT_CLIP_TAIL_FRACTION)]
    pub clip: f64,
    /// Output JSON; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SqEncode {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..=8), required_unless_present = "params")]
    pub k: Option<u32>,
    #[arg(long, default_value_t = featgrind::sq::DEFAULT_CLIP_TAIL_FRACTION)]
    pub clip: f64,
    /// Parameters written by `sq fit` (replaces --k/--clip).
    #[arg(long, conflicts_with = "k")]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct Decode {
    #[arg(long)]
    pub codec: PathBuf,
    /// Comma-separated row ids to gather; all rows when omitted.
    #[arg(long, value_delimiter = ',')]
    pub rows: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "f32")]
    pub precision: Precision,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricArg {
    Euclidean,
    Cosine,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutArg {
    Packed,
    Byte,
}

#[derive(Debug, Args, Serialize)]
pub struct VqFitArgs {
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long, value_enum, default_value = "euclidean")]
    pub metric: MetricArg,
    #[arg(long, value_enum, default_value = "packed")]
    pub layout: LayoutArg,
    /// Fraction of rows used for fitting; default min(1, 10^6/n).
    #[arg(long)]
    pub sample: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub restarts: usize,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VqCommand {
    /// Fit codebooks and write a VQF1 file without codes.
    Fit(VqFit),
    /// Encode features with fitted codebooks (or fit first) into a VQF1 file.
    Encode(VqEncode),
    /// Decode a VQF1 file to FMAT1.
    Decode(Decode),
}

#[derive(Debug, Args, Serialize)]
pub struct VqFit {
    #[arg(long)]
    pub features: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: VqFitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct VqEncode {
    #[arg(long)]
    pub features: PathBuf,
    /// Codebooks from `vq fit`; otherwise --width and --length are required.
    #[arg(long)]
    pub codebook: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: VqFitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Exact,
    Mc,
}

#[derive(Debug, Args, Serialize)]
pub struct Factors {
    #[arg(long)]
    pub graph: PathBuf,
    /// Feature matrix; the iid model is used when omitted.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, value_enum, default_value = "exact")]
    pub estimator: EstimatorArg,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Largest node count the exact estimator accepts.
    #[arg(long, default_value_t = featgrind::factors::DEFAULT_EXACT_CAP)]
    pub exact_cap: usize,
    #[arg(long)]
    pub per_node: bool,
    /// Tolerated output error; adds a compression suggestion to the report.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Bits per raw feature element for the suggestion.
    #[arg(long, default_value_t = 32)]
    pub bits: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct Simulate {
    #[arg(long)]
    pub graph: PathBuf,
    /// Feature matrix (for d and element width); alternatively --d.
    #[arg(long, required_unless_present = "d")]
    pub features: Option<PathBuf>,
    #[arg(long, conflicts_with = "features")]
    pub d: Option<usize>,
    #[arg(long, default_value_t = 32)]
    pub elem_bits: u32,
    /// full | sq:K | vq (with --codec-file) | vq:WIDTH:LENGTH
    #[arg(long, default_value = "full")]
    pub codec: String,
    /// SQF1/VQF1 file whose layout defines the row cost.
    #[arg(long)]
    pub codec_file: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "5,10,15")]
    pub fanouts: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub batch_size: usize,
    /// Training nodes drawn uniformly from the graph.
    #[arg(long, default_value_t = 0.1)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub cache_bytes: u64,
    /// CostModel JSON; otherwise the default model calibrated on the full-precision baseline.
    #[arg(long)]
    pub cost: Option<PathBuf>,
    #[arg(long, default_value_t = featgrind::pipeline::DEFAULT_LOAD_FRACTION)]
    pub load_fraction: f64,
    /// Trainers sharing the host link.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Also time the real decode path on this machine (wall clock, not reproducible).
    #[arg(long)]
    pub measure: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct Report {
    /// Outputs of `simulate`; the first is the baseline.
    #[arg(long, num_args = 1.., required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
