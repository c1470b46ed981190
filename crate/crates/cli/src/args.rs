use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use slicefind::method::{Method, MethodsConfig};

#[derive(Debug, Parser)]
#[command(
    name = "slicefind",
    version,
    about = "Generate slice discovery benchmarks, fit slice discovery methods, and evaluate them"
)]
pub struct Cli {
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a grid of fully synthetic settings plus a manifest.
    Synth(SynthArgs),
    /// Build one setting from a base table and its embeddings.
    Gen(GenArgs),
    /// Fit one method on a setting's validation split and score its test split.
    Run(RunArgs),
    /// Evaluate methods over every setting in a manifest.
    Eval(EvalArgs),
    /// Fit one method and rank phrases describing each discovered slice.
    Describe(DescribeArgs),
    /// Merge evaluation reports and render the summary table.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON grid config; fields not given take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generation config JSON (slice_type, alpha, target, attribute, n, mu_a, mu_b, seed, model).
    #[arg(long)]
    pub config: PathBuf,
    /// Base table CSV with header `id,<attr1>,<attr2>,...`.
    #[arg(long)]
    pub base: PathBuf,
    /// Embeddings of the base rows.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PhraseArgs {
    /// Phrase list, one per line with an optional tab-separated synonym group.
    #[arg(long)]
    pub phrases: Option<PathBuf>,
    /// Embeddings of the phrases, row-aligned with `--phrases`.
    #[arg(long, requires = "phrases")]
    pub phrase_emb: Option<PathBuf>,
    /// JSON object mapping a slice name to its synonyms.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Phrases kept per slice.
    #[arg(long)]
    pub top: Option<usize>,
    /// Rank by cosine similarity instead of the dot product.
    #[arg(long)]
    pub cosine: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Setting directory.
    #[arg(long)]
    pub setting: PathBuf,
    #[arg(long)]
    pub method: Option<Method>,
    /// JSON run config with `seed`, `method`, `methods` and `eval` objects.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub phrases: PhraseArgs,
    #[command(flatten)]
    pub params: MethodFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Methods to evaluate; repeat or separate with commas.
    #[arg(long, value_delimiter = ',')]
    pub method: Vec<Method>,
    /// JSON eval config with `seed`, `method`, `methods` and `eval` objects.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    pub params: MethodFlags,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    #[arg(long)]
    pub setting: PathBuf,
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report name recall for this slice name instead of the setting's own.
    #[arg(long)]
    pub slice_name: Option<String>,
    #[command(flatten)]
    pub phrases: PhraseArgs,
    #[command(flatten)]
    pub params: MethodFlags,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// One or more `report.json` files.
    #[arg(long = "input", required = true)]
    pub inputs: Vec<PathBuf>,
    /// Write the merged report here; print the table only when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Bootstrap seed for the merged aggregates.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Hyperparameter overrides, named after the config fields.
#[derive(Debug, Default, Args)]
pub struct MethodFlags {
    #[arg(long, alias = "kbar", help_heading = "domino")]
    pub k_bar: Option<usize>,
    #[arg(long, alias = "khat", help_heading = "domino")]
    pub k_hat: Option<usize>,
    #[arg(long, help_heading = "domino")]
    pub gamma: Option<f64>,
    #[arg(long, help_heading = "domino")]
    pub max_iter: Option<usize>,
    #[arg(long, help_heading = "domino")]
    pub rel_tol: Option<f64>,
    #[arg(long, help_heading = "domino")]
    pub init_noise: Option<f64>,
    #[arg(long, help_heading = "domino")]
    pub pca_threshold: Option<usize>,
    #[arg(long, help_heading = "domino")]
    pub pca_dim: Option<usize>,
    #[arg(long, help_heading = "domino")]
    pub cov_floor: Option<f64>,

    #[arg(long, help_heading = "spotlight")]
    pub min_mass_fraction: Option<f64>,
    #[arg(long, help_heading = "spotlight")]
    pub steps: Option<usize>,
    #[arg(long, help_heading = "spotlight")]
    pub learning_rate: Option<f64>,
    #[arg(long, help_heading = "spotlight")]
    pub num_spotlights: Option<usize>,
    #[arg(long, help_heading = "spotlight")]
    pub barrier_initial: Option<f64>,
    #[arg(long, help_heading = "spotlight")]
    pub barrier_growth: Option<f64>,
    #[arg(long, help_heading = "spotlight")]
    pub barrier_every: Option<usize>,
    #[arg(long, help_heading = "spotlight")]
    pub max_step: Option<f64>,

    #[arg(long, help_heading = "multiacc")]
    pub eta: Option<f64>,
    #[arg(long, help_heading = "multiacc")]
    pub rounds: Option<usize>,
    #[arg(long, help_heading = "multiacc")]
    pub fit_fraction: Option<f64>,
    #[arg(long, help_heading = "multiacc")]
    pub ridge_lambda: Option<f64>,

    #[arg(long, help_heading = "george")]
    pub clusters_per_class: Option<usize>,
    #[arg(long, help_heading = "george")]
    pub reduce_dim: Option<usize>,
    #[arg(long, help_heading = "george")]
    pub restarts: Option<usize>,
    #[arg(long, help_heading = "george")]
    pub george_max_iter: Option<usize>,
    #[arg(long, help_heading = "george")]
    pub george_k_bar: Option<usize>,
}

fn set<T: Copy>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl MethodFlags {
    pub fn apply(&self, c: &mut MethodsConfig) {
        set(&mut c.domino.k_bar, self.k_bar);
        set(&mut c.domino.k_hat, self.k_hat);
        set(&mut c.domino.gamma, self.gamma);
        set(&mut c.domino.max_iter, self.max_iter);
        set(&mut c.domino.rel_tol, self.rel_tol);
        set(&mut c.domino.init_noise, self.init_noise);
        set(&mut c.domino.pca_threshold, self.pca_threshold);
        set(&mut c.domino.pca_dim, self.pca_dim);
        set(&mut c.domino.cov_floor, self.cov_floor);

        set(&mut c.spotlight.min_mass_fraction, self.min_mass_fraction);
        set(&mut c.spotlight.steps, self.steps);
        set(&mut c.spotlight.learning_rate, self.learning_rate);
        set(&mut c.spotlight.num_spotlights, self.num_spotlights);
        set(&mut c.spotlight.barrier_initial, self.barrier_initial);
        set(&mut c.spotlight.barrier_growth, self.barrier_growth);
        set(&mut c.spotlight.barrier_every, self.barrier_every);
        set(&mut c.spotlight.max_step, self.max_step);

        set(&mut c.multiacc.eta, self.eta);
        set(&mut c.multiacc.rounds, self.rounds);
        set(&mut c.multiacc.fit_fraction, self.fit_fraction);
        set(&mut c.multiacc.ridge_lambda, self.ridge_lambda);

        if self.clusters_per_class.is_some() {
            c.george.clusters_per_class = self.clusters_per_class;
        }
        set(&mut c.george.reduce_dim, self.reduce_dim);
        set(&mut c.george.restarts, self.restarts);
        set(&mut c.george.max_iter, self.george_max_iter);
        set(&mut c.george.k_bar, self.george_k_bar);
    }
}
