use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use genaug_core::filter::{DEFAULT_CAPTION_TEMPLATE, DEFAULT_THRESHOLD};
use genaug_core::metrics::{AxisTransform, DEFAULT_MIN_PER_CLASS};
use genaug_core::prompts::Strategy;
use genaug_core::report::{Format, View};

#[derive(Debug, Parser)]
#[command(name = "genaug", version, about = "Generative-augmentation robustness pipeline")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Run file whose `[group.command]` section supplies default flags.
    #[arg(long, global = true, value_name = "TOML")]
    pub config: Option<PathBuf>,

    /// Worker threads for per-class parallel stages.
    #[arg(long, global = true, env = "GENAUG_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Template expansion.
    #[command(subcommand)]
    Prompts(PromptsCmd),
    /// Generation manifests.
    #[command(subcommand)]
    Manifest(ManifestCmd),
    /// Real/generated training mixtures.
    #[command(subcommand)]
    Mixture(MixtureCmd),
    /// Caption-similarity filtering.
    #[command(subcommand)]
    Filter(FilterCmd),
    #[command(subcommand)]
    Metrics(MetricsCmd),
    /// Effective-robustness baselines.
    #[command(subcommand)]
    Er(ErCmd),
    /// Overlap-restricted evaluation and recipe comparison.
    #[command(subcommand)]
    Eval(EvalCmd),
    #[command(subcommand)]
    Report(ReportCmd),
    /// Execute the steps listed under `[run]` in the run file.
    Run,
}

#[derive(Debug, Subcommand)]
pub enum PromptsCmd {
    /// Every (class, template) prompt.
    Expand {
        #[arg(long)]
        catalog: PathBuf,
        /// Template file; the built-in 80 templates when omitted.
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ManifestCmd {
    Build {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        templates: Option<PathBuf>,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        replicas: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Real dataset manifest providing conditioning images.
        #[arg(long)]
        source: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Pools {
    #[arg(long)]
    pub catalog: PathBuf,
    /// Real dataset manifest.
    #[arg(long)]
    pub real: PathBuf,
    /// Generated dataset manifest.
    #[arg(long)]
    pub generated: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum MixtureCmd {
    /// One mixture of `real-fraction` and `gen-fraction` units.
    Plan {
        #[command(flatten)]
        pools: Pools,
        #[arg(long)]
        real_fraction: f64,
        #[arg(long)]
        gen_fraction: f64,
        #[arg(long)]
        unit_size: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// The 3x3 proportion grid, one plan file per cell.
    Grid {
        #[command(flatten)]
        pools: Pools,
        #[arg(long)]
        unit_size: u64,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// A fixed total budget with a given generated share.
    FixedBudget {
        #[command(flatten)]
        pools: Pools,
        #[arg(long)]
        gen_share: f64,
        #[arg(long)]
        budget: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum FilterCmd {
    Run {
        /// Image embeddings to filter.
        #[arg(long)]
        images: PathBuf,
        /// One caption embedding per class.
        #[arg(long)]
        captions: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Template the captions were built from, recorded in the report.
        #[arg(long, default_value = DEFAULT_CAPTION_TEMPLATE)]
        caption_template: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum MetricsCmd {
    Accuracy {
        #[arg(long)]
        predictions: PathBuf,
        /// Restrict to the classes of this overlap map.
        #[arg(long)]
        overlap: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy gap between a shifted-set log and a source-set log.
    Ag {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        shifted: PathBuf,
        /// Overlap map applied to the shifted log.
        #[arg(long)]
        overlap: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-class FID between two embedding sets.
    Fid {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_PER_CLASS)]
        min_per_class: usize,
        #[arg(long)]
        out: PathBuf,
    },
    Diversity {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Transform {
    Identity,
    Logit,
}

impl From<Transform> for AxisTransform {
    fn from(t: Transform) -> Self {
        match t {
            Transform::Identity => AxisTransform::Identity,
            Transform::Logit => AxisTransform::Logit,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum ErCmd {
    /// Fit the baseline line on a zoo file.
    Fit {
        #[arg(long)]
        zoo: PathBuf,
        /// Use only zoo entries tagged with this shifted dataset.
        #[arg(long)]
        shifted_tag: Option<String>,
        #[arg(long, value_enum, default_value_t = Transform::Identity)]
        transform: Transform,
        #[arg(long)]
        out: PathBuf,
    },
    /// Effective robustness of query points against a fitted baseline.
    Score {
        #[arg(long)]
        fit: PathBuf,
        /// Query points, in zoo file format.
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum EvalCmd {
    /// Match classes of two catalogs by normalised name.
    Overlap {
        #[arg(long)]
        source_catalog: PathBuf,
        #[arg(long)]
        target_catalog: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Unmatched class ids on either side.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Accuracy rows from prediction logs.
    Run {
        #[arg(long = "predictions", required = true)]
        predictions: Vec<PathBuf>,
        /// Overlap maps, applied to logs of their target dataset.
        #[arg(long = "overlap")]
        overlaps: Vec<PathBuf>,
        #[arg(long)]
        recipe: String,
        #[arg(long)]
        source_tag: String,
        #[arg(long)]
        include_source: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy, gap and effective robustness per recipe.
    Compare {
        #[arg(long = "rows", required = true)]
        rows: Vec<PathBuf>,
        /// Zoo files; entries are grouped by their shifted tag.
        #[arg(long = "zoo", required = true)]
        zoos: Vec<PathBuf>,
        #[arg(long)]
        source_tag: String,
        /// Shifted datasets in column order.
        #[arg(long = "shifted", required = true)]
        shifted: Vec<String>,
        #[arg(long)]
        include_source: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    Table {
        #[arg(long)]
        comparison: PathBuf,
        #[arg(long, default_value = "accuracy")]
        view: View,
        #[arg(long, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plot data for the accuracy-vs-accuracy scatter.
    Scatter {
        #[arg(long)]
        zoo: PathBuf,
        #[arg(long)]
        shifted_tag: Option<String>,
        /// Baseline fit; refitted from the zoo when omitted.
        #[arg(long)]
        fit: Option<PathBuf>,
        #[arg(long)]
        queries: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}
