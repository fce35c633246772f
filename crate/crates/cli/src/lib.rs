//! Command-line front end for the hidden-layer size meta-learning pipeline.
//!
//! Every subcommand reads and writes plain files so stages can be run one
//! at a time or all together with `pipeline`. Exit codes: 0 on success, 1
//! for invalid input or configuration, 2 when a stage fails at runtime.

pub mod artifacts;
mod commands;
pub mod config;
pub mod failure;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::PipelineConfig;
use crate::failure::CmdResult;

#[derive(Debug, Parser)]
#[command(name = "elm-meta", version, about = "Predict ELM hidden-layer sizes from dataset meta-features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check corpus admission and export normalized datasets.
    Ingest(IngestArgs),
    /// Extract the 16 meta-features of every admitted dataset.
    Features(FeaturesArgs),
    /// Find the best hidden-layer size of every admitted dataset.
    LabelSweep(LabelSweepArgs),
    /// Join a features CSV and a sweep summary into a meta-base.
    BuildMetabase(BuildMetabaseArgs),
    /// Fit one meta-learner on a meta-base and save it.
    TrainMeta(TrainMetaArgs),
    /// Leave-one-out evaluation of meta-learners on a meta-base.
    Evaluate(EvaluateArgs),
    /// Recommend a hidden-layer size for a new dataset.
    Predict(PredictArgs),
    /// Histogram of best hidden-layer sizes from a sweep summary.
    Report(ReportArgs),
    /// Run every stage from a corpus directory to the final report.
    Pipeline(PipelineArgs),
    /// Write a synthetic sinusoid corpus with known complexity.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON pipeline configuration; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads; overrides the config file and ELMMETA_WORKERS.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExtractorArgs {
    /// CV threshold for a sparse target.
    #[arg(long)]
    pub cv_sparse: Option<f64>,
    /// CV threshold for an extremely sparse target.
    #[arg(long)]
    pub cv_extreme: Option<f64>,
    /// Tukey fence multiplier.
    #[arg(long)]
    pub outlier_factor: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Global seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Draw a new train/test split for each repetition.
    #[arg(long)]
    pub resplit: bool,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory for admission.csv and normalized/.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Target column; the last column when omitted.
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output CSV; a `.meta.json` sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub extractor: ExtractorArgs,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct LabelSweepArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Directory for sweeps/ and sweep_summary.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct BuildMetabaseArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub summary: PathBuf,
    /// Output meta-base CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Mean,
    Knn1,
    Linear,
    M5,
    Svr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelKind {
    Poly,
    Rbf,
}

#[derive(Debug, Args)]
pub struct TrainMetaArgs {
    #[arg(long)]
    pub metabase: PathBuf,
    /// Output model JSON.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, conflicts_with = "learner")]
    pub family: Option<Family>,
    /// A configured learner by id, e.g. `svr-rbf-g0.1`.
    #[arg(long)]
    pub learner: Option<String>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub smoothing_k: Option<f64>,
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long, value_enum)]
    pub kernel: Option<KernelKind>,
    #[arg(long)]
    pub degree: Option<u32>,
    #[arg(long)]
    pub coef0: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub metabase: PathBuf,
    /// Directory for evaluation/ and evaluation.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Learner ids to evaluate; all configured learners when omitted.
    #[arg(long = "learner")]
    pub learners: Vec<String>,
    #[command(flatten)]
    pub extractor: ExtractorArgs,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub target: Option<String>,
    /// Output JSON; defaults to `<dataset>.prediction.json` beside the model.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub extractor: ExtractorArgs,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// A sweep summary CSV with its `.meta.json` sidecar.
    #[arg(long)]
    pub summary: PathBuf,
    /// Output CSV; defaults to histogram.csv beside the summary.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub bin_width: Option<usize>,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub bin_width: Option<usize>,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub extractor: ExtractorArgs,
    #[command(flatten)]
    pub common: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub count: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub min_components: usize,
    #[arg(long, default_value_t = 8)]
    pub max_components: usize,
    /// Also write `dataset,components` ground truth to this CSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

impl ConfigArgs {
    pub(crate) fn resolve(&self) -> CmdResult<PipelineConfig> {
        let mut cfg = PipelineConfig::load_or_default(self.config.as_deref())?;
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        Ok(cfg)
    }
}

impl ExtractorArgs {
    /// Applies the flags; true when any was given.
    pub(crate) fn apply(&self, cfg: &mut PipelineConfig) -> bool {
        let e = &mut cfg.extractor;
        let mut any = false;
        for (flag, slot) in [
            (self.cv_sparse, &mut e.cv_sparse),
            (self.cv_extreme, &mut e.cv_extreme),
            (self.outlier_factor, &mut e.outlier_factor),
        ] {
            if let Some(v) = flag {
                *slot = v;
                any = true;
            }
        }
        any
    }
}

impl SweepArgs {
    pub(crate) fn apply(&self, cfg: &mut PipelineConfig) {
        let s = &mut cfg.sweep;
        if let Some(v) = self.n_min {
            s.n_min = v;
        }
        if let Some(v) = self.n_max {
            s.n_max = v;
        }
        if let Some(v) = self.repetitions {
            s.repetitions = v;
        }
        if let Some(v) = self.train_fraction {
            s.train_fraction = v;
        }
        if self.resplit {
            s.resplit_per_repetition = true;
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::default().default_filter_or("info");
    let _ = env_logger::Builder::from_env(env)
        .format_timestamp(None)
        .format_target(false)
        .target(env_logger::Target::Stderr)
        .try_init();
}

/// Parses `args` (program name first) and runs the chosen subcommand.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            log::error!("{f}");
            f.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn sweep_flags_override_config() {
        let mut cfg = PipelineConfig::default();
        let args = SweepArgs {
            n_max: Some(40),
            seed: Some(9),
            ..SweepArgs::default()
        };
        args.apply(&mut cfg);
        assert_eq!(cfg.sweep.n_max, 40);
        assert_eq!(cfg.sweep.n_min, 1);
        assert_eq!(cfg.effective_sweep().base_seed, 9);
    }

    #[test]
    fn extractor_flags_report_use() {
        let mut cfg = PipelineConfig::default();
        assert!(!ExtractorArgs::default().apply(&mut cfg));
        let args = ExtractorArgs {
            outlier_factor: Some(3.0),
            ..ExtractorArgs::default()
        };
        assert!(args.apply(&mut cfg));
        assert_eq!(cfg.extractor.outlier_factor, 3.0);
    }
}
