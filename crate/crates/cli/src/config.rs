//! Pipeline configuration.
//!
//! Settings come from one JSON file. Command-line flags override individual
//! fields. The worker count resolves as flag, then config file, then the
//! `ELMMETA_WORKERS` environment variable, then rayon's default.

use std::fs;
use std::path::{Path, PathBuf};

use elm_metalearn::label_search::SweepConfig;
use elm_metalearn::meta_features::ExtractorConfig;
use elm_metalearn::meta_learners::LearnerSpec;
use elm_metalearn::seed::hex_digest;
use serde::{Deserialize, Serialize};

use crate::failure::{CmdResult, Failure};

pub const WORKERS_ENV: &str = "ELMMETA_WORKERS";

pub const DEFAULT_BIN_WIDTH: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Target column shared by every corpus file; the last column when unset.
    pub target: Option<String>,
    pub sweep: SweepConfig,
    pub extractor: ExtractorConfig,
    pub learners: Vec<LearnerSpec>,
    pub workers: Option<usize>,
    /// Replaces `sweep.base_seed` when set.
    pub seed: Option<u64>,
    pub histogram_bin_width: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus_dir: None,
            output_dir: None,
            target: None,
            sweep: SweepConfig::default(),
            extractor: ExtractorConfig::default(),
            learners: default_learners(),
            workers: None,
            seed: None,
            histogram_bin_width: DEFAULT_BIN_WIDTH,
        }
    }
}

/// The preset families plus the mean baseline.
pub fn default_learners() -> Vec<LearnerSpec> {
    let mut l = LearnerSpec::presets();
    l.push(LearnerSpec::Mean);
    l
}

/// The settings that determine artifact contents. Paths and the worker
/// count are left out since they do not change any output byte.
#[derive(Serialize)]
struct Hashed<'a> {
    target: &'a Option<String>,
    sweep: SweepConfig,
    extractor: &'a ExtractorConfig,
    learners: &'a [LearnerSpec],
    histogram_bin_width: usize,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> CmdResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::validation(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::validation(format!("invalid config {}: {e}", path.display())))
    }

    /// Loads `path` when given, defaults otherwise.
    pub fn load_or_default(path: Option<&Path>) -> CmdResult<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    /// Sweep settings with the global seed applied.
    pub fn effective_sweep(&self) -> SweepConfig {
        let mut s = self.sweep.clone();
        if let Some(seed) = self.seed {
            s.base_seed = seed;
        }
        s
    }

    pub fn validate(&self) -> CmdResult<()> {
        self.effective_sweep().validate()?;
        self.extractor.validate()?;
        if self.learners.is_empty() {
            return Err(Failure::validation("no meta-learners configured"));
        }
        let mut ids = Vec::new();
        for l in &self.learners {
            l.validate()?;
            let id = l.id();
            if ids.contains(&id) {
                return Err(Failure::validation(format!("meta-learner `{id}` listed twice")));
            }
            ids.push(id);
        }
        if self.histogram_bin_width < 1 {
            return Err(Failure::validation("histogram bin width must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(Failure::validation("workers must be at least 1"));
        }
        Ok(())
    }

    pub fn config_hash(&self) -> String {
        let h = Hashed {
            target: &self.target,
            sweep: self.effective_sweep(),
            extractor: &self.extractor,
            learners: &self.learners,
            histogram_bin_width: self.histogram_bin_width,
        };
        hex_digest(&serde_json::to_vec(&h).expect("config serializes"))
    }

    /// Worker count for rayon; 0 lets rayon decide.
    pub fn resolve_workers(&self) -> CmdResult<usize> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => Err(Failure::validation(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
            },
            Err(_) => Ok(0),
        }
    }

    pub fn learner(&self, id: &str) -> CmdResult<LearnerSpec> {
        self.learners
            .iter()
            .chain(default_learners().iter())
            .find(|l| l.id() == id)
            .cloned()
            .ok_or_else(|| {
                let known: Vec<String> = self.learners.iter().map(|l| l.id()).collect();
                Failure::validation(format!("unknown meta-learner `{id}` (configured: {})", known.join(", ")))
            })
    }
}
