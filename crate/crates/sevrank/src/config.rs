//! Run configuration: one TOML file with a section per pipeline stage,
//! plus the reproducibility record every command appends to its output
//! directory. Unknown keys are rejected so typos fail loudly.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::GainKind;
use crate::model::{TrainConfig, Variant};
use crate::sampling::SamplingConfig;
use crate::synth::SynthConfig;

/// Model shape hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub variant: Variant,
    pub n: usize,
    pub hidden_dim: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::NHidden,
            n: 10,
            hidden_dim: 256,
            seed: 0,
        }
    }
}

/// Rank-list reconstruction options.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankConfig {
    pub per_subject: bool,
    pub binarize: bool,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig {
            per_subject: false,
            binarize: false,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

/// Attribution options.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// How many channels to aggregate.
    pub k: usize,
    /// Rank channels by |phi| instead of signed value.
    pub use_absolute: bool,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            k: 3,
            use_absolute: false,
        }
    }
}

/// Evaluation options.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub gain: GainKind,
}

/// Input/output paths; command-line flags override these.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out_dir: Option<PathBuf>,
    pub items: Option<PathBuf>,
    pub criteria: Option<PathBuf>,
    pub train_pairs: Option<PathBuf>,
    pub val_pairs: Option<PathBuf>,
    pub test_pairs: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub heatmaps: Option<PathBuf>,
    pub masks: Option<PathBuf>,
}

/// Union of all stage configurations.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub synth: SynthConfig,
    pub sampling: SamplingConfig,
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub rank: RankConfig,
    pub eval: EvalConfig,
    pub explain: ExplainConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    /// Parses a TOML config file, rejecting unknown keys.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }

    /// Overrides every stage seed at once.
    pub fn apply_seed(&mut self, seed: u64) {
        self.synth.seed = seed;
        self.sampling.seed = seed;
        self.train.seed = seed;
        self.model.seed = seed;
    }

    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        self.sampling.validate()?;
        self.train.validate()?;
        if self.model.n == 0 || self.model.n > crate::model::MAX_CHANNELS {
            return Err(Error::InvalidConfig(format!(
                "model.n must be in 1..={}",
                crate::model::MAX_CHANNELS
            )));
        }
        if self.explain.k == 0 {
            return Err(Error::InvalidConfig("explain.k must be >= 1".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form of the resolved config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One line of the append-only run log: enough to re-run the command and
/// reproduce its outputs bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub subcommand: String,
    pub version: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub args: Vec<String>,
    pub outputs: Vec<String>,
}

pub const RUN_LOG_NAME: &str = "run_log.jsonl";

/// Appends a record to `<out_dir>/run_log.jsonl`.
pub fn append_run_record(out_dir: &Path, record: &RunRecord) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let path = out_dir.join(RUN_LOG_NAME);
    let line = serde_json::to_string(record)
        .map_err(|e| Error::Checkpoint(format!("serialize run record: {e}")))?;
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    use std::io::Write;
    writeln!(file, "{line}").map_err(|e| Error::io(&path, e))?;
    Ok(())
}

/// Reads all records from a run log.
pub fn read_run_records(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(lineno, line)| {
            serde_json::from_str(line).map_err(|e| Error::Malformed {
                path: path.to_path_buf(),
                line: lineno + 1,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Errors unless the path points at an existing file.
pub fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::FileNotFound(path.to_path_buf()))
    }
}

/// Errors unless the path points at an existing directory.
pub fn require_dir(path: &Path) -> Result<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(Error::FileNotFound(path.to_path_buf()))
    }
}
