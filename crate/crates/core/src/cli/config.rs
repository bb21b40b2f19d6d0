use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::embedding::{Combine, EmbedTrainConfig, InferConfig};
use crate::error::{Error, Result};
use crate::evaluation::LinearConfig;
use crate::retrieval::DEFAULT_THRESHOLD;
use crate::training::SimTrainConfig;

pub const SEED_ENV: &str = "QASIM_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub min_count: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self { min_count: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    pub n_pairs: usize,
    pub positive_fraction: f64,
    /// Share of sampled pairs written to the validation file.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for PairConfig {
    fn default() -> Self {
        Self { n_pairs: 60_000, positive_fraction: 0.5, val_fraction: 0.1, seed: 42 }
    }
}

/// File locations. Every entry can also be given on the command line,
/// which takes precedence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qa: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question_vocab: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub question_model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer_model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_pairs: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simnet: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub labeled: Option<PathBuf>,
}

/// Everything a run depends on. Omitted fields take their defaults; the
/// resolved document is echoed by the training commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When set, overrides the seed of every component.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub paths: PathConfig,
    pub corpus: CorpusConfig,
    pub embed: EmbedTrainConfig,
    pub combine: Combine,
    pub infer: InferConfig,
    pub pairs: PairConfig,
    pub simnet: SimTrainConfig,
    pub linear: LinearConfig,
    pub threshold: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            paths: PathConfig::default(),
            corpus: CorpusConfig::default(),
            embed: EmbedTrainConfig::default(),
            combine: Combine::default(),
            infer: InferConfig::default(),
            pairs: PairConfig::default(),
            simnet: SimTrainConfig::default(),
            linear: LinearConfig::default(),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))
    }

    /// Seed precedence: explicit flag, then the config's top-level `seed`,
    /// then the environment default. Whatever wins is written into every
    /// component so the echoed config is complete.
    pub fn resolve_seed(&mut self, flag: Option<u64>, env: Option<&str>) -> Result<()> {
        let env_seed = match env {
            Some(s) => Some(
                s.trim()
                    .parse::<u64>()
                    .map_err(|_| Error::invalid(format!("{SEED_ENV}={s:?} is not an unsigned integer")))?,
            ),
            None => None,
        };
        if let Some(seed) = flag.or(self.seed).or(env_seed) {
            self.seed = Some(seed);
            self.embed.seed = seed;
            self.infer.seed = seed;
            self.pairs.seed = seed;
            self.simnet.seed = seed;
            self.linear.seed = seed;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.corpus.min_count == 0 {
            return Err(Error::invalid("corpus.min_count must be at least 1"));
        }
        self.embed.validate()?;
        self.simnet.validate()?;
        if self.infer.steps == 0 {
            return Err(Error::invalid("infer.steps must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.pairs.positive_fraction) {
            return Err(Error::invalid("pairs.positive_fraction must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&self.pairs.val_fraction) {
            return Err(Error::invalid("pairs.val_fraction must lie in [0, 1)"));
        }
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::invalid("threshold must lie in (0, 1]"));
        }
        if !(self.linear.learning_rate > 0.0 && self.linear.reg >= 0.0) {
            return Err(Error::invalid("linear.learning_rate must be positive and linear.reg non-negative"));
        }
        Ok(())
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
