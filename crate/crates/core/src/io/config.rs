use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::EvalConfig;
use crate::gt::DatasetConfig;
use crate::losses::RefineConfig;
use crate::manhattan::ManhattanConfig;
use crate::ransac::ExtractConfig;
use crate::segmentation::{DcrfConfig, MrfConfig};
use crate::synth::NoiseSpec;

use super::read_file;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradCheckConfig {
    pub instances: usize,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { instances: 100 }
    }
}

/// Parameters of every subcommand. Unknown keys are rejected and missing
/// keys take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Seed propagated to every RNG; overrides per-module seeds when set.
    pub rng_seed: Option<u64>,
    pub threads: Option<usize>,
    pub extract: ExtractConfig,
    pub manhattan: ManhattanConfig,
    pub mrf: MrfConfig,
    pub dcrf: DcrfConfig,
    pub dataset: DatasetConfig,
    pub refine: RefineConfig,
    pub noise: NoiseSpec,
    pub eval: EvalConfig,
    pub grad_check: GradCheckConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    /// Reads a `.toml` or `.json` file and validates it.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = read_file(path)?;
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(text)?,
            Some("json") => Self::from_json(text)?,
            _ => return Err(Error::InvalidConfig(format!("{}: expected .toml or .json", path.display()))),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `rng_seed` to every seeded module config.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = Some(seed);
        self.extract.ransac.rng_seed = seed;
        self.dataset.ransac.rng_seed = seed;
        self.dataset.seed = seed;
        self.mrf.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |e: Error| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(m),
            other => Error::InvalidConfig(other.to_string()),
        };
        if self.threads == Some(0) {
            return Err(Error::InvalidConfig("threads must be positive".into()));
        }
        self.extract.validate().map_err(invalid)?;
        self.dataset.ransac.validate().map_err(invalid)?;
        self.mrf.validate().map_err(invalid)?;
        self.dcrf.validate().map_err(invalid)?;
        self.noise.validate().map_err(invalid)?;
        self.eval.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml_and_json() {
        let cfg = RunConfig::default();
        let toml_text = toml::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_toml(&toml_text).unwrap(), cfg);
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&json).unwrap(), cfg);
        cfg.validate().unwrap();
    }

    #[test]
    fn partial_files_take_defaults() {
        let cfg = RunConfig::from_toml("rng_seed = 3\n[mrf]\npairwise_weight = 2.5\n").unwrap();
        assert_eq!(cfg.rng_seed, Some(3));
        assert_eq!(cfg.mrf.pairwise_weight, 2.5);
        assert_eq!(cfg.mrf.max_sweeps, MrfConfig::default().max_sweeps);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(RunConfig::from_toml("colour = 1\n"), Err(Error::InvalidConfig(_))));
        assert!(matches!(RunConfig::from_toml("[mrf]\nweight = 1\n"), Err(Error::InvalidConfig(_))));
        assert!(matches!(RunConfig::from_json(r#"{"eval":{"bands":1}}"#), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn validation() {
        let cfg = RunConfig::from_toml("[eval]\nthresholds = [0.1, 0.05]\n").unwrap();
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let cfg = RunConfig::from_toml("threads = 0\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn seed_propagates() {
        let cfg = RunConfig::default().with_seed(42);
        assert_eq!(cfg.extract.ransac.rng_seed, 42);
        assert_eq!(cfg.mrf.rng_seed, 42);
        assert_eq!(cfg.dataset.seed, 42);
    }
}
