//! TOML configuration. Every section and key is optional; missing keys take
//! the library defaults. Command-line flags override file values.
//!
//! ```toml
//! [filter]
//! min_tokens = 5
//! max_tokens = 80
//!
//! [synth]
//! max_ngram = 10
//! phrase_max_tries = 50
//!
//! [train]
//! objective = "multi_task"
//! margin = 5.0
//! lr = 0.005
//! max_epochs = 5
//!
//! [eval]
//! threshold = 0.5
//! divpct_thresholds = [10.0, 20.0, 30.0, 40.0]
//!
//! [service]
//! session_size = 120
//! annotators_per_pair = 3
//! duplicates_per_session = 5
//! references_per_session = 5
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use semdiv_core::corpus::FilterConfig;
use semdiv_core::evaluate::EvalConfig;
use semdiv_core::refresd::QcConfig;
use semdiv_core::scorer::TrainConfig;
use semdiv_core::synth::SynthConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub filter: FilterConfig,
    pub synth: SynthConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub service: ServiceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub session_size: usize,
    pub annotators_per_pair: usize,
    /// Items re-served under a fresh id to check self-consistency.
    pub duplicates_per_session: usize,
    /// Items with a known class, drawn from the loaded dataset.
    pub references_per_session: usize,
    pub rng_seed: u64,
    pub qc: QcConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            session_size: 120,
            annotators_per_pair: 3,
            duplicates_per_session: 5,
            references_per_session: 5,
            rng_seed: 0,
            qc: QcConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.annotators_per_pair != semdiv_core::refresd::ANNOTATORS_PER_PAIR {
            return Err(format!(
                "annotators_per_pair must be {}",
                semdiv_core::refresd::ANNOTATORS_PER_PAIR
            ));
        }
        if self.duplicates_per_session + self.references_per_session >= self.session_size {
            return Err("duplicates and references must leave room in the session".into());
        }
        Ok(())
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Config::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                Config::parse(&text).with_context(|| format!("in config {}", p.display()))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.filter.validate().map_err(anyhow::Error::msg).context("[filter]")?;
        self.synth.validate().map_err(anyhow::Error::msg).context("[synth]")?;
        self.train.validate().context("[train]")?;
        self.service.validate().map_err(anyhow::Error::msg).context("[service]")?;
        Ok(())
    }
}
