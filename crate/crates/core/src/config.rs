//! Scenario configuration.
//!
//! One JSON document describes one scenario: the ambiguity set, its tail
//! domination certificate, the experiment constants and the events to
//! estimate. Parse errors are reported with file, line and column so a bad
//! config can be fixed from the message alone.

use crate::ambiguity::{AmbiguitySet, DominationCondition};
use crate::capacity::{search_family, PathEvent, StrategySearchConfig};
use crate::distributions::Distribution;
use crate::sequences::Strategy;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {msg}")]
    Parse { path: String, line: usize, column: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn default_epsilon() -> f64 {
    0.25
}

fn default_replications() -> u64 {
    10_000
}

fn default_burn_in() -> usize {
    100
}

fn default_random_genomes() -> usize {
    8
}

/// A single scenario. Unknown fields are rejected so typos surface as parse
/// errors instead of silently falling back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub theta: AmbiguitySet,
    pub domination: DominationCondition,
    /// Deviation half-width for the built-in events.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Exceedance threshold for the path-supremum statistic; defaults to
    /// `epsilon` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub horizons: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub seed: u64,
    /// Evaluate only this strategy instead of searching a family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<Strategy>,
    /// Search exactly these strategies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategies: Option<Vec<Strategy>>,
    /// Events to estimate; defaults to the two-sided deviation event at
    /// `epsilon`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<PathEvent>,
    /// Horizons below this are ignored by trend verdicts.
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Pseudorandom genomes appended to the default search family.
    #[serde(default = "default_random_genomes")]
    pub random_genomes: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Read and validate a scenario from a JSON file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        let cfg: ScenarioConfig = serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path: shown,
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.name.is_empty() || self.name.contains(',') {
            return bad("name must be non-empty and comma-free".into());
        }
        self.theta.validate().map_err(|e| ConfigError::Invalid(format!("theta: {e}")))?;
        self.domination
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("domination: {e}")))?;
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive".into());
        }
        if let Some(d) = self.delta {
            if !(d.is_finite() && d > 0.0) {
                return bad("delta must be positive".into());
            }
        }
        if self.horizons.is_empty() {
            return bad("horizons must be non-empty".into());
        }
        if self.horizons[0] == 0 {
            return bad("horizons must be at least 1".into());
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return bad("horizons must be strictly increasing".into());
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.strategy.is_some() && self.strategies.is_some() {
            return bad("give either `strategy` or `strategies`, not both".into());
        }
        if let Some(s) = &self.strategy {
            s.validate(self.theta.len())
                .map_err(|e| ConfigError::Invalid(format!("strategy: {e}")))?;
        }
        if let Some(list) = &self.strategies {
            if list.is_empty() {
                return bad("`strategies` must be non-empty".into());
            }
            for s in list {
                s.validate(self.theta.len())
                    .map_err(|e| ConfigError::Invalid(format!("strategies: {e}")))?;
            }
        }
        for e in &self.events {
            e.validate().map_err(|e| ConfigError::Invalid(format!("events: {e}")))?;
        }
        Ok(())
    }

    /// Threshold for path-supremum exceedance checks.
    pub fn effective_delta(&self) -> f64 {
        self.delta.unwrap_or(self.epsilon)
    }

    /// Configured events, or the default two-sided deviation event.
    pub fn events_or_default(&self) -> Vec<PathEvent> {
        if self.events.is_empty() {
            vec![PathEvent::UnionDev { epsilon: self.epsilon }]
        } else {
            self.events.clone()
        }
    }

    /// The strategy family experiments run over: an explicit strategy, an
    /// explicit list, or the default family plus pseudorandom genomes.
    pub fn family(&self) -> Vec<Strategy> {
        if let Some(s) = &self.strategy {
            vec![s.clone()]
        } else if let Some(list) = &self.strategies {
            list.clone()
        } else {
            let search = StrategySearchConfig {
                random_genomes: self.random_genomes,
                ..StrategySearchConfig::default()
            };
            search_family(self.theta.len(), &search, self.seed)
        }
    }
}

fn bernoulli(p: f64) -> Distribution {
    Distribution::discrete(vec![(0.0, 1.0 - p), (1.0, p)]).expect("valid Bernoulli")
}

fn uniform_signs() -> Distribution {
    Distribution::discrete(vec![(-1.0, 0.5), (1.0, 0.5)]).expect("valid sign law")
}

fn heavy() -> Distribution {
    Distribution::symmetric_pareto(1.9, 1.0).expect("valid Pareto")
}

/// Two Bernoulli laws with means 0.3 and 0.7; exact evaluation territory.
pub fn corpus_a() -> ScenarioConfig {
    ScenarioConfig {
        name: "bernoulli_pair".into(),
        theta: AmbiguitySet::new(vec![bernoulli(0.3), bernoulli(0.7)]).expect("valid set"),
        domination: DominationCondition::new(1.0, bernoulli(0.7), 1.0).expect("valid domination"),
        epsilon: 0.2,
        delta: None,
        horizons: vec![4, 8, 12],
        replications: 10_000,
        seed: 101,
        strategy: None,
        strategies: None,
        events: vec![],
        burn_in: default_burn_in(),
        random_genomes: default_random_genomes(),
        output: None,
    }
}

/// Singleton fair sign flips; the classical-reduction scenario.
pub fn corpus_b() -> ScenarioConfig {
    ScenarioConfig {
        name: "uniform_signs".into(),
        theta: AmbiguitySet::singleton(uniform_signs()).expect("valid set"),
        domination: DominationCondition::new(1.0, uniform_signs(), 1.0).expect("valid domination"),
        epsilon: 0.25,
        delta: None,
        horizons: vec![100, 1_000, 10_000],
        replications: 10_000,
        seed: 202,
        strategy: None,
        strategies: None,
        events: vec![],
        burn_in: default_burn_in(),
        random_genomes: default_random_genomes(),
        output: None,
    }
}

/// Singleton symmetric Pareto with tail index 1.9 at order 1.5; the
/// heavy-tail scenario.
pub fn corpus_c() -> ScenarioConfig {
    ScenarioConfig {
        name: "pareto_heavy".into(),
        theta: AmbiguitySet::singleton(heavy()).expect("valid set"),
        domination: DominationCondition::new(1.0, heavy(), 1.5).expect("valid domination"),
        epsilon: 0.25,
        delta: Some(0.1),
        horizons: vec![1_000, 10_000, 100_000],
        replications: 10_000,
        seed: 303,
        strategy: None,
        strategies: None,
        events: vec![],
        burn_in: default_burn_in(),
        random_genomes: default_random_genomes(),
        output: None,
    }
}

/// Heavy-tailed law and its half-scale copy; genuine ambiguity with the
/// wider member dominating both tails.
pub fn corpus_d() -> ScenarioConfig {
    ScenarioConfig {
        name: "pareto_pair".into(),
        theta: AmbiguitySet::new(vec![
            heavy(),
            heavy().scaled(0.5).expect("valid scaling"),
        ])
        .expect("valid set"),
        domination: DominationCondition::new(1.0, heavy(), 1.5).expect("valid domination"),
        epsilon: 0.25,
        delta: None,
        horizons: vec![1_000, 10_000],
        replications: 10_000,
        seed: 404,
        strategy: None,
        strategies: None,
        events: vec![],
        burn_in: default_burn_in(),
        random_genomes: default_random_genomes(),
        output: None,
    }
}
