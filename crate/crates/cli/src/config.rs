//! The toolkit configuration file: one TOML document whose sections
//! configure the state space, ingestion, EM fitting, interventions,
//! covariate typing, and the synthetic generator. Every section is
//! optional; defaults are embedded. Command-line flags override file
//! values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use endotype_core::em::EmConfig;
use endotype_core::error::{Error, Result};
use endotype_core::ingest::IngestConfig;
use endotype_core::intervention::Target;
use endotype_core::io::CovariateConfig;
use endotype_core::matrix::TransitionMatrix;
use endotype_core::state_space::{BinarizationRule, OrdinalScale, StateSpace};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ToolkitConfig {
    pub scales: ScalesSection,
    pub binarize: BinarizationRule,
    pub ingest: IngestConfig,
    pub em: EmSection,
    pub intervention: InterventionSection,
    pub covariates: CovariateConfig,
    pub association: AssociationSection,
    /// Synthetic-cohort generator settings; required by `simulate --spec`
    /// and `pipeline`.
    pub simulate: Option<SimulateSection>,
}

impl Default for ToolkitConfig {
    fn default() -> Self {
        let space = StateSpace::default();
        ToolkitConfig {
            scales: ScalesSection {
                mood: space.mood.clone(),
                pain: space.pain.clone(),
            },
            binarize: space.rule,
            ingest: IngestConfig::default(),
            em: EmSection::default(),
            intervention: InterventionSection::default(),
            covariates: CovariateConfig::default(),
            association: AssociationSection::default(),
            simulate: None,
        }
    }
}

impl ToolkitConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("cannot read config {}: {e}", path.display()),
            ))
        })?;
        toml::from_str(&text).map_err(|e| Error::Schema(format!("config {}: {e}", path.display())))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::default()),
        }
    }

    /// Build the validated state space from the scale sections.
    pub fn state_space(&self) -> Result<StateSpace> {
        StateSpace::new(
            self.scales.mood.clone(),
            self.scales.pain.clone(),
            self.binarize.clone(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalesSection {
    pub mood: OrdinalScale,
    pub pain: OrdinalScale,
}

impl Default for ScalesSection {
    fn default() -> Self {
        let space = StateSpace::default();
        ScalesSection {
            mood: space.mood,
            pain: space.pain,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct EmSection {
    pub k: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub smoothing: f64,
}

impl Default for EmSection {
    fn default() -> Self {
        let em = EmConfig::default();
        EmSection {
            k: 4,
            seed: em.seed,
            epsilon: em.epsilon,
            max_iterations: em.max_iterations,
            restarts: 3,
            smoothing: em.smoothing,
        }
    }
}

impl EmSection {
    pub fn em_config(&self) -> EmConfig {
        EmConfig {
            seed: self.seed,
            epsilon: self.epsilon,
            max_iterations: self.max_iterations,
            smoothing: self.smoothing,
        }
    }
}

/// `beta` accepts either a number or the keyword `"max"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSetting {
    Value(f64),
    Keyword(MaxKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxKeyword {
    Max,
}

impl BetaSetting {
    pub fn parse(text: &str) -> Result<Self> {
        if text == "max" {
            return Ok(BetaSetting::Keyword(MaxKeyword::Max));
        }
        text.parse::<f64>()
            .map(BetaSetting::Value)
            .map_err(|_| Error::InvalidInput(format!("beta must be a number or 'max', got '{text}'")))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct InterventionSection {
    pub target: Target,
    pub beta: BetaSetting,
    pub split: f64,
    pub strict_noop: bool,
}

impl Default for InterventionSection {
    fn default() -> Self {
        InterventionSection {
            target: Target::Mood,
            beta: BetaSetting::Keyword(MaxKeyword::Max),
            split: 0.8,
            strict_noop: false,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AssociationSection {
    /// Apply the +0.5 continuity correction instead of failing on zero
    /// cells.
    pub haldane: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateSection {
    pub participants: usize,
    pub length: usize,
    pub seed: u64,
    /// Per-day probability that a row loses its mood score, pain score,
    /// or both.
    pub missingness: f64,
    pub planted: Option<PlantedSpec>,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            participants: 100,
            length: 50,
            seed: 0,
            missingness: 0.0,
            planted: None,
        }
    }
}

/// A known mixture to generate from, with optional planted covariate
/// prevalences per component.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedSpec {
    pub weights: Vec<f64>,
    pub components: Vec<TransitionMatrix>,
    #[serde(default)]
    pub covariates: Vec<PlantedCovariate>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedCovariate {
    /// Covariate group (output column), e.g. `"condition"`.
    pub group: String,
    /// Value reported when the draw fires, e.g. `"CondA"`.
    pub value: String,
    /// Reporting probability per mixture component.
    pub prevalence: Vec<f64>,
}

impl PlantedSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.components.len() != k {
            return Err(Error::InvalidInput(
                "planted spec needs matching weights and components".into(),
            ));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 || self.weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidInput("planted weights must sum to 1".into()));
        }
        let n = self.components[0].n();
        if self.components.iter().any(|m| m.n() != n) {
            return Err(Error::InvalidInput(
                "planted components must share one state space".into(),
            ));
        }
        for cov in &self.covariates {
            if cov.prevalence.len() != k {
                return Err(Error::InvalidInput(format!(
                    "covariate '{}' needs one prevalence per component",
                    cov.value
                )));
            }
            if cov.prevalence.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::InvalidInput(format!(
                    "covariate '{}' prevalences must lie in [0, 1]",
                    cov.value
                )));
            }
        }
        Ok(())
    }
}
