//! Experiment configuration: one TOML file with nested sections, every
//! key overridable by a trailing `--path.to.key=value` flag (flags win).

use serde::{Deserialize, Serialize};

use crate::algorithms::{AlgoId, BetaSchedule, Hyperparameters, LambdaSchedule};
use crate::envs::EnvSpec;
use crate::error::{Error, Result};

pub const SEED_ENV_VAR: &str = "IMLAB_SEED";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub algo: AlgoSection,
    #[serde(default)]
    pub learner: LearnerSection,
    #[serde(default)]
    pub expert: ExpertSection,
    #[serde(default)]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub bound_checks: Vec<u8>,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgoSection {
    pub name: String,
    pub iterations: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub rollouts_per_iter: usize,
    #[serde(default)]
    pub beta: BetaSchedule,
    #[serde(default)]
    pub lambda: LambdaSchedule,
}

fn default_alpha() -> f64 {
    0.5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerSection {
    pub flip_rate: f64,
    pub default_action: usize,
    pub uniform_fallback: bool,
    pub smoothing: f64,
}

impl Default for LearnerSection {
    fn default() -> Self {
        LearnerSection { flip_rate: 0.0, default_action: 0, uniform_fallback: false, smoothing: 0.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExpertSection {
    /// Corruption rate for the expert oracle; 0 keeps the optimal expert.
    pub corruption: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputsSection {
    pub csv: String,
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection { csv: "results.csv".to_string() }
    }
}

impl ExperimentConfig {
    /// Parses `text`, applies `--key=value` overrides, resolves default
    /// seeds, and validates. Error messages carry the TOML line numbers
    /// the parser reports.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for spec in overrides {
            apply_override(&mut value, spec)?;
        }
        let mut config: ExperimentConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if config.seeds.is_empty() {
            config.seeds = vec![default_seed()];
        }
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    pub fn algo_id(&self) -> Result<AlgoId> {
        self.algo.name.parse()
    }

    pub fn hyperparameters(&self, seed: u64) -> Hyperparameters {
        Hyperparameters {
            iterations: self.algo.iterations,
            alpha: self.algo.alpha,
            beta: self.algo.beta.clone(),
            rollouts_per_iter: self.algo.rollouts_per_iter,
            lambda: self.algo.lambda.clone(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let algo = self.algo_id().map_err(|e| Error::Config(e.to_string()))?;
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        for &tid in &self.bound_checks {
            if algo.theorem() != Some(tid) {
                return Err(Error::Config(format!(
                    "bound_checks: theorem {tid} does not apply to algorithm {}",
                    algo.name()
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.learner.flip_rate) {
            return Err(Error::Config(format!(
                "learner.flip_rate {} outside [0, 1]",
                self.learner.flip_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.expert.corruption) {
            return Err(Error::Config(format!(
                "expert.corruption {} outside [0, 1]",
                self.expert.corruption
            )));
        }
        self.env
            .build()
            .map_err(|e| Error::Config(format!("env: {e}")))?;
        self.hyperparameters(self.seeds[0])
            .validate()
            .map_err(|e| Error::Config(format!("algo: {e}")))?;
        Ok(())
    }
}

fn default_seed() -> u64 {
    std::env::var(SEED_ENV_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

/// Applies one `--path.to.key=value` override onto a parsed TOML tree.
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let body = spec
        .strip_prefix("--")
        .ok_or_else(|| Error::Config(format!("override '{spec}' must start with --")))?;
    let (path, raw) = body
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{spec}' must be --key=value")))?;
    let parts: Vec<&str> = path.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("override '{spec}' has an empty path segment")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{spec}': {part} is not a table")))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("override '{spec}': parent is not a table")))?;
    table.insert(parts[parts.len() - 1].to_string(), parse_scalar(raw));
    Ok(())
}

/// Interprets an override value: bool, integer, float, comma list of
/// integers/floats, or bare string.
fn parse_scalar(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if raw.contains(',') {
        let items: Vec<toml::Value> = raw.split(',').map(|p| parse_scalar(p.trim())).collect();
        return toml::Value::Array(items);
    }
    toml::Value::String(raw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seeds = [1, 2]
bound_checks = [1]

[env]
family = "cliffwalk"
length = 10
fall_cost = 1.0
horizon = 8

[algo]
name = "supervised_bc"
iterations = 1
rollouts_per_iter = 5

[learner]
flip_rate = 0.05
"#;

    #[test]
    fn parses_and_validates() {
        let cfg = ExperimentConfig::from_toml(BASE, &[]).unwrap();
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.algo_id().unwrap(), AlgoId::SupervisedBc);
        assert_eq!(cfg.learner.flip_rate, 0.05);
    }

    #[test]
    fn overrides_win_over_file() {
        let cfg = ExperimentConfig::from_toml(
            BASE,
            &[
                "--learner.flip_rate=0.1".to_string(),
                "--seeds=7,8,9".to_string(),
                "--env.horizon=20".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.learner.flip_rate, 0.1);
        assert_eq!(cfg.seeds, vec![7, 8, 9]);
        assert_eq!(cfg.env.horizon(), 20);
    }

    #[test]
    fn mismatched_theorem_is_a_config_error() {
        let err = ExperimentConfig::from_toml(BASE, &["--bound_checks=5".to_string()])
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err =
            ExperimentConfig::from_toml(BASE, &["--algo.warp_factor=9".to_string()]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn toml_errors_carry_line_numbers() {
        let bad = "seeds = [1\n[env]\n";
        let err = ExperimentConfig::from_toml(bad, &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "message should cite a line: {msg}");
    }
}
