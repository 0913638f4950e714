use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

/// Settings shared by every subcommand. A JSON file with these keys may be
/// passed with `--config`; command-line flags win over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub layout: Option<String>,
    pub chars: Option<String>,
    pub algo: Option<String>,
    pub k: Option<usize>,
    pub trees: Option<usize>,
    pub seed: Option<u64>,
    pub rules: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub bank: Option<PathBuf>,
    pub epsilon: Option<f64>,
    pub family_name: Option<String>,
    pub per_class: Option<usize>,
    pub test_fraction: Option<f64>,
    pub verify: Option<usize>,
}

pub const DEFAULT_SEED: u64 = 42;

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Flags set on the command line replace the file's values.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        RunConfig {
            input: flags.input.or(self.input),
            out: flags.out.or(self.out),
            layout: flags.layout.or(self.layout),
            chars: flags.chars.or(self.chars),
            algo: flags.algo.or(self.algo),
            k: flags.k.or(self.k),
            trees: flags.trees.or(self.trees),
            seed: flags.seed.or(self.seed),
            rules: flags.rules.or(self.rules),
            model: flags.model.or(self.model),
            bank: flags.bank.or(self.bank),
            epsilon: flags.epsilon.or(self.epsilon),
            family_name: flags.family_name.or(self.family_name),
            per_class: flags.per_class.or(self.per_class),
            test_fraction: flags.test_fraction.or(self.test_fraction),
            verify: flags.verify.or(self.verify),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// Every path the command will read must exist before it starts.
    pub fn check_inputs(&self) -> Result<()> {
        for p in [&self.input, &self.rules, &self.model, &self.bank]
            .into_iter()
            .flatten()
        {
            anyhow::ensure!(p.exists(), "input path {} does not exist", p.display());
        }
        Ok(())
    }

    pub fn out(&self) -> Result<&Path> {
        self.out.as_deref().context("--out is required")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file: RunConfig =
            serde_json::from_str(r#"{"seed": 7, "k": 5, "family_name": "A"}"#).unwrap();
        let flags = RunConfig {
            k: Some(1),
            ..RunConfig::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(
            (merged.seed(), merged.k, merged.family_name.as_deref()),
            (7, Some(1), Some("A"))
        );
        assert_eq!(RunConfig::default().seed(), DEFAULT_SEED);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
    }
}
