//! Reward and agent configuration with exact published defaults, plus the
//! flat key-value config file format and override merging.

use crate::decimal::Dec;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which path-score formula variant to use. `MainText` applies the
/// efficiency ratio (effective over total actions) on both tracks;
/// `Algorithm3` omits it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PathFormula {
    #[default]
    MainText,
    Algorithm3,
}

/// Format reward strategy: buffered partial credit, all-or-nothing, or none.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FormatMode {
    #[default]
    Soft,
    Strict,
    Off,
}

/// Answer matching rule used when computing the training reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    #[default]
    Exact,
    Containment,
}

/// Weights and switches of the total reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub lambda_f: Dec,
    pub lambda_p: Dec,
    pub lambda_a: Dec,
    pub alpha: Dec,
    pub path_formula: PathFormula,
    pub format_mode: FormatMode,
    pub match_mode: MatchMode,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            lambda_f: Dec::thousandths(100),
            lambda_p: Dec::thousandths(300),
            lambda_a: Dec::thousandths(600),
            alpha: Dec::thousandths(800),
            path_formula: PathFormula::default(),
            format_mode: FormatMode::default(),
            match_mode: MatchMode::default(),
        }
    }
}

impl RewardConfig {
    /// Every violated field constraint; empty when the config is valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, value) in [
            ("lambda_f", self.lambda_f),
            ("lambda_p", self.lambda_p),
            ("lambda_a", self.lambda_a),
        ] {
            if value.is_negative() {
                v.push(format!("{name}: negative coefficient"));
            }
        }
        if self.alpha.is_negative() || self.alpha > Dec::ONE {
            v.push("alpha outside [0,1]".to_string());
        }
        v
    }
}

/// Inference-loop limits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentConfig {
    /// Maximum number of search actions per episode.
    pub budget: u32,
    /// Passages returned per search.
    pub top_k: usize,
    /// Character cap per generation segment.
    pub max_response_length: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig { budget: 4, top_k: 3, max_response_length: 4096 }
    }
}

impl AgentConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.budget < 1 {
            v.push("budget must be at least 1".to_string());
        }
        if self.top_k < 1 {
            v.push("top_k must be at least 1".to_string());
        }
        v
    }
}

/// The published default configuration.
pub fn default_config() -> (RewardConfig, AgentConfig) {
    (RewardConfig::default(), AgentConfig::default())
}

/// Errors from reading the flat key-value config format.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("key `{key}`: invalid value `{value}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
}

/// A reward + agent configuration pair, as read from one config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Config {
    pub reward: RewardConfig,
    pub agent: AgentConfig,
}

const CONFIG_KEYS: [&str; 9] = [
    "lambda_f",
    "lambda_p",
    "lambda_a",
    "alpha",
    "path_formula",
    "format_mode",
    "match_mode",
    "budget",
    "top_k",
];

impl Config {
    /// Parses the flat `key = value` document, starting from defaults.
    /// Blank lines and `#` comments are skipped; unknown keys are an error.
    pub fn from_flat_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, text: trimmed.to_string() })?;
            let key = key.trim();
            let value = value.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.to_string() });
            }
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override (the `--set` mechanism). The same
    /// keys as the file format are accepted.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        };
        match key {
            "lambda_f" => self.reward.lambda_f = Dec::from_str(value).map_err(|e| bad(&e.to_string()))?,
            "lambda_p" => self.reward.lambda_p = Dec::from_str(value).map_err(|e| bad(&e.to_string()))?,
            "lambda_a" => self.reward.lambda_a = Dec::from_str(value).map_err(|e| bad(&e.to_string()))?,
            "alpha" => self.reward.alpha = Dec::from_str(value).map_err(|e| bad(&e.to_string()))?,
            "path_formula" => {
                self.reward.path_formula = match value {
                    "main_text" => PathFormula::MainText,
                    "algorithm3" => PathFormula::Algorithm3,
                    _ => return Err(bad("expected main_text or algorithm3")),
                }
            }
            "format_mode" => {
                self.reward.format_mode = match value {
                    "soft" => FormatMode::Soft,
                    "strict" => FormatMode::Strict,
                    "off" => FormatMode::Off,
                    _ => return Err(bad("expected soft, strict, or off")),
                }
            }
            "match_mode" => {
                self.reward.match_mode = match value {
                    "exact" => MatchMode::Exact,
                    "containment" => MatchMode::Containment,
                    _ => return Err(bad("expected exact or containment")),
                }
            }
            "budget" => self.agent.budget = value.parse().map_err(|_| bad("expected a positive integer"))?,
            "top_k" => self.agent.top_k = value.parse().map_err(|_| bad("expected a positive integer"))?,
            _ => return Err(ConfigError::UnknownKey { line: 0, key: key.to_string() }),
        }
        Ok(())
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = self.reward.violations();
        v.extend(self.agent.violations());
        v
    }
}

impl fmt::Display for Config {
    /// Renders the flat key-value document. Parsing the output reproduces
    /// the config exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pf = match self.reward.path_formula {
            PathFormula::MainText => "main_text",
            PathFormula::Algorithm3 => "algorithm3",
        };
        let fm = match self.reward.format_mode {
            FormatMode::Soft => "soft",
            FormatMode::Strict => "strict",
            FormatMode::Off => "off",
        };
        let mm = match self.reward.match_mode {
            MatchMode::Exact => "exact",
            MatchMode::Containment => "containment",
        };
        writeln!(f, "lambda_f = {}", self.reward.lambda_f)?;
        writeln!(f, "lambda_p = {}", self.reward.lambda_p)?;
        writeln!(f, "lambda_a = {}", self.reward.lambda_a)?;
        writeln!(f, "alpha = {}", self.reward.alpha)?;
        writeln!(f, "path_formula = {pf}")?;
        writeln!(f, "format_mode = {fm}")?;
        writeln!(f, "match_mode = {mm}")?;
        writeln!(f, "budget = {}", self.agent.budget)?;
        writeln!(f, "top_k = {}", self.agent.top_k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_constants() {
        let (r, a) = default_config();
        assert_eq!(r.lambda_f, Dec::thousandths(100));
        assert_eq!(r.lambda_p, Dec::thousandths(300));
        assert_eq!(r.lambda_a, Dec::thousandths(600));
        assert_eq!(r.alpha, Dec::thousandths(800));
        assert_eq!(r.path_formula, PathFormula::MainText);
        assert_eq!(r.format_mode, FormatMode::Soft);
        assert_eq!(r.match_mode, MatchMode::Exact);
        assert_eq!(a.budget, 4);
        assert_eq!(a.top_k, 3);
    }

    #[test]
    fn validation_reports_each_violation() {
        let mut r = RewardConfig::default();
        assert!(r.violations().is_empty());
        r.alpha = Dec::thousandths(1500);
        r.lambda_p = Dec::thousandths(-100);
        let v = r.violations();
        assert!(v.iter().any(|m| m.contains("alpha outside [0,1]")));
        assert!(v.iter().any(|m| m.contains("negative coefficient")));
    }

    #[test]
    fn flat_file_round_trip_is_exact() {
        let mut cfg = Config::default();
        cfg.set("lambda_p", "0.4").unwrap();
        cfg.set("format_mode", "strict").unwrap();
        cfg.set("budget", "7").unwrap();
        let text = cfg.to_string();
        let back = Config::from_flat_text(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = Config::from_flat_text("learning_rate = 0.1").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey { key, .. } if key == "learning_rate"));
    }

    #[test]
    fn comments_and_partial_files_merge_over_defaults() {
        let cfg = Config::from_flat_text("# sweep point\nlambda_p = 0.2\n\n").unwrap();
        assert_eq!(cfg.reward.lambda_p, Dec::thousandths(200));
        assert_eq!(cfg.reward.lambda_a, Dec::thousandths(600));
    }
}
