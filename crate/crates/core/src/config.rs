//! Run configuration: a flat JSON document whose keys are the model
//! parameter names plus the run controls.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::error::ValidationError;
use crate::params::ModelParams;

/// Everything needed to reproduce a run or an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    /// Master seed; run i draws from stream (seed, i).
    pub seed: u64,
    /// Ensemble size.
    pub runs: u64,
    /// Keep every n-th frame. The terminal state is always kept.
    pub record_every: u64,
    /// Default output path, overridable on the command line.
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ModelParams::default(),
            seed: 0,
            runs: 1,
            record_every: 1,
            out: None,
        }
    }
}

/// Config loading failures, distinguishing malformed documents from
/// out-of-range values.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

const RUN_KEYS: [&str; 4] = ["seed", "runs", "record_every", "out"];

/// Parses and validates a flat JSON config document. Absent keys take their
/// defaults; unknown keys are rejected with the offending name.
pub fn load_config(document: &str) -> Result<RunConfig, ConfigError> {
    let root: Value =
        serde_json::from_str(document).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let Value::Object(mut map) = root else {
        return Err(ConfigError::Parse(
            "config document must be a JSON object".to_string(),
        ));
    };

    let mut config = RunConfig::default();
    if let Some(v) = map.remove("seed") {
        config.seed = field_u64("seed", &v)?;
    }
    if let Some(v) = map.remove("runs") {
        config.runs = field_u64("runs", &v)?;
    }
    if let Some(v) = map.remove("record_every") {
        config.record_every = field_u64("record_every", &v)?;
    }
    match map.remove("out") {
        None | Some(Value::Null) => {}
        Some(Value::String(s)) => config.out = Some(s),
        Some(other) => {
            return Err(ValidationError {
                key: "out".to_string(),
                reason: format!("expected a string path, got {other}"),
            }
            .into())
        }
    }

    // The remaining keys must form a (partial) ModelParams object; unknown
    // keys are rejected here by serde.
    config.params = serde_json::from_value(Value::Object(map))
        .map_err(|e| ConfigError::Parse(e.to_string()))?;

    config.validate()?;
    Ok(config)
}

/// Reads a config from a file path.
pub fn load_config_file(path: &std::path::Path) -> Result<RunConfig, ConfigError> {
    load_config(&std::fs::read_to_string(path)?)
}

/// Serializes a config to the same flat JSON layout `load_config` accepts.
pub fn serialize_config(config: &RunConfig) -> String {
    let mut map = match serde_json::to_value(&config.params) {
        Ok(Value::Object(m)) => m,
        _ => Map::new(),
    };
    map.insert("seed".into(), config.seed.into());
    map.insert("runs".into(), config.runs.into());
    map.insert("record_every".into(), config.record_every.into());
    if let Some(out) = &config.out {
        map.insert("out".into(), Value::String(out.clone()));
    }
    serde_json::to_string_pretty(&Value::Object(map)).expect("config serializes")
}

fn field_u64(key: &str, value: &Value) -> Result<u64, ConfigError> {
    value.as_u64().ok_or_else(|| {
        ValidationError {
            key: key.to_string(),
            reason: format!("expected a non-negative integer, got {value}"),
        }
        .into()
    })
}

impl RunConfig {
    /// Validates parameter bounds and run controls.
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.params.validate()?;
        if self.runs < 1 {
            return Err(ValidationError {
                key: "runs".to_string(),
                reason: "must be at least 1".to_string(),
            });
        }
        if self.record_every < 1 {
            return Err(ValidationError {
                key: "record_every".to_string(),
                reason: "must be at least 1".to_string(),
            });
        }
        Ok(())
    }
}

/// True if `key` is a run-control key rather than a model parameter.
pub fn is_run_key(key: &str) -> bool {
    RUN_KEYS.contains(&key)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_defaults() {
        let config = load_config("{}").unwrap();
        assert_eq!(config, RunConfig::default());
        let p = &config.params;
        assert_eq!(
            (p.theta, p.r, p.sigma_r, p.r_f, p.x, p.p, p.mu_kappa, p.nu, p.t_max),
            (0.95, 1.6e-4, 9.5e-4, 8e-5, 0.3, 0.2, 0.196, 1.0, 5000)
        );
        assert!((p.eta - (10f64).ln() / 20.0).abs() < 1e-15);
    }

    #[test]
    fn bound_violation_names_the_key() {
        let err = load_config(r#"{"x": 1.5}"#).unwrap_err();
        match err {
            ConfigError::Validation(v) => assert_eq!(v.key, "x"),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn partial_override_keeps_other_defaults() {
        let config = load_config(r#"{"nu": 0.5}"#).unwrap();
        assert_eq!(config.params.nu, 0.5);
        assert_eq!(config.params.x, 0.3);
        assert_eq!(config.params.t_max, 5000);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load_config(r#"{"sigma": 0.1}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sigma"), "message should name the key: {msg}");
    }

    #[test]
    fn malformed_document_is_a_parse_error() {
        assert!(matches!(load_config("{"), Err(ConfigError::Parse(_))));
        assert!(matches!(load_config("[1, 2]"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn run_controls_round_trip() {
        let config = load_config(
            r#"{"seed": 42, "runs": 8, "record_every": 10, "out": "x.csv", "n_noise": 4000}"#,
        )
        .unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.runs, 8);
        assert_eq!(config.record_every, 10);
        assert_eq!(config.out.as_deref(), Some("x.csv"));
        assert_eq!(config.params.n_noise, 4000);
        let reparsed = load_config(&serialize_config(&config)).unwrap();
        assert_eq!(reparsed, config);
    }

    #[test]
    fn zero_runs_rejected() {
        let err = load_config(r#"{"runs": 0}"#).unwrap_err();
        match err {
            ConfigError::Validation(v) => assert_eq!(v.key, "runs"),
            other => panic!("unexpected {other}"),
        }
    }
}
