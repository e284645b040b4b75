//! Per-command configuration and the `--config` / `--set` merge.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::CliError;
use crate::hilbert::{GridSpec, HamiltonianParams};
use crate::models::LevelWindow;
use crate::propagators::{PathIntegralOptions, PropagatorRequest};

/// Reads the JSON object in `path` (or `{}`) and applies `key=value`
/// overrides. Keys are dotted paths; values are parsed as JSON and fall back
/// to plain strings.
pub fn load(path: Option<&Path>, sets: &[String]) -> Result<Value, CliError> {
    let mut root = match path {
        None => Value::Object(Map::new()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
    };
    if !root.is_object() {
        return Err(CliError::Config("config must be a JSON object".into()));
    }
    for s in sets {
        apply_set(&mut root, s)?;
    }
    Ok(root)
}

fn apply_set(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {assignment:?}")))?;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("bad key {key:?} in --set")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("--set {key}: {} is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("key has at least one part")
}

pub fn parse<T: DeserializeOwned>(value: Value) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::Config(e.to_string()))
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub params: HamiltonianParams,
    pub lambdas: Vec<f64>,
    pub window: LevelWindow,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { params: HamiltonianParams::default(), lambdas: default_lambdas(), window: LevelWindow::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub params: HamiltonianParams,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
    pub window: LevelWindow,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            params: HamiltonianParams::default(),
            lambda_min: 0.0,
            lambda_max: 2.0,
            points: 41,
            window: LevelWindow::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavefnConfig {
    pub params: HamiltonianParams,
    pub lambda: f64,
    pub n_r: usize,
    pub ell: i64,
    /// Scattering energy; required when omega = 0.
    pub energy: Option<f64>,
    pub grid: Option<GridSpec>,
    pub n_nodes: usize,
}

impl Default for WavefnConfig {
    fn default() -> Self {
        Self { params: HamiltonianParams::default(), lambda: 0.0, n_r: 0, ell: 0, energy: None, grid: None, n_nodes: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// ℓ-sum of Bessel terms.
    #[default]
    Spectral,
    /// Eigenstate double sum (oscillator only).
    Direct,
    /// Mehler or free Gaussian kernel (λ = μ = ν = 0).
    Closed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagateConfig {
    pub request: Option<PropagatorRequest>,
    /// JSON-lines file of requests.
    pub batch: Option<String>,
    pub method: Method,
    /// Evaluate on damped contours and extrapolate δ → 0.
    pub extrapolate: bool,
    pub rel_tol: f64,
    pub n_r_cutoff: usize,
    /// Also compose this many path-integral slices.
    pub pathint: Option<usize>,
    pub pathint_options: PathIntegralOptions,
}

impl Default for PropagateConfig {
    fn default() -> Self {
        Self {
            request: None,
            batch: None,
            method: Method::default(),
            extrapolate: false,
            rel_tol: 1e-10,
            n_r_cutoff: 80,
            pathint: None,
            pathint_options: PathIntegralOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathintConfig {
    pub request: Option<PropagatorRequest>,
    pub n_slices: Vec<usize>,
    pub options: PathIntegralOptions,
}

impl Default for PathintConfig {
    fn default() -> Self {
        Self { request: None, n_slices: vec![4, 8, 16, 32], options: PathIntegralOptions::default() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_builds_nested_objects() {
        let v = load(None, &["params.omega=2".into(), "window.ell_max=3".into(), "batch=req.jsonl".into()]).unwrap();
        assert_eq!(v["params"]["omega"], 2);
        assert_eq!(v["batch"], "req.jsonl");
        let cfg: SpectrumConfig = parse(load(None, &["params.omega=2".into(), "lambdas=[0.5,1]".into()]).unwrap()).unwrap();
        assert_eq!(cfg.params.omega, 2.0);
        assert_eq!(cfg.lambdas, vec![0.5, 1.0]);
    }

    #[test]
    fn rejects_bad_keys() {
        assert!(matches!(load(None, &["noequals".into()]), Err(CliError::Usage(_))));
        assert!(matches!(load(None, &["a=1".into(), "a.b=2".into()]), Err(CliError::Config(_))));
        let v = load(None, &["bogus=1".into()]).unwrap();
        assert!(matches!(parse::<SpectrumConfig>(v), Err(CliError::Config(_))));
    }
}
