//! Run configuration: a JSON document, optionally overridden by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::cocycle::SystemSpec;
use crate::error::{Error, Result};
use crate::met::MIN_HORIZON;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Spectrum,
    Splitting,
    Verify,
    Regularity,
    Holder,
    Dichotomy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Splitting => "splitting",
            Command::Verify => "verify",
            Command::Regularity => "regularity",
            Command::Holder => "holder",
            Command::Dichotomy => "dichotomy",
        }
    }
}

/// A number, or `"auto"`: a sixth of the smallest spectral gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub enum Epsilon {
    Auto,
    Value(f64),
}

impl TryFrom<Value> for Epsilon {
    type Error = String;
    fn try_from(v: Value) -> std::result::Result<Self, String> {
        match v {
            Value::String(s) if s == "auto" => Ok(Epsilon::Auto),
            Value::Number(n) => n.as_f64().map(Epsilon::Value).ok_or_else(|| "epsilon is not a float".into()),
            other => Err(format!("epsilon must be a number or \"auto\", got {other}")),
        }
    }
}

impl From<Epsilon> for Value {
    fn from(e: Epsilon) -> Value {
        match e {
            Epsilon::Auto => json!("auto"),
            Epsilon::Value(v) => json!(v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub enum SplitIndex {
    All,
    Index(usize),
}

impl TryFrom<Value> for SplitIndex {
    type Error = String;
    fn try_from(v: Value) -> std::result::Result<Self, String> {
        match v {
            Value::String(s) if s == "all" => Ok(SplitIndex::All),
            Value::Number(n) => n.as_u64().map(|i| SplitIndex::Index(i as usize)).ok_or_else(|| "split_index must be a positive integer".into()),
            other => Err(format!("split_index must be an integer or \"all\", got {other}")),
        }
    }
}

impl From<SplitIndex> for Value {
    fn from(s: SplitIndex) -> Value {
        match s {
            SplitIndex::All => json!("all"),
            SplitIndex::Index(i) => json!(i),
        }
    }
}

fn default_horizon() -> usize {
    400
}
fn default_samples() -> usize {
    50
}
fn default_delta() -> f64 {
    0.1
}
fn default_epsilon() -> Epsilon {
    Epsilon::Auto
}
fn default_split() -> SplitIndex {
    SplitIndex::All
}
fn default_eps0() -> f64 {
    0.05
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("oseledets-out")
}
fn default_window() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    pub command: Command,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: Epsilon,
    #[serde(default = "default_split")]
    pub split_index: SplitIndex,
    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub cache: bool,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Half-width of the orbit window for the dichotomy check.
    #[serde(default = "default_window")]
    pub window: usize,
}

/// Flag values that override the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub system: Option<String>,
    pub a: Option<String>,
    /// JSON object merged into the system parameters.
    pub params: Option<String>,
    pub seed: Option<u64>,
    pub command: Option<String>,
    pub horizon: Option<usize>,
    pub samples: Option<usize>,
    pub delta: Option<f64>,
    pub epsilon: Option<String>,
    pub split_index: Option<String>,
    pub eps0: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub cache: Option<bool>,
    pub threads: Option<usize>,
    pub window: Option<usize>,
}

fn config_err(msg: impl std::fmt::Display) -> Error {
    Error::Config(msg.to_string())
}

fn read_document(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))? {
        Value::Object(m) => Ok(m),
        _ => Err(config_err(format!("{}: top level must be an object", path.display()))),
    }
}

/// `"auto"`/`"all"` stay strings, everything else is read as JSON.
fn keyword_or_number(s: &str, keyword: &str) -> Result<Value> {
    if s == keyword {
        return Ok(json!(keyword));
    }
    serde_json::from_str::<Value>(s).map_err(|_| config_err(format!("`{s}` is neither a number nor \"{keyword}\"")))
}

pub fn load(config_path: Option<&Path>, ov: &Overrides) -> Result<RunConfig> {
    let mut doc = match config_path {
        Some(p) => read_document(p)?,
        None => Map::new(),
    };
    if ov.system.is_some() || ov.a.is_some() || ov.params.is_some() || ov.seed.is_some() {
        let sys = doc.entry("system").or_insert_with(|| json!({}));
        let sys = sys.as_object_mut().ok_or_else(|| config_err("`system` must be an object"))?;
        if let Some(name) = &ov.system {
            sys.insert("name".into(), json!(name));
        }
        if let Some(seed) = ov.seed {
            sys.insert("seed".into(), json!(seed));
        }
        let params = sys.entry("params").or_insert_with(|| json!({}));
        let params = params.as_object_mut().ok_or_else(|| config_err("`system.params` must be an object"))?;
        if let Some(extra) = &ov.params {
            match serde_json::from_str::<Value>(extra).map_err(|e| config_err(format!("--params: {e}")))? {
                Value::Object(m) => params.extend(m),
                _ => return Err(config_err("--params must be a JSON object")),
            }
        }
        if let Some(a) = &ov.a {
            params.insert("A".into(), json!(a));
        }
    }
    let mut set = |k: &str, v: Value| {
        doc.insert(k.into(), v);
    };
    if let Some(c) = &ov.command {
        set("command", json!(c));
    }
    if let Some(v) = ov.horizon {
        set("horizon", json!(v));
    }
    if let Some(v) = ov.samples {
        set("samples", json!(v));
    }
    if let Some(v) = ov.delta {
        set("delta", json!(v));
    }
    if let Some(v) = &ov.epsilon {
        set("epsilon", keyword_or_number(v, "auto")?);
    }
    if let Some(v) = &ov.split_index {
        set("split_index", keyword_or_number(v, "all")?);
    }
    if let Some(v) = ov.eps0 {
        set("eps0", json!(v));
    }
    if let Some(v) = &ov.output_dir {
        set("output_dir", json!(v));
    }
    if let Some(v) = ov.cache {
        set("cache", json!(v));
    }
    if let Some(v) = ov.threads {
        set("threads", json!(v));
    }
    if let Some(v) = ov.window {
        set("window", json!(v));
    }
    let cfg: RunConfig = serde_json::from_value(Value::Object(doc)).map_err(config_err)?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Range checks plus a trial build of the system.
    pub fn validate(&self) -> Result<()> {
        if self.horizon < MIN_HORIZON {
            return Err(config_err(format!("horizon must be at least {MIN_HORIZON}")));
        }
        if self.samples == 0 {
            return Err(config_err("samples must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(config_err("delta must lie in (0, 1)"));
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(config_err("eps0 must be positive"));
        }
        if let Epsilon::Value(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(config_err("epsilon must be positive or \"auto\""));
            }
        }
        if self.split_index == SplitIndex::Index(0) {
            return Err(config_err("split_index counts from 1"));
        }
        if self.threads == Some(0) {
            return Err(config_err("threads must be at least 1"));
        }
        if self.window == 0 {
            return Err(config_err("window must be at least 1"));
        }
        self.system.build().map_err(|e| config_err(format!("system: {e}")))?;
        Ok(())
    }
}
