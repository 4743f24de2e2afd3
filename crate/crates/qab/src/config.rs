//! Run configuration: JSON with complex numbers as `[re, im]` pairs.
//!
//! Parsing goes through `serde_json::Value` by hand so that every error can
//! name the offending field (`tolerances.algebra`, `x_minus[2][1]`, ...).

use num_complex::Complex64;
use qab_core::kinematics::{ModelParams, RawParams};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

pub const SCHEMA_VERSION: u32 = 1;

pub const SUITES: [&str; 8] = ["rep-check", "coalgebra", "smatrix", "ybe", "kmatrix", "bybe", "unitarity", "limits"];

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// Path of the offending field, if the error is tied to one.
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { field: Some(field.into()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.field {
            Some(field) => write!(f, "config field `{field}`: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Precision {
    Double,
    /// Mantissa bits of the software float.
    High(u32),
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Double => f.write_str("double"),
            Precision::High(bits) => write!(f, "high:{bits}"),
        }
    }
}

impl FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "double" {
            return Ok(Precision::Double);
        }
        let bits = s
            .strip_prefix("high:")
            .and_then(|b| b.parse::<u32>().ok())
            .ok_or_else(|| format!("expected `double` or `high:<bits>`, got `{s}`"))?;
        if !(64..=4096).contains(&bits) {
            return Err(format!("precision bits must be in 64..=4096, got {bits}"));
        }
        Ok(Precision::High(bits))
    }
}

impl From<Precision> for String {
    fn from(p: Precision) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Precision {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Tolerance tiers; each adds one level of matrix-product error amplification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub closed_form: f64,
    pub algebra: f64,
    pub intertwiner: f64,
    pub composite: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { closed_form: 1e-12, algebra: 1e-10, intertwiner: 1e-9, composite: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema_version: u32,
    pub q: [f64; 2],
    pub g: [f64; 2],
    pub alpha: [f64; 2],
    pub alpha_tilde: [f64; 2],
    pub gamma: [f64; 2],
    pub gamma_bar: [f64; 2],
    /// Bound-state numbers to sweep.
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Explicit x⁻ values used instead of random sampling (cycled).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub x_minus: Vec<[f64; 2]>,
    pub tolerances: Tolerances,
    pub precision: Precision,
    /// Suites run by `all` (every suite when empty).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let raw = RawParams::default();
        let pair = |z: Complex64| [z.re, z.im];
        RunConfig {
            schema_version: SCHEMA_VERSION,
            q: pair(raw.q),
            g: pair(raw.g),
            alpha: pair(raw.alpha),
            alpha_tilde: pair(raw.alpha_tilde),
            gamma: pair(raw.gamma),
            gamma_bar: pair(raw.gamma_bar),
            m: vec![1, 2],
            samples: 5,
            seed: 0,
            x_minus: Vec::new(),
            tolerances: Tolerances::default(),
            precision: Precision::Double,
            suites: Vec::new(),
        }
    }
}

fn cx(p: [f64; 2]) -> Complex64 {
    Complex64::new(p[0], p[1])
}

impl RunConfig {
    pub fn raw_params(&self) -> RawParams {
        RawParams {
            q: cx(self.q),
            g: cx(self.g),
            alpha: cx(self.alpha),
            alpha_tilde: cx(self.alpha_tilde),
            gamma: cx(self.gamma),
            gamma_bar: cx(self.gamma_bar),
        }
    }

    pub fn params(&self) -> Result<ModelParams<f64>, ConfigError> {
        let field = |e: &qab_core::QabError| match e {
            qab_core::QabError::RootOfUnity { .. } => "q",
            _ => "g",
        };
        let p = ModelParams::from_raw(&self.raw_params()).map_err(|e| ConfigError::at(field(&e), e.to_string()))?;
        p.check_generic_q(self.m.iter().copied().max().unwrap_or(1))
            .map_err(|e| ConfigError::at("q", e.to_string()))?;
        Ok(p)
    }

    pub fn x_minus_values(&self) -> Vec<Complex64> {
        self.x_minus.iter().copied().map(cx).collect()
    }

    /// Cross-field validation shared by the file parser and CLI overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.m.is_empty() {
            return Err(ConfigError::at("M", "at least one bound-state number is required"));
        }
        if let Some(i) = self.m.iter().position(|&m| !(1..=8).contains(&m)) {
            return Err(ConfigError::at(format!("M[{i}]"), "bound-state numbers must lie in 1..=8"));
        }
        if self.samples == 0 {
            return Err(ConfigError::at("samples", "must be at least 1"));
        }
        let t = &self.tolerances;
        for (name, v) in
            [("closed_form", t.closed_form), ("algebra", t.algebra), ("intertwiner", t.intertwiner), ("composite", t.composite)]
        {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::at(format!("tolerances.{name}"), "must be a positive number"));
            }
        }
        if let Some(i) = self.x_minus.iter().position(|z| z[0] == 0.0 && z[1] == 0.0) {
            return Err(ConfigError::at(format!("x_minus[{i}]"), "x^- must be nonzero"));
        }
        for (i, s) in self.suites.iter().enumerate() {
            if !SUITES.contains(&s.as_str()) {
                return Err(ConfigError::at(format!("suites[{i}]"), format!("unknown suite `{s}`")));
            }
        }
        self.params().map(|_| ())
    }
}

fn complex(v: &Value, field: &str) -> Result<[f64; 2], ConfigError> {
    let arr = v.as_array().filter(|a| a.len() == 2).ok_or_else(|| ConfigError::at(field, "expected [re, im]"))?;
    let mut out = [0.0; 2];
    for (i, x) in arr.iter().enumerate() {
        out[i] = x
            .as_f64()
            .filter(|f| f.is_finite())
            .ok_or_else(|| ConfigError::at(format!("{field}[{i}]"), "expected a finite number"))?;
    }
    Ok(out)
}

fn uint(v: &Value, field: &str) -> Result<u64, ConfigError> {
    v.as_u64().ok_or_else(|| ConfigError::at(field, "expected a non-negative integer"))
}

fn array<'a>(v: &'a Value, field: &str) -> Result<&'a Vec<Value>, ConfigError> {
    v.as_array().ok_or_else(|| ConfigError::at(field, "expected an array"))
}

fn number(v: &Value, field: &str) -> Result<f64, ConfigError> {
    v.as_f64().ok_or_else(|| ConfigError::at(field, "expected a number"))
}

fn tolerances(v: &Value) -> Result<Tolerances, ConfigError> {
    let obj = v.as_object().ok_or_else(|| ConfigError::at("tolerances", "expected an object"))?;
    let mut t = Tolerances::default();
    for (k, x) in obj {
        let path = format!("tolerances.{k}");
        let slot = match k.as_str() {
            "closed_form" => &mut t.closed_form,
            "algebra" => &mut t.algebra,
            "intertwiner" => &mut t.intertwiner,
            "composite" => &mut t.composite,
            _ => return Err(ConfigError::at(path, "unknown tolerance tier")),
        };
        *slot = number(x, &path)?;
    }
    Ok(t)
}

fn apply(c: &mut RunConfig, obj: &Map<String, Value>) -> Result<(), ConfigError> {
    for (key, v) in obj {
        let k = key.as_str();
        match k {
            "schema_version" => {
                let s = uint(v, k)?;
                if s != SCHEMA_VERSION as u64 {
                    return Err(ConfigError::at(k, format!("unsupported schema version {s} (expected {SCHEMA_VERSION})")));
                }
            }
            "q" => c.q = complex(v, k)?,
            "g" => c.g = complex(v, k)?,
            "alpha" => c.alpha = complex(v, k)?,
            "alpha_tilde" => c.alpha_tilde = complex(v, k)?,
            "gamma" => c.gamma = complex(v, k)?,
            "gamma_bar" => c.gamma_bar = complex(v, k)?,
            "M" => {
                c.m = array(v, k)?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| uint(x, &format!("M[{i}]")).map(|m| m as usize))
                    .collect::<Result<_, _>>()?
            }
            "samples" => c.samples = uint(v, k)? as usize,
            "seed" => c.seed = uint(v, k)?,
            "x_minus" => {
                c.x_minus = array(v, k)?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| complex(x, &format!("x_minus[{i}]")))
                    .collect::<Result<_, _>>()?
            }
            "tolerances" => c.tolerances = tolerances(v)?,
            "precision" => {
                let s = v.as_str().ok_or_else(|| ConfigError::at(k, "expected a string"))?;
                c.precision = s.parse().map_err(|e: String| ConfigError::at(k, e))?;
            }
            "suites" => {
                c.suites = array(v, k)?
                    .iter()
                    .enumerate()
                    .map(|(i, x)| {
                        x.as_str().map(str::to_owned).ok_or_else(|| ConfigError::at(format!("suites[{i}]"), "expected a string"))
                    })
                    .collect::<Result<_, _>>()?
            }
            _ => return Err(ConfigError::at(k, "unknown field")),
        }
    }
    Ok(())
}

/// Parse and validate a JSON config; absent fields take their defaults
/// (α = i, α̃ = 1, γ = γ̄ = 1, standard tolerance tiers).
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ConfigError { field: None, message: format!("parse error: {e}") })?;
    let obj = value.as_object().ok_or_else(|| ConfigError { field: None, message: "top level must be an object".into() })?;
    let mut c = RunConfig::default();
    apply(&mut c, obj)?;
    c.validate()?;
    Ok(c)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { field: None, message: format!("cannot read {}: {e}", path.display()) })?;
    parse_config(&text)
}
