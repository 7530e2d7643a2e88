//! Layered configuration: command-line flags over a JSON file over defaults.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context};
use bfly_core::ButterflyKind;
use serde::{Deserialize, Deserializer, Serialize};

use crate::cli::Emit;

pub const DEFAULT_SEED: u64 = 20_240_601;
pub const DEFAULT_OUT: &str = "bfly-out";

/// Candidate tolerance multiplier, or no tolerance at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TolMult {
    Off,
    Mult(f64),
}

impl TolMult {
    pub fn get(self) -> Option<f64> {
        match self {
            Self::Off => None,
            Self::Mult(t) => Some(t),
        }
    }
}

impl fmt::Display for TolMult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Off => f.write_str("none"),
            Self::Mult(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for TolMult {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "off" => Ok(Self::Off),
            other => {
                let t: f64 = other
                    .parse()
                    .map_err(|_| format!("expected a positive real or `none`, got {s:?}"))?;
                if t.is_finite() && t > 0.0 {
                    Ok(Self::Mult(t))
                } else {
                    Err(format!(
                        "tolerance multiplier must be positive and finite, got {s}"
                    ))
                }
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawTol {
    Number(f64),
    Text(String),
}

// A present `null` means "no tolerance"; an absent key means "not configured".
fn tol_field<'de, D: Deserializer<'de>>(d: D) -> Result<Option<TolMult>, D::Error> {
    let raw: Option<RawTol> = Option::deserialize(d)?;
    match raw {
        None => Ok(Some(TolMult::Off)),
        Some(RawTol::Number(t)) if t.is_finite() && t > 0.0 => Ok(Some(TolMult::Mult(t))),
        Some(RawTol::Number(t)) => Err(serde::de::Error::custom(format!(
            "tolerance multiplier must be positive and finite, got {t}"
        ))),
        Some(RawTol::Text(s)) => s.parse().map(Some).map_err(serde::de::Error::custom),
    }
}

/// Contents of `--json-config`. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n: Option<u32>,
    pub max_n: Option<u32>,
    pub trials: Option<usize>,
    pub kind: Option<ButterflyKind>,
    pub strategy: Option<String>,
    pub strategies: Option<String>,
    pub emit: Option<Emit>,
    #[serde(default, deserialize_with = "tol_field")]
    pub tol_mult: Option<TolMult>,
    pub sparsity_tol_mult: Option<f64>,
    pub monotone: Option<bool>,
    pub strict: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Resolved settings shared by every experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: String,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub n: u32,
    pub trials: usize,
    pub tol_mult: Option<f64>,
}

pub fn pick<T>(cli: Option<T>, file: Option<T>, default: T) -> T {
    cli.or(file).unwrap_or(default)
}

pub fn check_n(n: u32, min: u32, max: u32, what: &str) -> anyhow::Result<u32> {
    if !(min..=max).contains(&n) {
        bail!("{what} needs {min} <= n <= {max}, got {n}");
    }
    Ok(n)
}
