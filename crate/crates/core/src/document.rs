//! JSON wire format for configurations.
//!
//! Values travel as decimal strings carrying `precision_digits` significant
//! digits, never as binary floating point.

use rug::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::precision::{bits_for_digits, format_decimal, parse_decimal};
use crate::solver::Configuration;

pub const SCHEMA_VERSION: u32 = 1;
const MAX_PRECISION_DIGITS: u32 = 100_000;

#[derive(Debug, Error)]
pub enum DocumentError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("N must be >= 3, got {0}")]
    TooFewValues(usize),
    #[error("N = {declared} but {found} values present")]
    LengthMismatch { declared: usize, found: usize },
    #[error("precision_digits {0} out of range")]
    Precision(u32),
    #[error("value {index} is not a finite decimal: {text:?}")]
    BadValue { index: usize, text: String },
    #[error("residual is not a decimal: {0:?}")]
    BadResidual(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigurationDocument {
    pub schema_version: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub precision_digits: u32,
    pub residual: String,
    pub values: Vec<String>,
}

impl ConfigurationDocument {
    pub fn from_configuration(cfg: &Configuration) -> Self {
        let digits = cfg.precision_digits;
        Self {
            schema_version: SCHEMA_VERSION,
            n: cfg.n(),
            precision_digits: digits,
            residual: format_decimal(&cfg.residual, 6),
            values: cfg
                .values()
                .iter()
                .map(|v| format_decimal(v, digits))
                .collect(),
        }
    }

    pub fn to_configuration(&self) -> Result<Configuration, DocumentError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(DocumentError::SchemaVersion {
                found: self.schema_version,
            });
        }
        if self.n < 3 {
            return Err(DocumentError::TooFewValues(self.n));
        }
        if self.values.len() != self.n {
            return Err(DocumentError::LengthMismatch {
                declared: self.n,
                found: self.values.len(),
            });
        }
        if self.precision_digits == 0 || self.precision_digits > MAX_PRECISION_DIGITS {
            return Err(DocumentError::Precision(self.precision_digits));
        }
        let prec = bits_for_digits(self.precision_digits);
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(index, text)| {
                parse_decimal(text, prec).ok_or_else(|| DocumentError::BadValue {
                    index,
                    text: text.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let residual = Float::parse(self.residual.trim())
            .map(|p| Float::with_val(prec, p))
            .map_err(|_| DocumentError::BadResidual(self.residual.clone()))?;
        let mut cfg = Configuration::from_values(values, self.precision_digits);
        cfg.residual = residual;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, DocumentError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serializes");
        s.push('\n');
        s
    }
}
