//! Ground-truth risk per subject, with an on-disk cache for enumerations.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{NamedSubject, TruthConfig};
use crate::distributions::Distribution;
use crate::oracle::{enumerate_risk, exact_risk_categorical, GroundTruth};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruthMethod {
    Exact,
    Enumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTruth {
    pub subject: String,
    pub r_star: f64,
    pub method: TruthMethod,
    pub resolution: Option<f64>,
    pub points_evaluated: Option<usize>,
    /// Content hash of (subject, p, resolution).
    pub key: String,
}

/// Hex SHA-256 of the inputs that determine an enumeration.
pub fn cache_key(subject: &NamedSubject, p: &Distribution<f64>, resolution: f64) -> Result<String> {
    let mut h = Sha256::new();
    h.update(subject.fingerprint.as_bytes());
    h.update(b"\0");
    h.update(serde_json::to_string(p)?.as_bytes());
    h.update(b"\0");
    h.update(resolution.to_bits().to_le_bytes());
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn cache_path(dir: &Path, key: &str) -> PathBuf {
    dir.join(format!("truth-{key}.json"))
}

/// Exact risk for a table subject under a categorical law; otherwise an
/// enumeration at `config.resolution`, read from and written to the cache
/// when one is configured.
pub fn ground_truth(subject: &NamedSubject, p: &Distribution<f64>, config: &TruthConfig) -> Result<SubjectTruth> {
    let key = cache_key(subject, p, config.resolution)?;
    if let (Some(table), Distribution::Categorical(law)) = (&subject.categorical, p) {
        let r_star = exact_risk_categorical(table, law).map_err(|e| Error::config(e.to_string()))?;
        return Ok(SubjectTruth {
            subject: subject.name.clone(),
            r_star,
            method: TruthMethod::Exact,
            resolution: None,
            points_evaluated: None,
            key,
        });
    }
    let gt = match &config.cache_dir {
        Some(dir) => cached_enumeration(subject, p, config.resolution, dir, &key)?,
        None => enumerate(subject, p, config.resolution)?,
    };
    Ok(SubjectTruth {
        subject: subject.name.clone(),
        r_star: gt.r_star,
        method: TruthMethod::Enumeration,
        resolution: Some(gt.resolution),
        points_evaluated: Some(gt.points_evaluated),
        key,
    })
}

fn enumerate(subject: &NamedSubject, p: &Distribution<f64>, resolution: f64) -> Result<GroundTruth<f64>> {
    log::info!("enumerating `{}` at resolution {resolution}", subject.name);
    enumerate_risk(subject.subject.as_ref(), p, resolution)
}

fn cached_enumeration(
    subject: &NamedSubject,
    p: &Distribution<f64>,
    resolution: f64,
    dir: &Path,
    key: &str,
) -> Result<GroundTruth<f64>> {
    let path = cache_path(dir, key);
    if let Ok(text) = std::fs::read_to_string(&path) {
        match serde_json::from_str::<GroundTruth<f64>>(&text) {
            Ok(gt) => {
                log::debug!("ground truth for `{}` read from {}", subject.name, path.display());
                return Ok(gt);
            }
            Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
        }
    }
    let gt = enumerate(subject, p, resolution)?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, serde_json::to_string(&gt)?)?;
    Ok(gt)
}
