use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::effectiveness::{DEFAULT_RESAMPLES, DEFAULT_TAIL_ALPHA};
use crate::error::{Error, Result};

/// One cash/futures pair of `date,price` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetConfig {
    pub label: String,
    pub cash: PathBuf,
    pub futures: PathBuf,
}

/// Where the base-return kurtosis of the aggregation formulas comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum KappaSource {
    /// Sample kurtosis of each leg's base returns in the estimation window.
    #[default]
    Sample,
    /// Fixed (non-excess) kurtosis per leg.
    Override { cash: f64, futures: f64 },
}

/// Declarative description of a run, read from TOML.
///
/// ```toml
/// seed = 42
/// split_date = "2003-03-17"
/// horizons = [1, 5, 20]
/// tail_alpha = 0.01
/// n_resamples = 2000
/// output_dir = "out"
///
/// [block_len]
/// 1 = 50
/// 5 = 20
/// 20 = 10
///
/// [kappa]
/// source = "sample"
///
/// [[assets]]
/// label = "FTSE"
/// cash = "ftse_cash.csv"
/// futures = "ftse_futures.csv"
/// ```
///
/// Relative paths resolve against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub split_date: NaiveDate,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default = "default_alpha")]
    pub tail_alpha: f64,
    #[serde(default = "default_resamples")]
    pub n_resamples: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Block length of the per-hedge effectiveness series, keyed by horizon.
    #[serde(default)]
    pub block_len: BTreeMap<String, usize>,
    #[serde(default)]
    pub kappa: KappaSource,
    /// Re-estimate the out-of-sample GARCH model every this many holdout
    /// periods instead of holding the estimation-window parameters fixed.
    #[serde(default)]
    pub refit_every: Option<usize>,
    pub assets: Vec<AssetConfig>,
}

fn default_horizons() -> Vec<usize> {
    vec![1, 5, 20]
}

fn default_alpha() -> f64 {
    DEFAULT_TAIL_ALPHA
}

fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// A config with defaults for everything but the data and seed.
    pub fn new(assets: Vec<AssetConfig>, split_date: NaiveDate, seed: u64) -> Self {
        Self {
            seed: Some(seed),
            split_date,
            horizons: default_horizons(),
            tail_alpha: default_alpha(),
            n_resamples: default_resamples(),
            output_dir: default_output_dir(),
            block_len: BTreeMap::new(),
            kappa: KappaSource::Sample,
            refit_every: None,
            assets,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates a config file, resolving relative paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for a in &mut self.assets {
            fix(&mut a.cash);
            fix(&mut a.futures);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed.is_none() {
            return Err(Error::Config("a seed is required for reproducible runs".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config("horizons must be non-empty and each >= 1".into()));
        }
        if !(self.tail_alpha > 0.0 && self.tail_alpha < 0.5) {
            return Err(Error::Config(format!("tail_alpha {} must be in (0, 0.5)", self.tail_alpha)));
        }
        if self.n_resamples < 2 {
            return Err(Error::Config("n_resamples must be >= 2".into()));
        }
        if self.assets.is_empty() {
            return Err(Error::Config("no assets configured".into()));
        }
        let mut labels: Vec<&str> = self.assets.iter().map(|a| a.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("asset labels must be unique".into()));
        }
        if let Some(bad) = self
            .assets
            .iter()
            .find(|a| a.label.is_empty() || !a.label.chars().all(|c| c.is_ascii_alphanumeric() || "-_".contains(c)))
        {
            return Err(Error::Config(format!(
                "asset label {:?} must be non-empty ASCII letters, digits, '-' or '_'",
                bad.label
            )));
        }
        for (k, v) in &self.block_len {
            if k.parse::<usize>().map_or(true, |h| h == 0) || *v < 2 {
                return Err(Error::Config(format!("block_len entry {k} = {v} is invalid")));
            }
        }
        if let KappaSource::Override { cash, futures } = self.kappa {
            if !(cash > 1.0 && futures > 1.0) {
                return Err(Error::InvalidKappa(cash.min(futures)));
            }
        }
        if self.refit_every == Some(0) {
            return Err(Error::Config("refit_every must be >= 1".into()));
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or_default()
    }

    /// Sorted distinct horizons, always including the base frequency.
    pub fn all_horizons(&self) -> Vec<usize> {
        let mut h = self.horizons.clone();
        h.push(1);
        h.sort_unstable();
        h.dedup();
        h
    }

    /// Configured block length, else 50 below h = 5, 20 below h = 20, 10 beyond.
    pub fn block_len_for(&self, h: usize) -> usize {
        if let Some(v) = self.block_len.get(&h.to_string()) {
            return *v;
        }
        match h {
            0..=4 => 50,
            5..=19 => 20,
            _ => 10,
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form. The output directory is left out
    /// since it does not affect any result.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        hex(&Sha256::digest(c.to_toml_string().as_bytes()))
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A seed for one named sub-computation, stable across runs and platforms.
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    let digest = Sha256::digest(format!("{seed}/{name}").as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
