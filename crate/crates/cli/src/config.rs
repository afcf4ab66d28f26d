//! Pipeline configuration: a TOML file whose values command-line flags may override.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use sectorscope::changepoint::RjmcmcConfig;
use sectorscope::ingest::AssetClass;
use sectorscope::sectors::Linkage;

/// Environment variable naming the default configuration file.
pub const CONFIG_ENV: &str = "SECTORSCOPE_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub prices: PathBuf,
    pub sectors: PathBuf,
    pub out: PathBuf,
    /// Restrict the panel to one asset class.
    pub asset_class: Option<AssetClass>,
    /// Rolling window `S` for correlations.
    pub window: usize,
    pub linkage: Linkage,
    /// Master seed; per-sector chain seeds are derived from it.
    pub seed: u64,
    pub rjmcmc: RjmcmcConfig,
    /// Explicit sector → ticker choices; other sectors use their first ticker.
    pub representatives: BTreeMap<String, String>,
    /// Frequency grid size of the spectrum surfaces.
    pub grid: usize,
    pub mjw_order: f64,
    pub mjw_normalize: bool,
    pub mjw_empty_penalty: Option<f64>,
    pub windows: Vec<usize>,
    pub bests: Vec<usize>,
    /// Also run the out-of-sample portfolio variant.
    pub out_of_sample: bool,
    pub plots: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            prices: PathBuf::from("prices.csv"),
            sectors: PathBuf::from("sectors.csv"),
            out: PathBuf::from("out"),
            asset_class: None,
            window: 150,
            linkage: Linkage::Average,
            seed: 0,
            rjmcmc: RjmcmcConfig::default(),
            representatives: BTreeMap::new(),
            grid: 64,
            mjw_order: 1.0,
            mjw_normalize: false,
            mjw_empty_penalty: None,
            windows: vec![120, 150, 180],
            bests: vec![2, 3, 4, 5],
            out_of_sample: false,
            plots: true,
        }
    }
}

impl PipelineConfig {
    /// Reads a TOML file. Relative paths inside it resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.prices, &mut cfg.sectors, &mut cfg.out] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Config from `path`, else from the file named by [`CONFIG_ENV`], else defaults.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::from_file(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::from_file(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    /// Checks inputs exist and numeric settings are usable, before any work starts.
    pub fn validate(&self) -> Result<()> {
        for (what, p) in [("prices", &self.prices), ("sectors", &self.sectors)] {
            if !p.is_file() {
                bail!("{what} file {} does not exist", p.display());
            }
        }
        if self.window < 2 {
            bail!("window {} must be at least 2", self.window);
        }
        if self.grid == 0 {
            bail!("frequency grid must be non-empty");
        }
        if !(self.mjw_order >= 1.0 && self.mjw_order.is_finite()) {
            bail!("mjw order {} must be at least 1", self.mjw_order);
        }
        if self.windows.iter().any(|&w| w < 2) || self.windows.is_empty() {
            bail!("portfolio windows must be non-empty and at least 2");
        }
        if self.bests.iter().any(|&b| b == 0) || self.bests.is_empty() {
            bail!("portfolio best counts must be non-empty and positive");
        }
        if self.rjmcmc.burnin >= self.rjmcmc.iterations {
            bail!(
                "burn-in {} must be below the iteration count {}",
                self.rjmcmc.burnin,
                self.rjmcmc.iterations
            );
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "window = 90\nprices = \"p.csv\"\n[rjmcmc]\niterations = 200\nburnin = 100\n").unwrap();
        let cfg = PipelineConfig::from_file(&path).unwrap();
        assert_eq!(cfg.window, 90);
        assert_eq!(cfg.rjmcmc.iterations, 200);
        assert_eq!(cfg.rjmcmc.t_min, 40);
        assert_eq!(cfg.prices, dir.path().join("p.csv"));
        assert_eq!(cfg.bests, vec![2, 3, 4, 5]);
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "windw = 90\n").unwrap();
        assert!(PipelineConfig::from_file(&path).is_err());
    }

    #[test]
    fn missing_inputs_fail_validation() {
        let cfg = PipelineConfig {
            prices: "/nonexistent/p.csv".into(),
            ..Default::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("prices"));
    }
}
