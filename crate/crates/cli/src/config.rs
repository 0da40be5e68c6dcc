//! Optional TOML run file. Any flag can be given here; the command line wins.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub corpus: Option<PathBuf>,
    pub lexicons: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub transitivity: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub seed: Option<u64>,
    pub trees: Option<usize>,
    pub workers: Option<usize>,
    pub strict: Option<bool>,
    pub merge_overlaps: Option<bool>,
    pub exclude: Option<Vec<String>>,
}

impl FileConfig {
    /// Reads `path`; relative paths inside are taken relative to its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| anyhow::anyhow!("cannot read config {}: {}", path.display(), e))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| anyhow::anyhow!("config {}: {}", path.display(), e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.corpus,
            &mut cfg.lexicons,
            &mut cfg.rules,
            &mut cfg.labels,
            &mut cfg.transitivity,
            &mut cfg.model,
            &mut cfg.gold,
            &mut cfg.pred,
            &mut cfg.features,
            &mut cfg.out,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}
