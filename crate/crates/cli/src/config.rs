//! Optional TOML file supplying defaults for any flag. Paths inside it are
//! taken relative to the file's own directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub language: Option<String>,
    pub stopwords: Option<PathBuf>,
    pub units: Option<PathBuf>,
    pub personal: Option<PathBuf>,
    pub d_max: Option<f64>,
    pub cc_weight: Option<f64>,
    pub ca_weight: Option<f64>,
    pub epsilon: Option<f64>,
    pub mode: Option<String>,
    pub cc_weights: Option<Vec<f64>>,
    pub d_max_values: Option<Vec<f64>>,
    pub d_max_min: Option<f64>,
    pub d_max_max: Option<f64>,
    pub d_max_steps: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: Config = toml::from_str(&text).map_err(|e| CliError::Input {
            path: path.display().to_string(),
            message: match e.span() {
                Some(span) => format!(
                    "line {}: {}",
                    text[..span.start].matches('\n').count() + 1,
                    e.message()
                ),
                None => e.message().to_string(),
            },
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut config.stopwords, &mut config.units, &mut config.personal]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }
}
