//! Run configuration: one TOML file (or the JSON manifest of an earlier run)
//! plus command-line overrides.

use std::path::{Path, PathBuf};

use aabc::abc::{AcceptanceRule, Method};
use aabc::admix::AdmixConfig;
use aabc::balsel::BalSelConfig;
use aabc::eval::StudyConfig;
use aabc::model::ModelSpec;
use serde::{Deserialize, Deserializer, Serialize};

use crate::failure::{CliResult, Context, Failure};

/// Named model configurations accepted as `[model] preset = "..."`.
pub const MODEL_PRESETS: &[&str] = &["pygmy-shape", "decomposition-t30", "toy", "balsel-paper"];

pub fn model_preset(name: &str) -> Option<ModelSpec> {
    Some(match name {
        "pygmy-shape" => ModelSpec::Admix(AdmixConfig::pygmy_shape()),
        "decomposition-t30" => ModelSpec::Admix(AdmixConfig::decomposition_t30()),
        "toy" => ModelSpec::Admix(AdmixConfig::toy()),
        "balsel-paper" => ModelSpec::BalSel(BalSelConfig::default()),
        _ => return None,
    })
}

fn model_section<'de, D: Deserializer<'de>>(d: D) -> Result<ModelSpec, D::Error> {
    use serde::de::Error;
    let value = serde_json::Value::deserialize(d)?;
    if let Some(name) = value.get("preset") {
        let name = name
            .as_str()
            .ok_or_else(|| D::Error::custom("model preset must be a string"))?;
        if value.as_object().map_or(0, |o| o.len()) != 1 {
            return Err(D::Error::custom("`preset` cannot be combined with other model keys"));
        }
        return model_preset(name).ok_or_else(|| {
            D::Error::custom(format!(
                "unknown model preset `{name}` (known: {})",
                MODEL_PRESETS.join(", ")
            ))
        });
    }
    if let Some(id) = value.get("id").and_then(|v| v.as_str()) {
        if !ModelSpec::KNOWN_IDS.contains(&id) {
            return Err(D::Error::custom(format!(
                "unknown model id `{id}` (known: {})",
                ModelSpec::KNOWN_IDS.join(", ")
            )));
        }
    }
    serde_json::from_value(value).map_err(D::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Truth {
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(deserialize_with = "model_section")]
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    /// Number of prior proposals.
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub proposals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<AcceptanceRule>,
    /// Existing pool file for the AABC methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pool: Option<PathBuf>,
    /// Pool size, when the pool is built as part of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Sample size of built pools and synthetic observed data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Truth>,
    #[serde(default)]
    pub scale_params: bool,
    #[serde(default)]
    pub export_csv: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyConfig>,
}

impl RunConfig {
    /// Reads a TOML config, or a JSON manifest whose `config` field is one.
    /// Relative paths inside are resolved against the file's directory.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).io_ctx(format!("reading {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
            || text.trim_start().starts_with('{');
        let mut config: RunConfig = if is_json {
            let value: serde_json::Value =
                serde_json::from_str(&text).config_ctx(format!("parsing {}", path.display()))?;
            let inner = value.get("config").cloned().unwrap_or(value);
            serde_json::from_value(inner).config_ctx(format!("parsing {}", path.display()))?
        } else {
            toml::from_str(&text).config_ctx(format!("parsing {}", path.display()))?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.pool, &mut config.observed].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.model.validate().map_err(|e| Failure::from(e).within("model"))?;
        Ok(config)
    }

    pub fn seed(&self) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| Failure::Config("no seed: set `seed` in the config or pass --seed".into()))
    }

    pub fn sample_size(&self) -> usize {
        use aabc::model::Model;
        self.n.unwrap_or_else(|| self.model.sample_size())
    }
}

pub fn require<T: Clone>(value: &Option<T>, key: &str, command: &str) -> CliResult<T> {
    value
        .clone()
        .ok_or_else(|| Failure::Config(format!("`{key}` is required for {command}")))
}
