//! Input files: run configs, bare representation files and result files.

use std::fs;
use std::path::{Path, PathBuf};

use lcm_dilation::ando::AndoMode;
use lcm_dilation::representation::RepresentationJson;
use lcm_dilation::{MonoidSpec, Representation};
use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

/// Run parameters read from a config file. Command-line flags take
/// precedence over every field.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub monoid: Option<MonoidSpec>,
    /// Representation file, relative to the config file.
    pub representation: Option<PathBuf>,
    #[serde(rename = "L")]
    pub radius: Option<usize>,
    pub m: Option<usize>,
    pub tol: Option<f64>,
    pub mode: Option<AndoMode>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub dim: Option<usize>,
    pub count: Option<usize>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.radius == Some(0) {
            return Err(CliError::Structure("L must be at least 1".into()));
        }
        if self.m == Some(0) {
            return Err(CliError::Structure("m must be at least 1".into()));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Structure(format!("tol must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

/// What a `--config` file turned out to contain.
pub enum Input {
    Config(RunConfig, Option<Representation>),
    /// Output of `dilate` or `ando`.
    Result(Value),
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Structure(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Structure(format!("{}: malformed JSON: {e}", path.display())))
}

pub fn parse_representation(v: Value) -> Result<Representation, CliError> {
    let j: RepresentationJson =
        serde_json::from_value(v).map_err(|e| CliError::Structure(format!("bad representation: {e}")))?;
    Ok(Representation::from_json(j)?)
}

pub fn load(path: &Path) -> Result<Input, CliError> {
    let v = read_json(path)?;
    let Some(obj) = v.as_object() else {
        return Err(CliError::Structure(format!("{}: expected a JSON object", path.display())));
    };
    if obj.contains_key("generators") {
        return Ok(Input::Config(RunConfig::default(), Some(parse_representation(v)?)));
    }
    if obj.contains_key("representation") && (obj.contains_key("model") || obj.contains_key("ops")) {
        return Ok(Input::Result(v));
    }
    let cfg: RunConfig =
        serde_json::from_value(v).map_err(|e| CliError::Structure(format!("{}: bad config: {e}", path.display())))?;
    cfg.validate()?;
    let rep = match &cfg.representation {
        Some(p) => {
            let full = path.parent().unwrap_or(Path::new(".")).join(p);
            Some(parse_representation(read_json(&full)?)?)
        }
        None => None,
    };
    if let (Some(spec), Some(rep)) = (&cfg.monoid, &rep) {
        if *spec != rep.spec {
            return Err(CliError::Structure(format!(
                "config names monoid {spec} but the representation is over {}",
                rep.spec
            )));
        }
    }
    Ok(Input::Config(cfg, rep))
}
