//! Run descriptions: what to compute, on which grid, and where to put it.
//!
//! Every subcommand is translated into a [`RunManifest`] before anything is
//! computed. JSON outputs embed the manifest, so an output file can be fed
//! back through `run --manifest` to recompute the same table.

use std::path::{Path, PathBuf};

use kerr_keldysh::ModelParams;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    MeanfieldSweep,
    ExactSweep,
    ResonanceScan,
    Validate,
    Residual,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::MeanfieldSweep => "meanfield-sweep",
            Command::ExactSweep => "exact-sweep",
            Command::ResonanceScan => "resonance-scan",
            Command::Validate => "validate",
            Command::Residual => "residual",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` files get JSON, everything else CSV.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Sweep axis, either a closed range or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Range { start: f64, stop: f64, step: f64 },
    Values { values: Vec<f64> },
}

impl Grid {
    /// Points of the axis; the stop value is included when the step lands on it.
    pub fn points(&self) -> Result<Vec<f64>, UsageError> {
        let pts = match self {
            Grid::Range { start, stop, step } => {
                if !(step.is_finite() && *step > 0.0) {
                    return Err(UsageError(format!("grid step must be > 0, got {step}")));
                }
                if !(start.is_finite() && stop.is_finite()) {
                    return Err(UsageError("grid bounds must be finite".into()));
                }
                if stop < start {
                    Vec::new()
                } else {
                    // the small slack keeps `stop` when rounding leaves it a hair short
                    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                    (0..n).map(|i| start + i as f64 * step).collect()
                }
            }
            Grid::Values { values } => values.clone(),
        };
        if pts.is_empty() {
            return Err(UsageError("empty grid".into()));
        }
        if pts.iter().any(|x| !x.is_finite()) {
            return Err(UsageError("grid values must be finite".into()));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_cl: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff_q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interior: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Parameter points for `validate`, each a flat parameter object with an
    /// optional `id` and `observables` list of `[l, k]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Map<String, Value>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: Command,
    /// Flat parameter object in absolute units; the swept key is ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<Map<String, Value>>,
    /// Drive amplitude for sweeps, `Δc/χ` for scans.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Grid>,
    pub output_path: PathBuf,
    pub format: Format,
    #[serde(default)]
    pub options: Options,
}

impl RunManifest {
    pub fn model(&self) -> Result<ModelParams, UsageError> {
        self.model_with(&[])
    }

    /// Parameters with placeholders for keys the grid will overwrite.
    pub fn model_with(&self, placeholders: &[(&str, f64)]) -> Result<ModelParams, UsageError> {
        let mut map = self
            .params
            .clone()
            .ok_or_else(|| UsageError(format!("{} needs model parameters", self.command.name())))?;
        for (k, v) in placeholders {
            if map.insert(k.to_string(), Value::from(*v)).is_some() {
                return Err(UsageError(format!("`{k}` is set by the grid")));
            }
        }
        ModelParams::from_json_map(&map, &[]).map_err(|e| UsageError(e.to_string()))
    }

    pub fn grid_points(&self) -> Result<Vec<f64>, UsageError> {
        self.grid
            .as_ref()
            .ok_or_else(|| UsageError(format!("{} needs a grid", self.command.name())))?
            .points()
    }

    /// Reads a manifest, or the manifest embedded in a JSON output document.
    pub fn from_json_str(text: &str) -> Result<RunManifest, UsageError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| UsageError(format!("malformed manifest: {e}")))?;
        let inner = match value.get("manifest") {
            Some(m) if m.is_object() => m.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| UsageError(format!("invalid manifest: {e}")))
    }
}
