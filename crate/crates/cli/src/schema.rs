//! JSON files exchanged between subcommands. Every file carries
//! `"schema_version": 1`.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use strainmodal::beam::{FitDiagnostics, ShapeModel, SpanLayout};
use strainmodal::metrics::ModalComparison;
use strainmodal::ssi::ModalEstimate;

use crate::config::check_version;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub frequency_hz: f64,
    pub damping_ratio: f64,
    pub shape_re: Vec<f64>,
    pub shape_im: Vec<f64>,
    pub positions_m: Vec<f64>,
    /// Displacement shape on the same positions, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dms: Option<Vec<f64>>,
}

/// Identified or ground-truth modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModesFile {
    pub schema_version: u32,
    pub modes: Vec<ModeEntry>,
    #[serde(default)]
    pub meta: BTreeMap<String, Value>,
}

impl ModesFile {
    pub fn from_estimates(modes: &[ModalEstimate<f64>], positions_m: &[f64], meta: BTreeMap<String, Value>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            modes: modes
                .iter()
                .map(|m| ModeEntry {
                    frequency_hz: m.frequency_hz,
                    damping_ratio: m.damping_ratio,
                    shape_re: m.shape.iter().map(|z| z.re).collect(),
                    shape_im: m.shape.iter().map(|z| z.im).collect(),
                    positions_m: positions_m.to_vec(),
                    dms: None,
                })
                .collect(),
            meta,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        for (i, m) in self.modes.iter().enumerate() {
            let n = m.positions_m.len();
            let dms_ok = m.dms.as_ref().is_none_or(|d| d.len() == n);
            if m.shape_re.len() != n || m.shape_im.len() != n || !dms_ok {
                return Err(CliError::Config(format!("mode {i}: shape and position lengths differ")));
            }
        }
        Ok(())
    }

    /// `"strain"` unless the meta block says otherwise.
    pub fn quantity(&self) -> &str {
        self.meta.get("quantity").and_then(Value::as_str).unwrap_or("strain")
    }

    pub fn estimates(&self) -> Vec<ModalEstimate<f64>> {
        self.modes
            .iter()
            .map(|m| ModalEstimate {
                frequency_hz: m.frequency_hz,
                damping_ratio: m.damping_ratio,
                shape: m.shape_re.iter().zip(&m.shape_im).map(|(&r, &i)| Complex::new(r, i)).collect(),
                order_found: 0,
            })
            .collect()
    }
}

/// Displacement shapes of one mode by each integration route, on the mode's
/// positions. A route that failed is `None` and its error is listed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Routes {
    pub physics: Option<Vec<f64>>,
    pub polynomial: Option<Vec<f64>>,
    pub trapezoid: Option<Vec<f64>>,
}

impl Routes {
    pub const NAMES: [&'static str; 3] = ["physics", "polynomial", "trapezoid"];

    pub fn get(&self, name: &str) -> Option<&Vec<f64>> {
        match name {
            "physics" => self.physics.as_ref(),
            "polynomial" => self.polynomial.as_ref(),
            "trapezoid" => self.trapezoid.as_ref(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub mode_index: usize,
    pub frequency_hz: f64,
    pub damping_ratio: f64,
    pub positions_m: Vec<f64>,
    /// Real-converted, normalized strain shape that was fitted.
    pub sms: Option<Vec<f64>>,
    pub model: Option<ShapeModel<f64>>,
    pub fit: Option<FitDiagnostics<f64>>,
    pub dms: Routes,
    pub errors: BTreeMap<String, String>,
}

/// Output of `fit-shapes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapesFile {
    pub schema_version: u32,
    pub layout: SpanLayout<f64>,
    pub shapes: Vec<ShapeEntry>,
}

impl ShapesFile {
    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)
    }
}

/// Output of `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonFile {
    pub schema_version: u32,
    pub label_a: String,
    pub label_b: String,
    /// One comparison per route (`modes` when two mode sets are compared).
    pub comparisons: BTreeMap<String, ModalComparison<f64>>,
    /// Gain of the physics route's mean MAC over each baseline, in percent.
    pub improvement_percent: BTreeMap<String, f64>,
}

/// Either kind of input accepted by `compare`.
pub enum ModalSet {
    Modes(ModesFile),
    Shapes(ShapesFile),
}

impl ModalSet {
    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let value: Value = crate::config::read_json(path)?;
        let parsed = if value.get("shapes").is_some() {
            serde_json::from_value(value).map(ModalSet::Shapes)
        } else if value.get("modes").is_some() {
            serde_json::from_value(value).map(ModalSet::Modes)
        } else {
            return Err(CliError::Config(format!(
                "{}: neither a modes nor a shapes file",
                path.display()
            )));
        };
        let set = parsed.map_err(|e| CliError::io(path, e))?;
        match &set {
            ModalSet::Modes(m) => m.validate()?,
            ModalSet::Shapes(s) => s.validate()?,
        }
        Ok(set)
    }
}
