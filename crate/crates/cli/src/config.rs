use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use strainmodal::beam::SpanLayout;
use strainmodal::signal::FilterSpec;
use strainmodal::ssi::{OrderRange, SsiConfig, StabilityCriteria};

use crate::error::CliError;
use crate::schema::SCHEMA_VERSION;

/// Physical quantity of an input record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordQuantity {
    #[default]
    Strain,
    Acceleration,
}

/// Overrides applied on top of the defaults derived from the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SsiSettings {
    pub block_rows: Option<usize>,
    pub min_order: Option<usize>,
    pub max_order: Option<usize>,
    pub max_damping: Option<f64>,
    pub stability: Option<StabilityCriteria<f64>>,
    pub min_cluster_size: Option<usize>,
    /// Number of modes to report.
    pub n_modes: usize,
}

impl Default for SsiSettings {
    fn default() -> Self {
        Self {
            block_rows: None,
            min_order: None,
            max_order: None,
            max_damping: None,
            stability: None,
            min_cluster_size: None,
            n_modes: 3,
        }
    }
}

impl SsiSettings {
    /// Full SSI configuration for a record.
    pub fn resolve(&self, sampling_rate_hz: f64, channels: usize, f_min_hz: f64) -> SsiConfig<f64> {
        let mut cfg = SsiConfig::for_record(sampling_rate_hz, channels, f_min_hz);
        if let Some(i) = self.block_rows {
            cfg.block_rows = i;
            cfg.order_range.max = 40.min((i * channels).saturating_sub(channels));
        }
        cfg.order_range = OrderRange {
            min: self.min_order.unwrap_or(cfg.order_range.min),
            max: self.max_order.unwrap_or(cfg.order_range.max),
        };
        if let Some(z) = self.max_damping {
            cfg.damping_bounds.1 = z;
        }
        if let Some(s) = self.stability {
            cfg.stability = s;
        }
        if let Some(c) = self.min_cluster_size {
            cfg.min_cluster_size = c;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FittingSettings {
    /// Multiplier on `i·π/L_total` for the β window; defaults to the span count.
    pub beta_scan_factor: Option<f64>,
    /// Number of identified modes to fit.
    pub n_modes: usize,
    pub grid_points: usize,
}

impl Default for FittingSettings {
    fn default() -> Self {
        Self {
            beta_scan_factor: None,
            n_modes: 3,
            grid_points: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSettings {
    pub polynomial_degree: usize,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self { polynomial_degree: 4 }
    }
}

/// Input and output locations. Relative paths resolve against the working
/// directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IoSettings {
    pub record: Option<PathBuf>,
    pub quantity: RecordQuantity,
    pub modes: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

/// Settings shared by `identify` and `fit-shapes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub schema_version: u32,
    pub filter: FilterSpec<f64>,
    pub ssi: SsiSettings,
    pub layout: Option<SpanLayout<f64>>,
    pub fitting: FittingSettings,
    pub baselines: BaselineSettings,
    pub io: IoSettings,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            filter: FilterSpec::default(),
            ssi: SsiSettings::default(),
            layout: None,
            fitting: FittingSettings::default(),
            baselines: BaselineSettings::default(),
            io: IoSettings::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let cfg: Self = read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_version(self.schema_version)?;
        if self.ssi.n_modes == 0 || self.fitting.n_modes == 0 {
            return Err(CliError::Config("n_modes must be at least 1".into()));
        }
        if self.baselines.polynomial_degree == 0 {
            return Err(CliError::Config("polynomial_degree must be at least 1".into()));
        }
        if self.fitting.beta_scan_factor.is_some_and(|f| f.is_nan() || f <= 0.0) {
            return Err(CliError::Config("beta_scan_factor must be positive".into()));
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<&SpanLayout<f64>, CliError> {
        self.layout
            .as_ref()
            .ok_or_else(|| CliError::Config("configuration has no layout".into()))
    }
}

pub(crate) fn check_version(v: u32) -> Result<(), CliError> {
    if v != SCHEMA_VERSION {
        return Err(CliError::Config(format!(
            "unsupported schema_version {v}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

/// Read and parse a JSON file; every failure is a configuration error.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}
