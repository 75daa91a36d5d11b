use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use strainmodal::signal::{AccelRecord, RecordFormat, StrainRecord};
use strainmodal::sim::{simulate, SimScenario};

use crate::config::{check_version, read_json, PipelineConfig, RecordQuantity};
use crate::error::CliError;
use crate::pipeline::{self, Identification};
use crate::schema::{ModalSet, ModeEntry, ModesFile, Routes, SCHEMA_VERSION};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn format_for(path: &Path) -> RecordFormat {
    RecordFormat::from_path(path)
}

/// `simulate`: scenario JSON (or the default scenario) to strain and
/// accelerometer records plus a ground-truth modes file.
pub fn cmd_simulate(config: Option<&Path>, out: &Path, seed: Option<u64>, csv: bool) -> Result<(), CliError> {
    let mut scenario: SimScenario<f64> = match config {
        Some(path) => {
            let value: Value = read_json(path)?;
            if let Some(v) = value.get("schema_version") {
                let v = v
                    .as_u64()
                    .ok_or_else(|| CliError::Config("schema_version must be an integer".into()))?;
                check_version(u32::try_from(v).unwrap_or(u32::MAX))?;
            }
            serde_json::from_value(value).map_err(|e| CliError::io(path, e))?
        }
        None => SimScenario::default(),
    };
    if let Some(s) = seed {
        scenario.seed = s;
    }
    let result = simulate(&scenario)?;
    ensure_dir(out)?;

    let ext = if csv { "csv" } else { "bin" };
    let format = if csv { RecordFormat::Csv } else { RecordFormat::BinaryF64 };
    let strain_path = out.join(format!("strain.{ext}"));
    result.strain.save(&strain_path, format)?;
    if let Some(accel) = &result.accel {
        accel.save(&out.join(format!("accel.{ext}")), format)?;
    }

    let positions = result.strain.positions_m().to_vec();
    let mut modes = Vec::new();
    for m in &result.truth {
        let sms = m.sms(&positions).map_err(|e| CliError::Simulation(e.into()))?;
        let dms = m.dms(&positions).map_err(|e| CliError::Simulation(e.into()))?;
        modes.push(ModeEntry {
            frequency_hz: m.frequency_hz,
            damping_ratio: m.damping_ratio,
            shape_re: sms.values().to_vec(),
            shape_im: vec![0.0; positions.len()],
            positions_m: positions.clone(),
            dms: Some(dms.values().to_vec()),
        });
    }
    let mut meta = BTreeMap::new();
    meta.insert("quantity".into(), json!("strain"));
    meta.insert("source".into(), json!("simulate"));
    meta.insert("seed".into(), json!(scenario.seed));
    meta.insert("snr_db".into(), json!(scenario.snr_db));
    meta.insert("beta".into(), json!(result.truth.iter().map(|m| m.beta).collect::<Vec<_>>()));
    meta.insert("layout".into(), json!(scenario.beam.layout));
    write_json(
        &out.join("truth.json"),
        &ModesFile {
            schema_version: SCHEMA_VERSION,
            modes,
            meta,
        },
    )?;
    log::info!(
        "simulated {} channels × {} samples into {}",
        result.strain.n_channels(),
        result.strain.n_samples(),
        out.display()
    );
    Ok(())
}

fn write_identification(out: &Path, id: &Identification, positions: &[f64], quantity: RecordQuantity) -> Result<(), CliError> {
    ensure_dir(out)?;
    write_text(&out.join("stabilization.csv"), &id.diagram.to_csv())?;
    let mut meta = BTreeMap::new();
    meta.insert("quantity".into(), json!(quantity));
    meta.insert("source".into(), json!("identify"));
    meta.insert("block_rows".into(), json!(id.ssi.block_rows));
    meta.insert("order_range".into(), json!([id.ssi.order_range.min, id.ssi.order_range.max]));
    meta.insert(
        "orders_found".into(),
        json!(id.modes.iter().map(|m| m.order_found).collect::<Vec<_>>()),
    );
    if let Some(e) = &id.shortfall {
        meta.insert("warning".into(), json!(e.to_string()));
    }
    write_json(&out.join("modes.json"), &ModesFile::from_estimates(&id.modes, positions, meta))
}

/// `identify`: record to modes JSON and stabilization CSV.
pub fn cmd_identify(config: Option<&Path>, record: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = match config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let record_path: PathBuf = record
        .map(Path::to_path_buf)
        .or_else(|| cfg.io.record.clone())
        .ok_or_else(|| CliError::Config("no record given (--record or io.record)".into()))?;
    let out: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.io.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory given (--out or io.output_dir)".into()))?;
    let format = format_for(&record_path);
    let (id, positions) = match cfg.io.quantity {
        RecordQuantity::Strain => {
            let r = StrainRecord::<f64>::load(&record_path, format)?;
            (pipeline::identify(&r, &cfg)?, r.positions_m().to_vec())
        }
        RecordQuantity::Acceleration => {
            let r = AccelRecord::<f64>::load(&record_path, format)?;
            (pipeline::identify(&r, &cfg)?, r.positions_m().to_vec())
        }
    };
    write_identification(&out, &id, &positions, cfg.io.quantity)?;
    for m in &id.modes {
        log::info!(
            "mode at {:.4} Hz, ζ = {:.4} (order {})",
            m.frequency_hz,
            m.damping_ratio,
            m.order_found
        );
    }
    match id.shortfall {
        Some(e) => Err(CliError::Identification(e.to_string())),
        None => Ok(()),
    }
}

fn samples_csv(header: &str, positions: &[f64], columns: &[&[f64]]) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for (i, x) in positions.iter().enumerate() {
        let _ = write!(s, "{x}");
        for c in columns {
            let _ = write!(s, ",{}", c[i]);
        }
        s.push('\n');
    }
    s
}

/// `fit-shapes`: modes JSON to fitted shape models and DMS sample files.
pub fn cmd_fit_shapes(config: &Path, modes: Option<&Path>, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = PipelineConfig::load(config)?;
    cfg.layout()?;
    let modes_path: PathBuf = modes
        .map(Path::to_path_buf)
        .or_else(|| cfg.io.modes.clone())
        .ok_or_else(|| CliError::Config("no modes file given (--modes or io.modes)".into()))?;
    let out: PathBuf = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.io.output_dir.clone())
        .ok_or_else(|| CliError::Config("no output directory given (--out or io.output_dir)".into()))?;
    let modes: ModesFile = read_json(&modes_path)?;
    modes.validate()?;

    let shapes = pipeline::fit_shapes(&modes, &cfg)?;
    ensure_dir(&out)?;
    for s in &shapes.shapes {
        let i = s.mode_index;
        if let Some(model) = &s.model {
            write_json(&out.join(format!("mode_{i}_model.json")), model)?;
        }
        if let Some(sms) = &s.sms {
            write_text(
                &out.join(format!("mode_{i}_sms.csv")),
                &samples_csv("position_m,sms", &s.positions_m, &[sms]),
            )?;
        }
        for route in Routes::NAMES {
            if let Some(d) = s.dms.get(route) {
                write_text(
                    &out.join(format!("mode_{i}_dms_{route}.csv")),
                    &samples_csv("position_m,dms", &s.positions_m, &[d]),
                )?;
            }
        }
    }
    write_json(&out.join("shapes.json"), &shapes)?;
    if shapes.shapes.iter().any(|s| s.model.is_some()) {
        Ok(())
    } else {
        Err(CliError::Identification("no mode could be fitted".into()))
    }
}

/// `compare`: two modes/shapes files to a comparison JSON and text table.
pub fn cmd_compare(a: &Path, b: &Path, out: &Path) -> Result<(), CliError> {
    let set_a = ModalSet::load(a)?;
    let set_b = ModalSet::load(b)?;
    let label = |p: &Path| {
        p.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "set".into())
    };
    let (la, lb) = (label(a), label(b));
    let result = pipeline::compare(&set_a, &set_b, &la, &lb)?;
    ensure_dir(out)?;
    write_json(&out.join("comparison.json"), &result)?;
    let mut text = String::new();
    for (route, c) in &result.comparisons {
        let _ = writeln!(text, "[{route}]");
        text.push_str(&c.to_table(&la, &lb));
        text.push('\n');
    }
    for (k, v) in &result.improvement_percent {
        let _ = writeln!(text, "improvement {k}: {v:.1}%");
    }
    write_text(&out.join("comparison.txt"), &text)?;
    print!("{text}");
    Ok(())
}
