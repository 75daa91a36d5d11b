//! The processing stages behind each subcommand, free of file handling.

use std::collections::BTreeMap;

use num_complex::Complex;
use strainmodal::beam::{
    dms_via_polynomial, dms_via_trapezoid, eval_dms, fit_sms_with, to_real_shape, FitOptions, ModeShapeSamples,
    ShapeKind,
};
use strainmodal::metrics::{improvement, pair_modes};
use strainmodal::signal::{detrend, high_pass, Quantity, Record};
use strainmodal::ssi::{
    select_modes_with, stabilization_scan, stable_clusters, ModalEstimate, SsiConfig, SsiError, StabilizationDiagram,
};

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::schema::{ComparisonFile, ModalSet, ModesFile, Routes, ShapeEntry, ShapesFile, SCHEMA_VERSION};

pub struct Identification {
    pub modes: Vec<ModalEstimate<f64>>,
    pub diagram: StabilizationDiagram<f64>,
    pub ssi: SsiConfig<f64>,
    /// Set when fewer stable modes than requested were found; `modes` then
    /// holds the ones that were.
    pub shortfall: Option<SsiError>,
}

/// Detrend, high-pass, stabilization scan and mode selection.
pub fn identify<Q: Quantity>(record: &Record<f64, Q>, cfg: &PipelineConfig) -> Result<Identification, CliError> {
    let filtered = high_pass(&detrend(record), &cfg.filter)?;
    let ssi = cfg
        .ssi
        .resolve(record.sampling_rate_hz(), record.n_channels(), cfg.filter.cutoff_hz);
    log::info!(
        "SSI: {} block rows, orders {}..={}",
        ssi.block_rows,
        ssi.order_range.min,
        ssi.order_range.max
    );
    let diagram = stabilization_scan(&filtered, &ssi)?;
    for (order, reason) in &diagram.failures {
        log::debug!("order {order} skipped: {reason}");
    }
    let (modes, shortfall) = match select_modes_with(&diagram, cfg.ssi.n_modes, &ssi) {
        Ok(m) => (m, None),
        Err(e @ SsiError::NotEnoughStableModes { .. }) => {
            let found = stable_clusters(&diagram, ssi.cluster_linkage_rel, ssi.min_cluster_size);
            (found, Some(e))
        }
        Err(e) => return Err(e.into()),
    };
    Ok(Identification {
        modes,
        diagram,
        ssi,
        shortfall,
    })
}

/// Fit every mode (up to `fitting.n_modes`) with the physics route and both
/// baselines. Failures are recorded per mode and per route.
pub fn fit_shapes(modes: &ModesFile, cfg: &PipelineConfig) -> Result<ShapesFile, CliError> {
    let layout = cfg.layout()?;
    if modes.quantity() != "strain" {
        return Err(CliError::Config(format!(
            "fit-shapes needs strain modes, got {}",
            modes.quantity()
        )));
    }
    let mut shapes = Vec::new();
    for (i, entry) in modes.modes.iter().take(cfg.fitting.n_modes).enumerate() {
        let mut out = ShapeEntry {
            mode_index: i + 1,
            frequency_hz: entry.frequency_hz,
            damping_ratio: entry.damping_ratio,
            positions_m: entry.positions_m.clone(),
            sms: None,
            model: None,
            fit: None,
            dms: Routes::default(),
            errors: BTreeMap::new(),
        };
        let z: Vec<Complex<f64>> = entry
            .shape_re
            .iter()
            .zip(&entry.shape_im)
            .map(|(&r, &im)| Complex::new(r, im))
            .collect();
        let sms = match ModeShapeSamples::new(entry.positions_m.clone(), to_real_shape(&z), ShapeKind::Sms) {
            Ok(s) => s,
            Err(e) => {
                log::warn!("mode {}: {e}", i + 1);
                out.errors.insert("sms".into(), e.to_string());
                shapes.push(out);
                continue;
            }
        };
        out.sms = Some(sms.values().to_vec());

        let options = FitOptions {
            mode_index: i + 1,
            scan_factor: cfg.fitting.beta_scan_factor,
            grid_points: cfg.fitting.grid_points,
            ..FitOptions::default()
        };
        match fit_sms_with(&sms, layout, &options)
            .and_then(|fit| eval_dms(&fit.model, sms.positions_m()).map(|d| (fit, d)))
        {
            Ok((fit, dms)) => {
                log::info!(
                    "mode {}: β = {:.6} 1/m, objective {:.3e}",
                    i + 1,
                    fit.model.beta()[0],
                    fit.diagnostics.objective
                );
                out.dms.physics = Some(dms.values().to_vec());
                out.model = Some(fit.model);
                out.fit = Some(fit.diagnostics);
            }
            Err(e) => {
                log::warn!("mode {}: physics fit failed: {e}", i + 1);
                out.errors.insert("physics".into(), e.to_string());
            }
        }
        match dms_via_polynomial(&sms, layout, cfg.baselines.polynomial_degree) {
            Ok((d, _)) => out.dms.polynomial = Some(d.values().to_vec()),
            Err(e) => {
                out.errors.insert("polynomial".into(), e.to_string());
            }
        }
        match dms_via_trapezoid(&sms, layout) {
            Ok(d) => out.dms.trapezoid = Some(d.values().to_vec()),
            Err(e) => {
                out.errors.insert("trapezoid".into(), e.to_string());
            }
        }
        shapes.push(out);
    }
    Ok(ShapesFile {
        schema_version: SCHEMA_VERSION,
        layout: layout.clone(),
        shapes,
    })
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let tol = 1e-9 * (1.0 + x.abs());
    if xs.is_empty() || x < xs[0] - tol || x > xs[xs.len() - 1] + tol {
        return None;
    }
    let k = xs.partition_point(|&v| v < x);
    if k == 0 {
        return Some(ys[0]);
    }
    if k == xs.len() {
        return Some(ys[xs.len() - 1]);
    }
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    Some(ys[k - 1] + t * (ys[k] - ys[k - 1]))
}

fn real_estimate(frequency_hz: f64, damping_ratio: f64, shape: &[f64]) -> ModalEstimate<f64> {
    ModalEstimate {
        frequency_hz,
        damping_ratio,
        shape: shape.iter().map(|&v| Complex::new(v, 0.0)).collect(),
        order_found: 0,
    }
}

/// Reference displacement shapes of a modes file on its own positions.
fn reference_dms(modes: &ModesFile) -> Result<(Vec<f64>, Vec<ModalEstimate<f64>>), CliError> {
    let positions = modes
        .modes
        .first()
        .map(|m| m.positions_m.clone())
        .ok_or_else(|| CliError::Config("modes file is empty".into()))?;
    let mut set = Vec::new();
    for m in &modes.modes {
        if m.positions_m != positions {
            return Err(CliError::Config("modes use different position grids".into()));
        }
        let shape = match (&m.dms, modes.quantity()) {
            (Some(d), _) => d.clone(),
            (None, "acceleration") => {
                let z: Vec<Complex<f64>> = m
                    .shape_re
                    .iter()
                    .zip(&m.shape_im)
                    .map(|(&r, &i)| Complex::new(r, i))
                    .collect();
                to_real_shape(&z)
            }
            _ => {
                return Err(CliError::Config(
                    "modes file carries no displacement shapes to compare against".into(),
                ))
            }
        };
        set.push(real_estimate(m.frequency_hz, m.damping_ratio, &shape));
    }
    Ok((positions, set))
}

/// Displacement shapes of one route, evaluated at `positions`. The physics
/// route re-evaluates the fitted model; baselines are interpolated linearly.
fn route_at(shapes: &ShapesFile, route: &str, positions: &[f64]) -> Result<Vec<ModalEstimate<f64>>, CliError> {
    let mut set = Vec::new();
    for s in &shapes.shapes {
        let values = if route == "physics" {
            match &s.model {
                Some(model) => eval_dms(model, positions)
                    .map_err(|e| CliError::Config(format!("mode {}: {e}", s.mode_index)))?
                    .values()
                    .to_vec(),
                None => continue,
            }
        } else {
            let Some(ys) = s.dms.get(route) else { continue };
            positions
                .iter()
                .map(|&x| interpolate(&s.positions_m, ys, x))
                .collect::<Option<Vec<f64>>>()
                .ok_or_else(|| CliError::Config("reference positions fall outside the shape grid".into()))?
        };
        set.push(real_estimate(s.frequency_hz, s.damping_ratio, &values));
    }
    Ok(set)
}

/// Pair two modal sets. Two modes files are compared on their own shapes; a
/// shapes file against a modes file is compared per integration route on the
/// displacement shapes of the modes file, at its positions.
pub fn compare(a: &ModalSet, b: &ModalSet, label_a: &str, label_b: &str) -> Result<ComparisonFile, CliError> {
    let mut comparisons = BTreeMap::new();
    let pair = |x: &[ModalEstimate<f64>], y: &[ModalEstimate<f64>]| {
        if x.is_empty() || y.is_empty() {
            return Err(CliError::Config("nothing to compare".into()));
        }
        pair_modes(x, y).map_err(|e| CliError::Config(format!("schema mismatch: {e}")))
    };
    match (a, b) {
        (ModalSet::Modes(ma), ModalSet::Modes(mb)) => {
            comparisons.insert("modes".to_string(), pair(&ma.estimates(), &mb.estimates())?);
        }
        (ModalSet::Shapes(s), ModalSet::Modes(m)) | (ModalSet::Modes(m), ModalSet::Shapes(s)) => {
            let (positions, reference) = reference_dms(m)?;
            let shapes_first = matches!(a, ModalSet::Shapes(_));
            for route in Routes::NAMES {
                let set = route_at(s, route, &positions)?;
                if set.is_empty() {
                    continue;
                }
                let c = if shapes_first {
                    pair(&set, &reference)?
                } else {
                    pair(&reference, &set)?
                };
                comparisons.insert(route.to_string(), c);
            }
        }
        (ModalSet::Shapes(_), ModalSet::Shapes(_)) => {
            return Err(CliError::Config("schema mismatch: cannot compare two shapes files".into()));
        }
    }
    let mut improvement_percent = BTreeMap::new();
    if let Some(ours) = comparisons.get("physics") {
        for base in ["polynomial", "trapezoid"] {
            if let Some(b) = comparisons.get(base) {
                if let Ok(v) = improvement(ours.mean_mac, b.mean_mac) {
                    improvement_percent.insert(format!("over_{base}"), v);
                }
            }
        }
    }
    Ok(ComparisonFile {
        schema_version: SCHEMA_VERSION,
        label_a: label_a.to_string(),
        label_b: label_b.to_string(),
        comparisons,
        improvement_percent,
    })
}
