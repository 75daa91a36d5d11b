use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract_modes, normalize_shape, ModalEstimate, Projection, ProjectionSvd, SsiConfig, SsiError};
use crate::metrics::mac;
use crate::scalar::{median, Real};
use crate::signal::{Quantity, Record};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StabilityFlags {
    pub freq_stable: bool,
    pub damp_stable: bool,
    pub shape_stable: bool,
}

impl StabilityFlags {
    pub fn all(&self) -> bool {
        self.freq_stable && self.damp_stable && self.shape_stable
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramEntry<T> {
    pub model_order: usize,
    pub mode: ModalEstimate<T>,
    pub flags: StabilityFlags,
}

/// Modal candidates over model orders, sorted by `(model_order, frequency_hz)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StabilizationDiagram<T> {
    pub entries: Vec<DiagramEntry<T>>,
    /// Orders whose realization or modal extraction failed, with the reason.
    pub failures: Vec<(usize, String)>,
}

impl<T: Real> StabilizationDiagram<T> {
    /// CSV with columns `order,frequency_hz,damping,f_stable,d_stable,s_stable`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("order,frequency_hz,damping,f_stable,d_stable,s_stable\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                e.model_order,
                e.mode.frequency_hz,
                e.mode.damping_ratio,
                u8::from(e.flags.freq_stable),
                u8::from(e.flags.damp_stable),
                u8::from(e.flags.shape_stable)
            );
        }
        out
    }

    pub fn orders(&self) -> Vec<usize> {
        let mut o: Vec<usize> = self.entries.iter().map(|e| e.model_order).collect();
        o.dedup();
        o
    }
}

fn flags_against<T: Real>(mode: &ModalEstimate<T>, previous: &[ModalEstimate<T>], config: &SsiConfig<T>) -> StabilityFlags {
    let nearest = previous.iter().min_by(|a, b| {
        let da = (a.frequency_hz - mode.frequency_hz).abs();
        let db = (b.frequency_hz - mode.frequency_hz).abs();
        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
    });
    let Some(prev) = nearest else {
        return StabilityFlags::default();
    };
    let crit = &config.stability;
    StabilityFlags {
        freq_stable: (prev.frequency_hz - mode.frequency_hz).abs() / mode.frequency_hz < crit.max_freq_rel,
        damp_stable: (prev.damping_ratio - mode.damping_ratio).abs() < crit.max_damping_abs,
        shape_stable: mac(&prev.shape, &mode.shape).is_ok_and(|v| v > crit.min_mac),
    }
}

/// Identify at every order of `config.order_range` and flag candidates that
/// persist from the order two below.
///
/// The projection and its SVD are computed once. Per-order failures are
/// recorded in the diagram rather than aborting the scan.
pub fn stabilization_scan<T: Real, Q: Quantity>(
    record: &Record<T, Q>,
    config: &SsiConfig<T>,
) -> Result<StabilizationDiagram<T>, SsiError> {
    config.validate(record.n_samples(), record.n_channels())?;
    let projection = Projection::from_record(record, config.block_rows)?;
    let svd = ProjectionSvd::new(&projection)?;
    Ok(scan_projection(&svd, record.sampling_rate_hz(), config))
}

/// Stabilization scan over an already decomposed projection.
pub fn scan_projection<T: Real>(svd: &ProjectionSvd<T>, sampling_rate_hz: T, config: &SsiConfig<T>) -> StabilizationDiagram<T> {
    let orders: Vec<usize> = config.order_range.orders().collect();
    type OrderResult<T> = (usize, Result<Vec<ModalEstimate<T>>, SsiError>);
    let per_order: Vec<OrderResult<T>> = orders
        .par_iter()
        .map(|&n| {
            let modes = svd
                .realize(n, sampling_rate_hz)
                .and_then(|real| extract_modes(&real, config));
            (n, modes)
        })
        .collect();

    let mut diagram = StabilizationDiagram::default();
    let mut previous: Option<(usize, Vec<ModalEstimate<T>>)> = None;
    for (n, result) in per_order {
        match result {
            Ok(modes) => {
                let prev = previous
                    .as_ref()
                    .filter(|(pn, _)| pn + 2 == n)
                    .map(|(_, m)| m.as_slice())
                    .unwrap_or(&[]);
                for mode in &modes {
                    diagram.entries.push(DiagramEntry {
                        model_order: n,
                        mode: mode.clone(),
                        flags: flags_against(mode, prev, config),
                    });
                }
                previous = Some((n, modes));
            }
            Err(e) => {
                diagram.failures.push((n, e.to_string()));
                previous = None;
            }
        }
    }
    diagram
}

/// Clusters of fully stable entries, lowest frequency first.
///
/// Entries are linked when consecutive frequencies differ by less than
/// `config.cluster_linkage_rel` (relative); clusters smaller than
/// `config.min_cluster_size` are dropped. Each cluster reports the median
/// frequency and damping and the shape found at the highest order.
pub fn stable_clusters<T: Real>(diagram: &StabilizationDiagram<T>, linkage_rel: T, min_cluster_size: usize) -> Vec<ModalEstimate<T>> {
    let mut stable: Vec<&DiagramEntry<T>> = diagram.entries.iter().filter(|e| e.flags.all()).collect();
    stable.sort_by(|a, b| {
        a.mode
            .frequency_hz
            .partial_cmp(&b.mode.frequency_hz)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.model_order.cmp(&b.model_order))
    });
    let mut clusters: Vec<Vec<&DiagramEntry<T>>> = Vec::new();
    for e in stable {
        match clusters.last_mut() {
            Some(c)
                if e.mode.frequency_hz - c.last().unwrap().mode.frequency_hz
                    <= linkage_rel * e.mode.frequency_hz =>
            {
                c.push(e)
            }
            _ => clusters.push(vec![e]),
        }
    }
    clusters
        .into_iter()
        .filter(|c| c.len() >= min_cluster_size.max(1))
        .map(|c| {
            let freqs: Vec<T> = c.iter().map(|e| e.mode.frequency_hz).collect();
            let damps: Vec<T> = c.iter().map(|e| e.mode.damping_ratio).collect();
            let top = c
                .iter()
                .copied()
                .max_by_key(|e| e.model_order)
                .expect("non-empty cluster");
            let mut shape = top.mode.shape.clone();
            normalize_shape(&mut shape);
            ModalEstimate {
                frequency_hz: median(&freqs),
                damping_ratio: median(&damps),
                shape,
                order_found: top.model_order,
            }
        })
        .collect()
}

/// The `n_modes` lowest-frequency stable clusters, using the clustering
/// settings of `config`.
pub fn select_modes_with<T: Real>(
    diagram: &StabilizationDiagram<T>,
    n_modes: usize,
    config: &SsiConfig<T>,
) -> Result<Vec<ModalEstimate<T>>, SsiError> {
    pick(stable_clusters(diagram, config.cluster_linkage_rel, config.min_cluster_size), n_modes)
}

/// The `n_modes` lowest-frequency stable clusters (1% linkage, any cluster size).
pub fn select_modes<T: Real>(diagram: &StabilizationDiagram<T>, n_modes: usize) -> Result<Vec<ModalEstimate<T>>, SsiError> {
    pick(stable_clusters(diagram, T::lit(0.01), 1), n_modes)
}

fn pick<T>(mut clusters: Vec<ModalEstimate<T>>, n_modes: usize) -> Result<Vec<ModalEstimate<T>>, SsiError> {
    if clusters.len() < n_modes {
        return Err(SsiError::NotEnoughStableModes {
            found: clusters.len(),
            requested: n_modes,
        });
    }
    clusters.truncate(n_modes);
    Ok(clusters)
}
