//! Output-only stochastic subspace identification (data-driven variant).
//!
//! Block Hankel assembly, projection of the future outputs onto the past,
//! balanced realization of `(A, C)` from the projection's SVD, modal
//! extraction and stabilization-diagram order selection.

mod hankel;
mod modes;
mod projection;
mod realize;
mod stabilization;

use thiserror::Error;

pub use hankel::{build_block_hankel, hankel_columns, hankel_gram};
pub use modes::{
    default_block_rows, extract_modes, normalize_shape, ModalEstimate, OrderRange, SsiConfig,
    StabilityCriteria,
};
pub use projection::{project_future_onto_past, Projection};
pub use realize::{realize, ProjectionSvd, RealizationDiagnostics, StateSpaceRealization};
pub use stabilization::{
    scan_projection, select_modes, select_modes_with, stabilization_scan, stable_clusters,
    DiagramEntry, StabilityFlags, StabilizationDiagram,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SsiError {
    #[error("record has {len} samples, Hankel needs at least {required}")]
    RecordTooShort { len: usize, required: usize },
    #[error("past block rows are numerically rank zero")]
    RankDeficientPast,
    #[error("model order {order} not in 1..={max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("singular value or eigenvalue iteration did not converge")]
    SvdFailure,
    #[error("system matrix is not diagonalizable (eigenvector condition {condition:.3e})")]
    DefectiveSystemMatrix { condition: f64 },
    #[error("found {found} stable modes, {requested} requested")]
    NotEnoughStableModes { found: usize, requested: usize },
    #[error("invalid SSI configuration: {0}")]
    InvalidConfig(String),
}
