//! Multi-span Euler–Bernoulli shape functions.
//!
//! Per span `k` the displacement is
//! `w(l) = C1 sin(βl) + C2 cos(βl) + C3 sinh(βl) + C4 cosh(βl)` and the strain at
//! fiber offset `d` is `-d·w''(l)`. Constants that satisfy the support
//! conditions span the null space of [`assemble_bc_matrix`], which is
//! rank deficient exactly at the characteristic roots β.
//!
//! [`fit_sms`] fits measured strain mode shapes by searching β along that
//! null space, and [`eval_dms`] integrates the fit analytically. The two
//! baselines integrate the samples directly.

mod baseline;
mod bc;
mod fit;
mod layout;
mod shape;

use thiserror::Error;

pub use baseline::{dms_via_polynomial, dms_via_trapezoid, double_integrate_trapezoid, PolynomialDiagnostics};
pub use bc::{assemble_bc_matrix, find_characteristic_roots, null_space_constants, sigma_min};
pub use fit::{fit_sms, fit_sms_with, to_real_shape, FitDiagnostics, FitOptions, ShapeFit};
pub use layout::{EndCondition, SpanLayout};
pub use shape::{eval_dms, eval_sms, ModeShapeSamples, ShapeKind, ShapeModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BeamError {
    #[error("position {position} m lies outside the beam")]
    PositionOutOfRange { position: f64 },
    #[error("found {found} characteristic roots, {requested} requested")]
    RootsNotFound { found: usize, requested: usize },
    #[error("shape function cannot explain the samples (objective {objective:.3})")]
    FitDegenerate { objective: f64 },
    #[error("span {span} holds {found} samples, {required} required")]
    InsufficientSamples { span: usize, found: usize, required: usize },
    #[error("polynomial fit is ill-conditioned (condition {condition:.3e})")]
    IllConditionedFit { condition: f64 },
    #[error("shape is identically zero")]
    DegenerateShape,
    #[error("invalid span layout: {0}")]
    InvalidLayout(String),
    #[error("invalid β range [{min}, {max}]")]
    InvalidBetaRange { min: f64, max: f64 },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
}
