//! Modal identification of bridges from distributed strain-sensor arrays.
//!
//! The pipeline runs strain records through [`signal`] preprocessing, output-only
//! stochastic subspace identification ([`ssi`]), and physics-guided beam shape
//! fitting with analytic double integration ([`beam`]). [`sim`] provides a
//! synthetic multi-span beam used as ground truth, and [`metrics`] compares
//! modal sets.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below fix the scalar to `f64`.

// `!(x > 0)` style guards are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beam;
pub mod metrics;
pub mod scalar;
pub mod signal;
pub mod sim;
pub mod ssi;

pub use scalar::Real;

pub type StrainRecordF64 = signal::StrainRecord<f64>;
pub type AccelRecordF64 = signal::AccelRecord<f64>;
pub type FilterSpecF64 = signal::FilterSpec<f64>;
pub type SsiConfigF64 = ssi::SsiConfig<f64>;
pub type ModalEstimateF64 = ssi::ModalEstimate<f64>;
pub type StabilizationDiagramF64 = ssi::StabilizationDiagram<f64>;
pub type ModalComparisonF64 = metrics::ModalComparison<f64>;
pub type SpanLayoutF64 = beam::SpanLayout<f64>;
pub type ShapeModelF64 = beam::ShapeModel<f64>;
pub type ModeShapeSamplesF64 = beam::ModeShapeSamples<f64>;
pub type ShapeFitF64 = beam::ShapeFit<f64>;
pub type BeamSpecF64 = sim::BeamSpec<f64>;
pub type SimScenarioF64 = sim::SimScenario<f64>;
pub type SimOutputF64 = sim::SimOutput<f64>;
pub type TrueModeF64 = sim::TrueMode<f64>;
