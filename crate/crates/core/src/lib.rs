//! Functional calibration: estimate component curves from noisy weighted
//! aggregates using either an orthogonal wavelet basis with coefficient
//! shrinkage or a cubic B-spline basis with least squares.
//!
//! The model is `A = alpha y + noise`, with `A` the M x N observed samples,
//! `y` the L x N known weights and `alpha` the M x L unknown components.

pub mod calibration;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod shrinkage;
pub mod simulate;
pub mod splines;
pub mod wavelet;

pub use calibration::{calibrate_splines, calibrate_wavelets, calibrate_wavelets_at_level, estimate_weights};
pub use error::{Error, Result};
pub use model::{
    aggregate_curve, validate_problem, AggregatedSamples, CalibrationResult, ComponentCurves, Diagnostics, SampleGrid,
    WeightMatrix,
};
pub use shrinkage::{Method, NoiseScale, RuleType, ShrinkageSpec};
pub use simulate::{simulate_dataset, SimulatedDataset, SimulationConfig};
