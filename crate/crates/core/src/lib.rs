//! Multiple linear regression with cross, quadratic and cubic terms, plus the
//! machinery for reading such models one predictor at a time.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`]: tabular ingest, descriptive statistics, Pearson matrices.
//! * [`terms`]: products of predictor powers and design-matrix expansion.
//! * [`ols`]: least-squares fits with coefficient inference.
//! * [`conditional`]: one-factor response functions `Y(x_i | {x_j = x_j0})`
//!   and unit-change effects.
//! * [`relations`]: how simple-regression slopes turn into multiple-regression
//!   coefficients, residualized predictors and sign-paradox detection.
//! * [`selection`]: exhaustive best-subset search and backward elimination.
//! * [`geometry`]: confidence ellipses for correlated predictor pairs and
//!   joint-action classification from the cross term.

pub mod conditional;
pub mod dataset;
pub mod dist;
mod error;
pub mod geometry;
mod linalg;
pub mod ols;
pub mod relations;
pub mod selection;
pub mod terms;

pub use conditional::{ConditionalResponse, FixedValue, TCoefficients};
pub use dataset::{ColumnStats, CorrelationReport, CsvOptions, Dataset, LoadedDataset, QuartileSummary};
pub use error::{Error, Result};
pub use geometry::{ActionClass, ActionLabel, ConfidenceEllipse, PointClass};
pub use ols::{FitOptions, FitSummary, FittedModel, Inference};
pub use relations::{BridgeReport, Finding};
pub use selection::{SearchResult, StepwiseResult};
pub use terms::{CodedScale, ModelSpec, Term};

/// Default |r| above which correlated predictors are flagged.
pub const DEFAULT_CORR_THRESHOLD: f64 = 0.7;

/// Default significance level.
pub const DEFAULT_ALPHA: f64 = 0.05;
