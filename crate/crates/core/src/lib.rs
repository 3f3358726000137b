//! Multi-class boosting that minimizes the operator norm of the confusion matrix.
//!
//! Two boosting variants share one cost-matrix training loop:
//!
//! * **CoMBo** weights every example by the inverse of its class size, so the
//!   exponential loss upper-bounds the squared operator norm of the
//!   error-focused confusion matrix.
//! * **AdaBoost.MM** is the same loop with uniform example weights.
//!
//! The crate is split by concern:
//!
//! * [`data`] loads header-less CSV files described by a sidecar schema and
//!   plans stratified cross-validation folds.
//! * [`confusion`] builds confusion matrices and evaluates norms and bounds.
//! * [`weaklearn`] grows shallow cost-sensitive decision trees.
//! * [`boost`] runs the boosting loop and records loss telemetry.
//! * [`metrics`] computes accuracy, recalls, G-mean and the Hand–Till MAUC.
//! * [`harness`] drives repeated cross-validation and writes reports.

pub mod boost;
pub mod confusion;
pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod weaklearn;

pub use error::{Error, Result};
