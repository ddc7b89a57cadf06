//! Linear-probe training on frozen encoder outputs, metrics reporting, the
//! cross-dataset generalization harness, and the finite-difference gradient
//! checker.

mod gradcheck;
mod lobo;
mod metrics;
mod probe;

pub use gradcheck::{grad_check, grad_check_against, GradCheckReport};
pub use lobo::{evaluate_pipeline, fit_pipeline, lobo, run_one_class, OneClassOutcome};
pub use metrics::{metrics, ClassMetrics, Confusion, MetricsReport};
pub use probe::{fine_tune_probe, fit_probe, predict, ProbeConfig, ProbeParams};
