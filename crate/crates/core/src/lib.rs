//! Core of the merge-reaction benchmark: scene and trajectory types,
//! motion-pattern prototypes, inverse-TTC criticality, the fatality-aware
//! Brier decomposition and the merge-scenario data pipeline.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criticality;
pub mod datagen;
pub mod error;
pub mod metrics;
pub mod protogen;
pub mod types;

pub use criticality::{criticality_profile, CriticalityConfig, CriticalityProfile};
pub use error::{CoreError, Result};
pub use metrics::{fatality_aware, EvalRecord, EvaluationSet, MetricReport};
pub use protogen::{generate_prototypes, label_ground_truth, PrototypeConfig, PrototypeSet};
pub use types::*;
