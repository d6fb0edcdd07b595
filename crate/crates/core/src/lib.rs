#![no_std]
//! Virtual-exemplar active learning for bi-temporal change detection.
//!
//! This crate holds the pure algorithmic core and only needs `alloc`:
//! dense numerics, the differentiable change classifier, the exemplar
//! optimizer, display samplers, evaluation metrics, the active-learning
//! session state machine and in-memory dataset handling. File formats,
//! the HTTP service and the CLI live in the `vexcd` crate.

// `!(x > 0.0)` is how NaN gets rejected; index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod active_loop;
pub mod classifier;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod exemplar;
pub mod gradcheck;
pub mod numerics;
pub mod rng;
pub mod samplers;

pub use active_loop::{run_simulated, Clock, Session, SessionConfig, SessionEvent};
pub use classifier::{Activation, ClassWeighting, ClassifierModel, InputLoss, TrainConfig};
pub use dataset::{FeatureMode, Patch, PatchPair, PatchPairDataset, PreparedData, Split};
pub use error::{Error, Result};
pub use eval::{compute_eer, sampling_rate, EvalRecord};
pub use exemplar::{ExemplarState, Objective, OptimizerConfig, Stochasticity};
pub use numerics::{Distance, Matrix};
pub use samplers::{DisplayRequest, Strategy};
