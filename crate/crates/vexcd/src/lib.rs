//! Host-side companion to `vexcd-core`: dataset manifests and PNG patches,
//! model and event-log persistence, the benchmark runner, and the HTTP
//! labeling service.

pub mod bench;
pub mod error;
pub mod manifest;
pub mod persist;
pub mod service;

pub use error::{Error, Result};
pub use vexcd_core as core;
