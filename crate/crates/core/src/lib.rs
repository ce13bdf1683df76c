//! Variational quantum classifier training with weight re-mapping.
//!
//! The crate bundles a dense statevector simulator, the six angle
//! re-mapping functions, the layered classifier circuit, adjoint and
//! parameter-shift gradients, an Adam training loop, Iris/Wine data
//! handling and the multi-seed experiment driver used by the CLI.

pub mod data;
pub mod error;
pub mod experiment;
pub mod gradient;
pub mod model;
pub mod remap;
pub mod statevector;
pub mod training;

pub use error::{Error, Result};
pub use remap::RemapKind;
pub use statevector::{GateOp, RotationAxis, StateVector};
