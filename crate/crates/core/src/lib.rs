//! Simulation and verification toolkit for nonlocality built from
//! single-particle Peres–Mermin contextuality.
//!
//! Alice measures three compatible observables in sequence on one photon
//! (two qubits); Bob measures one observable on the other photon. The crate
//! computes exact quantum predictions for the contextuality sum `χ`, the
//! remote-correlation sum `S` and the hybrid expression `ω = χ + S`, sweeps
//! hidden-variable strategies for the classical bounds, and models noise and
//! finite-shot statistics.

pub mod bounds;
pub mod error;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod pauli;
pub mod sampling;
pub mod scenario;
pub mod sequential;
pub mod serialize;

pub use error::{Error, Result};
pub use linalg::{DensityOperator, Operator, ProjectorPair, StateVector};
pub use model::{ContextId, Observable, ObservableLabel, STerm};
pub use sequential::{CorrelatorReport, Engine, JointDistribution, MeasurementPlan, SignMode};
