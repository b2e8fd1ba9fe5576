//! Phase-field microstructure simulators, dataset construction and evaluation metrics.

pub mod batch;
pub mod dataset;
pub mod error;
pub mod field;
pub mod grain_growth;
pub mod metrics;
pub mod spinodal;
pub mod tensor_io;
pub mod trajectory;

pub use error::{Error, Result};
pub use field::Field2D;
pub use grain_growth::{simulate_grain_growth, GrainParams};
pub use spinodal::{simulate_spinodal, SpinodalParams};
pub use trajectory::{MemberSpec, SimKind, SimParams, Trajectory, TrajectoryManifest};
