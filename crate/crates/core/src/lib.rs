//! Variable-baseline stereo vision: geometry, calibration-error analysis,
//! dual-quaternion baseline interpolation, a ray-cast scene simulator, and
//! baseline-adaptive navigation policies.

pub mod control;
pub mod error;
pub mod error_analysis;
pub mod geometry;
pub mod rig;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
