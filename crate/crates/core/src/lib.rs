//! Kinematic and workspace analysis for a two-axis tendon-driven wrist on a
//! serial robot arm.
//!
//! * [`transmission`]: servo/wrist mapping, tendon lengths, limit propagation.
//! * [`kinematics`]: forward kinematics, Jacobians, numerical IK and the
//!   bare / adapter / wrist chain variants.
//! * [`scenario`]: bin geometry, pre-grasp grids, orientation samples,
//!   wall-grasp targets and clearance checks.
//! * [`capmap`]: capability-map sweeps, variant comparison and export.

pub mod capmap;
pub mod error;
pub mod kinematics;
pub mod pose;
pub mod scenario;
pub mod transmission;

pub use error::{Error, Result};
pub use pose::Pose;
