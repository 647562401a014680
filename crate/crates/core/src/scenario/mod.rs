//! Bins, pre-grasp position grids, hand orientation samples, wall-grasp
//! targets and collision clearance against the bin.

mod clearance;
mod config;
mod geometry;

pub use clearance::{clearance_margin, clearance_ok, default_capsules, Capsule, LinkRef};
pub use config::{
    ClearanceSpec, ScenarioConfig, ScenarioSettings, VariantGeometry, BUILTIN_IIWA, BUILTIN_LWA3,
    DEFAULT_SCENARIO,
};
pub use geometry::{
    generate_grid, orientation_samples, wall_grasp_target, Aabb, ApproachAxis, BoxGeometry,
    GridSpec, OrientationSpec, Wall,
};
