//! Forward kinematics, Jacobians and damped least-squares IK for serial
//! chains of revolute joints, plus the adapter and wrist chain variants.
//!
//! Joint values cross the public API in degrees; lengths are millimetres.

mod chain;
mod chain_file;
mod ik;

use nalgebra::{Isometry3, Matrix6xX, UnitQuaternion, Vector3};

pub use chain::{make_variant, JointSpec, KinematicChain, Variant, VariantParams};
pub use chain_file::{ChainFile, JointRow, PoseRow};
pub use ik::{ik, ik_accepting, IkOptions, IkOutcome, IkSolution};

use crate::error::Result;
use crate::pose::Pose;

/// Frames along the chain for joint values in degrees.
///
/// `frames[0]` is the base, `frames[i]` the frame after joint `i`; the last
/// entry is the tool frame. No limit checks.
pub fn frames_unchecked(chain: &KinematicChain, q_deg: &[f64]) -> Vec<Isometry3<f64>> {
    let mut out = Vec::with_capacity(chain.joints.len() + 2);
    let mut t = Isometry3::identity();
    out.push(t);
    for (j, &q) in chain.joints.iter().zip(q_deg) {
        t = t
            * j.mount.to_isometry()
            * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q.to_radians() + j.theta_offset)
            * j.distal();
        out.push(t);
    }
    out.push(t * chain.tool.to_isometry());
    out
}

/// Frames along the chain; see [`frames_unchecked`].
pub fn frames(chain: &KinematicChain, q_deg: &[f64]) -> Result<Vec<Isometry3<f64>>> {
    chain.check_joints(q_deg)?;
    Ok(frames_unchecked(chain, q_deg))
}

/// Tool pose for joint values in degrees.
pub fn fk(chain: &KinematicChain, q_deg: &[f64]) -> Result<Pose> {
    chain.check_joints(q_deg)?;
    Ok(fk_unchecked(chain, q_deg))
}

pub(crate) fn fk_unchecked(chain: &KinematicChain, q_deg: &[f64]) -> Pose {
    let mut t = Isometry3::identity();
    for (j, &q) in chain.joints.iter().zip(q_deg) {
        t = t
            * j.mount.to_isometry()
            * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q.to_radians() + j.theta_offset)
            * j.distal();
    }
    Pose::from_isometry(&(t * chain.tool.to_isometry()))
}

/// Geometric Jacobian at the tool point, expressed in the base frame.
///
/// Rows 0..3 are linear velocity in mm/rad, rows 3..6 angular velocity in
/// rad/rad.
pub fn jacobian(chain: &KinematicChain, q_deg: &[f64]) -> Result<Matrix6xX<f64>> {
    chain.check_joints(q_deg)?;
    Ok(jacobian_unchecked(chain, q_deg).1)
}

/// Tool pose and Jacobian in one pass.
pub(crate) fn jacobian_unchecked(chain: &KinematicChain, q_deg: &[f64]) -> (Pose, Matrix6xX<f64>) {
    let n = chain.joints.len();
    let mut axes = Vec::with_capacity(n);
    let mut t = Isometry3::identity();
    for (j, &q) in chain.joints.iter().zip(q_deg) {
        let pivot = t * j.mount.to_isometry();
        axes.push((pivot.rotation * Vector3::z(), pivot.translation.vector));
        t = pivot
            * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), q.to_radians() + j.theta_offset)
            * j.distal();
    }
    let tool = t * chain.tool.to_isometry();
    let p = tool.translation.vector;
    let mut jac = Matrix6xX::zeros(n);
    for (i, (z, o)) in axes.iter().enumerate() {
        let lin = z.cross(&(p - o));
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(z);
    }
    (Pose::from_isometry(&tool), jac)
}
