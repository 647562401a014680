use std::fmt;
use std::str::FromStr;

use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Pose;
use crate::transmission::WristLimits;

/// One revolute joint.
///
/// The link transform is `mount * Rz(q + theta_offset) * Tz(d) * Tx(a) * Rx(alpha)`.
/// For a plain DH row `mount` is the identity; it is used to place joints
/// whose axis is not the z axis of the previous DH frame, such as the wrist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    /// mm
    pub a: f64,
    /// rad
    pub alpha: f64,
    /// mm
    pub d: f64,
    /// rad
    pub theta_offset: f64,
    /// degrees
    pub lo: f64,
    /// degrees
    pub hi: f64,
    /// deg/s, informational
    pub max_velocity: f64,
    pub mount: Pose,
}

impl JointSpec {
    /// A plain DH row. `alpha` and `theta_offset` in radians, limits in degrees.
    pub fn dh(
        name: impl Into<String>,
        a: f64,
        alpha: f64,
        d: f64,
        theta_offset: f64,
        lo: f64,
        hi: f64,
    ) -> Self {
        Self {
            name: name.into(),
            a,
            alpha,
            d,
            theta_offset,
            lo,
            hi,
            max_velocity: 0.0,
            mount: Pose::identity(),
        }
    }

    pub fn with_mount(mut self, mount: Pose) -> Self {
        self.mount = mount;
        self
    }

    pub fn with_max_velocity(mut self, v: f64) -> Self {
        self.max_velocity = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let values = [
            self.a,
            self.alpha,
            self.d,
            self.theta_offset,
            self.lo,
            self.hi,
            self.max_velocity,
        ];
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation(format!(
                "joint {}: non-finite parameter",
                self.name
            )));
        }
        if self.lo >= self.hi {
            return Err(Error::Validation(format!(
                "joint {}: lower limit {} not below upper limit {}",
                self.name, self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn contains(&self, q_deg: f64) -> bool {
        (self.lo..=self.hi).contains(&q_deg)
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// Fixed part of the link transform after the joint rotation.
    pub(crate) fn distal(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::new(self.a, 0.0, self.d),
            UnitQuaternion::from_axis_angle(&Vector3::x_axis(), self.alpha),
        )
    }

    /// Upper bound on the distance this link moves the next frame origin.
    pub(crate) fn reach(&self) -> f64 {
        self.mount.position.norm() + self.a.hypot(self.d)
    }
}

/// Which end-of-arm tooling the chain models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Hand mounted straight on the flange.
    #[serde(rename = "bare")]
    Bare,
    /// Hand mounted through a fixed tilted adapter.
    #[serde(rename = "adapter60")]
    Adapter60,
    /// Hand mounted through the actuated two-axis wrist.
    #[serde(rename = "wrist")]
    Wrist,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Bare, Variant::Adapter60, Variant::Wrist];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Bare => "bare",
            Variant::Adapter60 => "adapter60",
            Variant::Wrist => "wrist",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bare" | "none" => Ok(Variant::Bare),
            "adapter60" | "adapter" => Ok(Variant::Adapter60),
            "wrist" => Ok(Variant::Wrist),
            other => Err(Error::Validation(format!(
                "unknown variant {other:?} (expected bare, adapter60 or wrist)"
            ))),
        }
    }
}

/// Geometry of the adapter and wrist variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantParams {
    /// Tilt of the fixed adapter, degrees.
    pub adapter_angle: f64,
    /// Tilt axis of the adapter in the flange frame.
    pub adapter_axis: [f64; 3],
    /// Flange to the wrist pivots, mm. The hand (the base tool transform)
    /// follows the pivots.
    pub wrist_length: f64,
    pub wrist_limits: WristLimits,
}

impl Default for VariantParams {
    fn default() -> Self {
        Self {
            adapter_angle: 60.0,
            adapter_axis: [1.0, 0.0, 0.0],
            wrist_length: 60.0,
            wrist_limits: WristLimits::default(),
        }
    }
}

impl VariantParams {
    pub fn validate(&self) -> Result<()> {
        if !self.adapter_angle.is_finite() {
            return Err(Error::Validation("adapter_angle must be finite".into()));
        }
        let axis = Vector3::from(self.adapter_axis);
        if !(axis.norm() > 1e-9 && axis.iter().all(|v| v.is_finite())) {
            return Err(Error::Validation(format!(
                "adapter_axis {:?} is degenerate",
                self.adapter_axis
            )));
        }
        if !(self.wrist_length.is_finite() && self.wrist_length >= 0.0) {
            return Err(Error::Validation(format!(
                "wrist_length {} must be >= 0",
                self.wrist_length
            )));
        }
        self.wrist_limits.validate()
    }

    pub fn adapter_rotation(&self) -> UnitQuaternion<f64> {
        let axis = nalgebra::Unit::new_normalize(Vector3::from(self.adapter_axis));
        UnitQuaternion::from_axis_angle(&axis, self.adapter_angle.to_radians())
    }
}

/// Serial chain of revolute joints followed by a fixed tool transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicChain {
    pub name: String,
    pub variant: Variant,
    pub joints: Vec<JointSpec>,
    pub tool: Pose,
    /// Number of leading joints that belong to the arm; the frame after
    /// them is the flange.
    pub arm_joints: usize,
    /// Seed configuration for the first IK attempt, degrees. Empty means
    /// the midpoint of each joint range.
    pub home: Vec<f64>,
}

impl KinematicChain {
    pub fn new(name: impl Into<String>, joints: Vec<JointSpec>, tool: Pose) -> Result<Self> {
        let chain = Self {
            name: name.into(),
            variant: Variant::Bare,
            arm_joints: joints.len(),
            joints,
            tool,
            home: Vec::new(),
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn with_home(mut self, home: Vec<f64>) -> Result<Self> {
        self.home = home;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::Validation(format!(
                "chain {} has no joints",
                self.name
            )));
        }
        for j in &self.joints {
            j.validate()?;
        }
        if self.arm_joints > self.joints.len() {
            return Err(Error::Validation("arm_joints exceeds joint count".into()));
        }
        if !self.tool.position.iter().all(|v| v.is_finite()) || !self.tool.is_normalized() {
            return Err(Error::Validation(
                "tool transform is not a finite rigid transform".into(),
            ));
        }
        if !self.home.is_empty() {
            if self.home.len() != self.joints.len() {
                return Err(Error::Validation(format!(
                    "home has {} values for {} joints",
                    self.home.len(),
                    self.joints.len()
                )));
            }
            for (index, (j, &q)) in self.joints.iter().zip(&self.home).enumerate() {
                if !j.contains(q) {
                    return Err(Error::JointLimit {
                        index,
                        value: q,
                        lo: j.lo,
                        hi: j.hi,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Home configuration, or the midpoint of every joint range.
    pub fn seed_configuration(&self) -> Vec<f64> {
        if self.home.is_empty() {
            self.joints.iter().map(JointSpec::midpoint).collect()
        } else {
            self.home.clone()
        }
    }

    /// Upper bound on the distance from the base origin to the tool point.
    pub fn reach(&self) -> f64 {
        self.joints.iter().map(JointSpec::reach).sum::<f64>() + self.tool.position.norm()
    }

    pub fn check_joints(&self, q_deg: &[f64]) -> Result<()> {
        if q_deg.len() != self.joints.len() {
            return Err(Error::JointCount {
                expected: self.joints.len(),
                got: q_deg.len(),
            });
        }
        for (index, (j, &q)) in self.joints.iter().zip(q_deg).enumerate() {
            if !j.contains(q) {
                return Err(Error::JointLimit {
                    index,
                    value: q,
                    lo: j.lo,
                    hi: j.hi,
                });
            }
        }
        Ok(())
    }

    pub fn clamp(&self, q_deg: &mut [f64]) {
        for (q, j) in q_deg.iter_mut().zip(&self.joints) {
            *q = q.clamp(j.lo, j.hi);
        }
    }
}

/// Derives an adapter or wrist chain from a bare arm.
pub fn make_variant(
    base: &KinematicChain,
    variant: Variant,
    params: &VariantParams,
) -> Result<KinematicChain> {
    if base.variant != Variant::Bare {
        return Err(Error::Validation(format!(
            "variants are built from a bare chain, got {}",
            base.variant
        )));
    }
    params.validate()?;
    let mut chain = base.clone();
    chain.variant = variant;
    match variant {
        Variant::Bare => {}
        Variant::Adapter60 => {
            chain.tool = Pose::from_rotation(params.adapter_rotation()).compose(&base.tool);
        }
        Variant::Wrist => {
            let lim = &params.wrist_limits;
            let quarter = std::f64::consts::FRAC_PI_2;
            // Flexion about the flange y axis at the pivot point.
            let flexion = JointSpec::dh(
                "wrist_flexion",
                0.0,
                quarter,
                0.0,
                0.0,
                lim.flexion_min,
                lim.flexion_max,
            )
            .with_mount(Pose::new(
                Vector3::new(0.0, 0.0, params.wrist_length),
                UnitQuaternion::from_axis_angle(&Vector3::x_axis(), -quarter),
            ))
            .with_max_velocity(500.0);
            // Abduction about the (flexed) x axis; the tool undoes the mount rotation.
            let abduction = JointSpec::dh(
                "wrist_abduction",
                0.0,
                0.0,
                0.0,
                0.0,
                lim.abduction_min,
                lim.abduction_max,
            )
            .with_mount(Pose::from_rotation(UnitQuaternion::from_axis_angle(
                &Vector3::y_axis(),
                quarter,
            )))
            .with_max_velocity(166.0);
            chain.joints.push(flexion);
            chain.joints.push(abduction);
            chain.tool = Pose::from_rotation(UnitQuaternion::from_axis_angle(
                &Vector3::y_axis(),
                -quarter,
            ))
            .compose(&base.tool);
            if !chain.home.is_empty() {
                chain.home.extend([
                    0.0f64.clamp(lim.flexion_min, lim.flexion_max),
                    0.0f64.clamp(lim.abduction_min, lim.abduction_max),
                ]);
            }
            chain.name = format!("{}+wrist", base.name);
        }
    }
    if variant == Variant::Adapter60 {
        chain.name = format!("{}+adapter", base.name);
    }
    chain.validate()?;
    Ok(chain)
}
