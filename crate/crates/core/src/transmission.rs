//! Differential tendon drive of the two-axis wrist.
//!
//! Two servos wind tendons onto pulleys that turn two sliders. The sliders
//! are the two halves of a rolling joint whose output turns at twice the
//! slider angle. Driving the servos in opposite directions flexes the
//! wrist; driving them in the same direction abducts it.
//!
//! Sign conventions: positive flexion is palmar flexion, positive abduction
//! follows the winding direction of servo `q1`. All angles are in degrees
//! and all lengths in millimetres.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pair of servo angles driving the differential, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoCommand {
    pub q1: f64,
    pub q2: f64,
}

impl ServoCommand {
    pub fn new(q1: f64, q2: f64) -> Self {
        Self { q1, q2 }
    }

    pub fn check_range(&self, servo_range: f64) -> Result<()> {
        for (servo, value) in [(1u8, self.q1), (2u8, self.q2)] {
            if !value.is_finite() || value.abs() > servo_range {
                return Err(Error::ServoRange {
                    servo,
                    value,
                    range: servo_range,
                });
            }
        }
        Ok(())
    }
}

/// Wrist joint angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WristPose {
    pub flexion: f64,
    pub abduction: f64,
}

impl WristPose {
    pub fn new(flexion: f64, abduction: f64) -> Self {
        Self { flexion, abduction }
    }
}

/// Range of motion of the two wrist axes, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WristLimits {
    pub flexion_min: f64,
    pub flexion_max: f64,
    pub abduction_min: f64,
    pub abduction_max: f64,
}

impl Default for WristLimits {
    fn default() -> Self {
        Self {
            flexion_min: 0.0,
            flexion_max: 100.0,
            abduction_min: -40.0,
            abduction_max: 40.0,
        }
    }
}

impl WristLimits {
    pub fn validate(&self) -> Result<()> {
        let ok = [
            self.flexion_min,
            self.flexion_max,
            self.abduction_min,
            self.abduction_max,
        ]
        .iter()
        .all(|v| v.is_finite())
            && self.flexion_min < self.flexion_max
            && self.abduction_min < self.abduction_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("wrist limits {self:?}")))
        }
    }

    pub fn contains(&self, pose: &WristPose) -> bool {
        (self.flexion_min..=self.flexion_max).contains(&pose.flexion)
            && (self.abduction_min..=self.abduction_max).contains(&pose.abduction)
    }

    pub fn clamp(&self, pose: &WristPose) -> WristPose {
        WristPose {
            flexion: pose.flexion.clamp(self.flexion_min, self.flexion_max),
            abduction: pose.abduction.clamp(self.abduction_min, self.abduction_max),
        }
    }

    fn check(&self, pose: &WristPose) -> Result<()> {
        if self.contains(pose) {
            Ok(())
        } else {
            Err(Error::WristLimit {
                pose: *pose,
                clamped: self.clamp(pose),
            })
        }
    }
}

/// Ratios and geometry of the tendon transmission.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransmissionParams {
    /// Servo pulley diameter over slider pulley diameter.
    pub ratio_servo_slider: f64,
    /// Output angle over slider angle of the rolling joint.
    pub ratio_roll: f64,
    /// Flexion angle over differential-mode servo angle.
    pub ratio_flexion_net: f64,
    /// Abduction angle over common-mode servo angle.
    pub ratio_abduction_net: f64,
    pub slider_pulley_radius: f64,
    pub servo_pulley_radius: f64,
    /// Largest commandable servo angle magnitude (multi-turn servos).
    pub servo_range: f64,
    /// Radius of the two rolling-contact profiles.
    pub rolling_radius: f64,
    /// Angle each pretension tendon is wound past its tangent point at the
    /// neutral pose. Must cover the slider travel.
    pub pretension_prewrap: f64,
    pub limits: WristLimits,
}

impl Default for TransmissionParams {
    fn default() -> Self {
        Self {
            ratio_servo_slider: 1.0 / 6.0,
            ratio_roll: 2.0,
            ratio_flexion_net: 1.0 / 3.0,
            ratio_abduction_net: 1.0 / 9.0,
            slider_pulley_radius: 12.0,
            servo_pulley_radius: 2.0,
            servo_range: 660.0,
            rolling_radius: 10.0,
            pretension_prewrap: 90.0,
            limits: WristLimits::default(),
        }
    }
}

const RATIO_RTOL: f64 = 1e-12;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATIO_RTOL * a.abs().max(b.abs())
}

impl TransmissionParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("ratio_servo_slider", self.ratio_servo_slider),
            ("ratio_roll", self.ratio_roll),
            ("ratio_flexion_net", self.ratio_flexion_net),
            ("ratio_abduction_net", self.ratio_abduction_net),
            ("slider_pulley_radius", self.slider_pulley_radius),
            ("servo_pulley_radius", self.servo_pulley_radius),
            ("servo_range", self.servo_range),
            ("rolling_radius", self.rolling_radius),
            ("pretension_prewrap", self.pretension_prewrap),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Validation(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !close(
            self.ratio_flexion_net,
            self.ratio_servo_slider * self.ratio_roll,
        ) {
            return Err(Error::Validation(format!(
                "ratio_flexion_net {} != ratio_servo_slider {} x ratio_roll {}",
                self.ratio_flexion_net, self.ratio_servo_slider, self.ratio_roll
            )));
        }
        if !close(
            self.servo_pulley_radius / self.slider_pulley_radius,
            self.ratio_servo_slider,
        ) {
            return Err(Error::Validation(format!(
                "pulley radii {} / {} do not match ratio_servo_slider {}",
                self.servo_pulley_radius, self.slider_pulley_radius, self.ratio_servo_slider
            )));
        }
        self.limits.validate()?;
        let slider_travel = [self.limits.flexion_min, self.limits.flexion_max]
            .iter()
            .map(|f| (f / self.ratio_roll).abs())
            .fold(0.0, f64::max);
        if self.pretension_prewrap < slider_travel {
            return Err(Error::Validation(format!(
                "pretension_prewrap {}° is less than the slider travel {slider_travel}°",
                self.pretension_prewrap
            )));
        }
        Ok(())
    }
}

/// Maps servo angles to wrist joint angles.
///
/// Flexion follows the differential mode `(q1 - q2) / 2`, abduction the
/// common mode `(q1 + q2) / 2`, each scaled by its net ratio.
pub fn servo_to_wrist(cmd: ServoCommand, params: &TransmissionParams) -> Result<WristPose> {
    cmd.check_range(params.servo_range)?;
    let pose = WristPose {
        flexion: params.ratio_flexion_net * (cmd.q1 - cmd.q2) / 2.0,
        abduction: params.ratio_abduction_net * (cmd.q1 + cmd.q2) / 2.0,
    };
    params.limits.check(&pose)?;
    Ok(pose)
}

/// Inverse of [`servo_to_wrist`].
pub fn wrist_to_servo(pose: WristPose, params: &TransmissionParams) -> Result<ServoCommand> {
    params.limits.check(&pose)?;
    let differential = pose.flexion / params.ratio_flexion_net;
    let common = pose.abduction / params.ratio_abduction_net;
    Ok(ServoCommand {
        q1: common + differential,
        q2: common - differential,
    })
}

/// Rolling joint: the output turns through twice the slider angle.
pub fn slider_to_output(theta_slider: f64) -> f64 {
    2.0 * theta_slider
}

/// Tendon lengths for a wrist pose, in millimetres.
///
/// `drive_excursions` are the lengths paid out at the two slider pulleys
/// relative to the neutral pose. `pretension_lengths` hold the two
/// antagonistic pairs `[a0, a1, b0, b1]` that keep the rolling contact
/// closed; the pairs lie in parallel planes and are identical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TendonState {
    pub drive_excursions: [f64; 2],
    pub pretension_lengths: [f64; 4],
}

impl TendonState {
    pub fn pair_sums(&self) -> [f64; 2] {
        let p = &self.pretension_lengths;
        [p[0] + p[1], p[2] + p[3]]
    }
}

pub fn tendon_excursion(pose: WristPose, params: &TransmissionParams) -> Result<TendonState> {
    let cmd = wrist_to_servo(pose, params)?;
    let slider = [cmd.q1, cmd.q2].map(|q| q * params.ratio_servo_slider);
    let drive_excursions = slider.map(|s| params.slider_pulley_radius * s.to_radians());

    let beta = (pose.flexion / params.ratio_roll).to_radians();
    let (a0, a1) = pretension_pair(
        beta,
        params.rolling_radius,
        params.pretension_prewrap.to_radians(),
    );
    Ok(TendonState {
        drive_excursions,
        pretension_lengths: [a0, a1, a0, a1],
    })
}

/// Lengths of the two uncrossed tendons spanning a pair of equal cylinders
/// in rolling contact.
///
/// The lower cylinder is fixed at the origin. The line of centres has
/// turned by the slider angle `beta`, so the upper body has turned by
/// `2 * beta`. Each tendon is anchored `prewrap` past its neutral tangent
/// point on both bodies, wraps onto the lower cylinder, crosses on the
/// common outer tangent and wraps onto the upper cylinder.
fn pretension_pair(beta: f64, radius: f64, prewrap: f64) -> (f64, f64) {
    use std::f64::consts::PI;

    let lower = [0.0, 0.0];
    let upper = [-2.0 * radius * beta.sin(), 2.0 * radius * beta.cos()];
    let axis = {
        let d = [upper[0] - lower[0], upper[1] - lower[1]];
        let n = d[0].hypot(d[1]);
        [d[0] / n, d[1] / n]
    };
    let body_turn = 2.0 * beta;

    let mut lengths = [0.0; 2];
    for (k, side) in [1.0f64, -1.0].into_iter().enumerate() {
        // outward normal of the outer tangent on this side
        let normal = [side * axis[1], -side * axis[0]];
        let tangent_angle = normal[1].atan2(normal[0]);
        let t_lower = [lower[0] + radius * normal[0], lower[1] + radius * normal[1]];
        let t_upper = [upper[0] + radius * normal[0], upper[1] + radius * normal[1]];
        let span = (t_upper[0] - t_lower[0]).hypot(t_upper[1] - t_lower[1]);

        // Anchors in world angles; the right tendon winds counter-clockwise,
        // the left one clockwise.
        let neutral = if side > 0.0 { 0.0 } else { PI };
        let lower_anchor = neutral - side * prewrap;
        let upper_anchor = neutral + side * prewrap + body_turn;
        let lower_wrap =
            side * (wrap_to_pi(tangent_angle - lower_anchor - side * PI / 2.0) + side * PI / 2.0);
        let upper_wrap =
            side * (wrap_to_pi(upper_anchor - tangent_angle - side * PI / 2.0) + side * PI / 2.0);
        lengths[k] = radius * (lower_wrap + upper_wrap) + span;
    }
    (lengths[0], lengths[1])
}

/// Reduces an angle to (-pi, pi].
fn wrap_to_pi(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Servo datasheet values used for limit propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServoSpec {
    /// N·m
    pub stall_torque: f64,
    /// degrees per second
    pub max_velocity: f64,
}

impl Default for ServoSpec {
    /// The servo that reproduces the wrist datasheet through the default
    /// ratios: two servos at 5.2/6 N·m and 1500 °/s.
    fn default() -> Self {
        Self {
            stall_torque: 5.2 / 6.0,
            max_velocity: 1500.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofLimits {
    /// N·m
    pub max_torque: f64,
    /// degrees per second
    pub max_velocity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagatedLimits {
    pub flexion: DofLimits,
    pub abduction: DofLimits,
}

/// Output torque and speed limits for a lossless transmission.
pub fn propagate_dof(servo: &ServoSpec, n_servos: usize, ratio_net: f64) -> Result<DofLimits> {
    let checks = [
        ("stall_torque", servo.stall_torque),
        ("max_velocity", servo.max_velocity),
        ("ratio", ratio_net),
    ];
    for (name, v) in checks {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Validation(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    if n_servos == 0 {
        return Err(Error::Validation("n_servos must be positive".into()));
    }
    Ok(DofLimits {
        max_torque: n_servos as f64 * servo.stall_torque / ratio_net,
        max_velocity: servo.max_velocity * ratio_net,
    })
}

pub fn propagate_limits(
    servo: &ServoSpec,
    n_servos: usize,
    params: &TransmissionParams,
) -> Result<PropagatedLimits> {
    Ok(PropagatedLimits {
        flexion: propagate_dof(servo, n_servos, params.ratio_flexion_net)?,
        abduction: propagate_dof(servo, n_servos, params.ratio_abduction_net)?,
    })
}
