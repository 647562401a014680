use std::fmt;
use std::str::FromStr;

use nalgebra::{Isometry3, Point3, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::BoxGeometry;
use crate::error::{Error, Result};
use crate::kinematics::{frames, KinematicChain, Variant};

/// Frame a capsule is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkRef {
    /// Frame after the `n`-th arm joint (0 is the base).
    Frame(usize),
    /// Frame after the last arm joint.
    Flange,
    Tool,
}

impl fmt::Display for LinkRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkRef::Frame(n) => write!(f, "frame:{n}"),
            LinkRef::Flange => f.write_str("flange"),
            LinkRef::Tool => f.write_str("tool"),
        }
    }
}

impl FromStr for LinkRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flange" => Ok(LinkRef::Flange),
            "tool" => Ok(LinkRef::Tool),
            _ => s
                .strip_prefix("frame:")
                .and_then(|n| n.parse().ok())
                .map(LinkRef::Frame)
                .ok_or_else(|| {
                    Error::Validation(format!("unknown link {s:?} (tool, flange or frame:N)"))
                }),
        }
    }
}

impl Serialize for LinkRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LinkRef {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Swept sphere around a segment fixed in a link frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Capsule {
    pub name: String,
    pub link: LinkRef,
    /// mm, in the link frame
    pub from: [f64; 3],
    /// mm, in the link frame
    pub to: [f64; 3],
    /// mm
    pub radius: f64,
    /// Variants the capsule applies to; empty means all.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<Variant>,
}

impl Capsule {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Validation(format!(
                "capsule {} needs a positive radius, got {}",
                self.name, self.radius
            )));
        }
        if !self.from.iter().chain(&self.to).all(|v| v.is_finite()) {
            return Err(Error::Validation(format!(
                "capsule {} has non-finite endpoints",
                self.name
            )));
        }
        Ok(())
    }

    pub fn applies_to(&self, variant: Variant) -> bool {
        self.variants.is_empty() || self.variants.contains(&variant)
    }

    /// Segment endpoints in the arm base frame.
    pub fn endpoints(
        &self,
        chain: &KinematicChain,
        frames: &[Isometry3<f64>],
    ) -> Result<(Vector3<f64>, Vector3<f64>)> {
        let frame = match self.link {
            LinkRef::Tool => frames.last(),
            LinkRef::Flange => frames.get(chain.arm_joints),
            LinkRef::Frame(n) if n <= chain.arm_joints => frames.get(n),
            LinkRef::Frame(n) => {
                return Err(Error::Validation(format!(
                    "capsule {} refers to frame {n} of a {}-joint arm",
                    self.name, chain.arm_joints
                )))
            }
        }
        .expect("frame list covers the chain");
        let a = frame * Point3::from(self.from);
        let b = frame * Point3::from(self.to);
        Ok((a.coords, b.coords))
    }
}

/// Default collision geometry: the hand, the end of the robot arm and the
/// wrist housing.
pub fn default_capsules() -> Vec<Capsule> {
    vec![
        Capsule {
            name: "hand".into(),
            link: LinkRef::Tool,
            from: [0.0, 0.0, -170.0],
            to: [0.0, 0.0, 0.0],
            radius: 40.0,
            variants: Vec::new(),
        },
        Capsule {
            name: "robot_wrist".into(),
            link: LinkRef::Flange,
            from: [0.0, 0.0, -240.0],
            to: [0.0, 0.0, 0.0],
            radius: 75.0,
            variants: Vec::new(),
        },
        Capsule {
            name: "wrist_housing".into(),
            link: LinkRef::Flange,
            from: [0.0, 0.0, 0.0],
            to: [0.0, 0.0, 60.0],
            radius: 40.0,
            variants: vec![Variant::Wrist],
        },
    ]
}

/// Smallest clearance (distance minus radius) of any applicable capsule to
/// any solid part of the bin, in mm. Negative means penetration.
pub fn clearance_margin(
    chain: &KinematicChain,
    frames: &[Isometry3<f64>],
    bin: &BoxGeometry,
    capsules: &[Capsule],
) -> Result<f64> {
    let to_box = bin.frame().inverse().to_isometry();
    let obstacles = bin.obstacles();
    let mut margin = f64::INFINITY;
    for c in capsules.iter().filter(|c| c.applies_to(chain.variant)) {
        let (a, b) = c.endpoints(chain, frames)?;
        let a = (to_box * Point3::from(a)).coords;
        let b = (to_box * Point3::from(b)).coords;
        for o in &obstacles {
            margin = margin.min(o.distance_to_segment(&a, &b) - c.radius);
        }
    }
    Ok(margin)
}

/// True when every applicable capsule keeps at least its radius from the
/// walls and floor of the bin.
pub fn clearance_ok(
    chain: &KinematicChain,
    joints: &[f64],
    bin: &BoxGeometry,
    capsules: &[Capsule],
) -> Result<bool> {
    let f = frames(chain, joints)?;
    Ok(clearance_margin(chain, &f, bin, capsules)? >= 0.0)
}
