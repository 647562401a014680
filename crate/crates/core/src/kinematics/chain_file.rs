//! TOML chain definition files.
//!
//! ```toml
//! name = "example"
//! home = [0.0, 45.0]          # optional IK seed, degrees
//!
//! [tool]
//! xyz = [0.0, 0.0, 170.0]     # mm
//! rpy = [0.0, 0.0, 0.0]       # degrees
//!
//! [[joints]]
//! name = "j1"
//! a = 0.0                     # mm
//! alpha = -90.0               # degrees
//! d = 300.0                   # mm
//! theta_offset = 0.0          # degrees
//! lo = -170.0                 # degrees
//! hi = 170.0                  # degrees
//! max_velocity = 100.0        # deg/s, optional
//! mount = { xyz = [0, 0, 0], rpy = [0, 0, 0] }   # optional
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::chain::{JointSpec, KinematicChain};
use crate::error::{Error, Result};
use crate::pose::Pose;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRow {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl PoseRow {
    pub fn to_pose(&self) -> Pose {
        Pose::from_xyz_rpy(self.xyz, self.rpy)
    }

    pub fn from_pose(p: &Pose) -> Self {
        let (r, pi, y) = p.orientation.euler_angles();
        Self {
            xyz: [p.position.x, p.position.y, p.position.z],
            rpy: [r.to_degrees(), pi.to_degrees(), y.to_degrees()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointRow {
    pub name: String,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub d: f64,
    #[serde(default)]
    pub theta_offset: f64,
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub max_velocity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mount: Option<PoseRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainFile {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub home: Vec<f64>,
    #[serde(default)]
    pub tool: PoseRow,
    pub joints: Vec<JointRow>,
}

impl ChainFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "chain file",
            msg: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("chain file serializes")
    }

    pub fn to_chain(&self) -> Result<KinematicChain> {
        let joints = self
            .joints
            .iter()
            .map(|r| {
                JointSpec::dh(
                    r.name.clone(),
                    r.a,
                    r.alpha.to_radians(),
                    r.d,
                    r.theta_offset.to_radians(),
                    r.lo,
                    r.hi,
                )
                .with_max_velocity(r.max_velocity)
                .with_mount(r.mount.as_ref().map(PoseRow::to_pose).unwrap_or_default())
            })
            .collect();
        KinematicChain::new(self.name.clone(), joints, self.tool.to_pose())?
            .with_home(self.home.clone())
    }

    pub fn from_chain(chain: &KinematicChain) -> Self {
        Self {
            name: chain.name.clone(),
            home: chain.home.clone(),
            tool: PoseRow::from_pose(&chain.tool),
            joints: chain
                .joints
                .iter()
                .map(|j| JointRow {
                    name: j.name.clone(),
                    a: j.a,
                    alpha: j.alpha.to_degrees(),
                    d: j.d,
                    theta_offset: j.theta_offset.to_degrees(),
                    lo: j.lo,
                    hi: j.hi,
                    max_velocity: j.max_velocity,
                    mount: (j.mount != Pose::identity()).then(|| PoseRow::from_pose(&j.mount)),
                })
                .collect(),
        }
    }
}

impl From<[f64; 3]> for PoseRow {
    fn from(xyz: [f64; 3]) -> Self {
        Self { xyz, rpy: [0.0; 3] }
    }
}
