use std::path::PathBuf;

use crate::transmission::WristPose;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid value: {0}")]
    Validation(String),

    #[error("servo q{servo} command {value}° outside ±{range}°")]
    ServoRange { servo: u8, value: f64, range: f64 },

    #[error(
        "wrist pose (flexion {:.6}°, abduction {:.6}°) outside joint limits; nearest valid pose is (flexion {:.6}°, abduction {:.6}°)",
        pose.flexion, pose.abduction, clamped.flexion, clamped.abduction
    )]
    WristLimit { pose: WristPose, clamped: WristPose },

    #[error("joint {index} at {value}° outside [{lo}°, {hi}°]")]
    JointLimit {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("expected {expected} joint values, got {got}")]
    JointCount { expected: usize, got: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("grids cannot be compared: {0}")]
    Comparison(String),

    #[error("malformed {what}: {msg}")]
    Parse { what: &'static str, msg: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
