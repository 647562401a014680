use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::clearance::{default_capsules, Capsule};
use super::geometry::{BoxGeometry, GridSpec, OrientationSpec};
use crate::error::{Error, Result};
use crate::kinematics::{
    make_variant, ChainFile, IkOptions, KinematicChain, Variant, VariantParams,
};
use crate::transmission::{ServoSpec, TransmissionParams};

pub const BUILTIN_LWA3: &str = include_str!("../../../../configs/lwa3.chain.toml");
pub const BUILTIN_IIWA: &str = include_str!("../../../../configs/iiwa.chain.toml");

/// The commented default scenario written by `scenario-init`.
pub const DEFAULT_SCENARIO: &str = include_str!("../../../../configs/default.scenario");

/// Geometry of the adapter and wrist variants as stored in the scenario
/// file; the wrist limits come from `[transmission.limits]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariantGeometry {
    pub adapter_angle: f64,
    pub adapter_axis: [f64; 3],
    pub wrist_length: f64,
}

impl Default for VariantGeometry {
    fn default() -> Self {
        let p = VariantParams::default();
        Self {
            adapter_angle: p.adapter_angle,
            adapter_axis: p.adapter_axis,
            wrist_length: p.wrist_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClearanceSpec {
    /// When false, reachability is decided by IK alone.
    pub enabled: bool,
    pub capsules: Vec<Capsule>,
}

impl Default for ClearanceSpec {
    fn default() -> Self {
        Self {
            enabled: true,
            capsules: default_capsules(),
        }
    }
}

/// Everything a scenario file holds. Missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSettings {
    /// Path of the arm chain file, relative to the scenario file, or
    /// `builtin:lwa3` / `builtin:iiwa`.
    pub chain: String,
    pub variant: Variant,
    #[serde(rename = "box")]
    pub bin: BoxGeometry,
    pub grid: GridSpec,
    pub orientation: OrientationSpec,
    pub ik: IkOptions,
    pub variants: VariantGeometry,
    pub transmission: TransmissionParams,
    pub servo: ServoSpec,
    pub clearance: ClearanceSpec,
}

impl Default for ScenarioSettings {
    fn default() -> Self {
        Self {
            chain: "builtin:lwa3".into(),
            variant: Variant::Bare,
            bin: BoxGeometry::default(),
            grid: GridSpec::default(),
            orientation: OrientationSpec::default(),
            ik: IkOptions::default(),
            variants: VariantGeometry::default(),
            transmission: TransmissionParams::default(),
            servo: ServoSpec::default(),
            clearance: ClearanceSpec::default(),
        }
    }
}

impl ScenarioSettings {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            what: "scenario file",
            msg: e.to_string(),
        })
    }

    /// Parses `text` and applies `key.path=value` overrides. Every key must
    /// name an existing setting.
    pub fn parse_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let base = Self::parse(text)?;
        if overrides.is_empty() {
            return Ok(base);
        }
        let mut tree = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        for item in overrides {
            apply_override(&mut tree, item)?;
        }
        let out: Self = tree.try_into().map_err(|e: toml::de::Error| Error::Parse {
            what: "override",
            msg: e.to_string(),
        })?;
        Ok(out)
    }

    pub fn variant_params(&self) -> VariantParams {
        VariantParams {
            adapter_angle: self.variants.adapter_angle,
            adapter_axis: self.variants.adapter_axis,
            wrist_length: self.variants.wrist_length,
            wrist_limits: self.transmission.limits,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.bin.validate()?;
        self.orientation.count()?;
        self.ik.validate()?;
        self.transmission.validate()?;
        self.variant_params().validate()?;
        for c in &self.clearance.capsules {
            c.validate()?;
        }
        if self.grid.is_empty() {
            return Err(Error::Validation("grid has no cells".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize")
    }
}

fn apply_override(tree: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let mut parts = key.split('.').peekable();
    let mut table = tree;
    while let Some(part) = parts.next() {
        let slot = table
            .get_mut(part)
            .ok_or_else(|| Error::Config(format!("unknown setting {key:?}")))?;
        if parts.peek().is_none() {
            *slot = parse_value(raw, slot)?;
            return Ok(());
        }
        table = slot
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key:?}: {part:?} is not a section")))?;
    }
    Err(Error::Config(format!("empty override key in {item:?}")))
}

/// Parses an override value, keeping floats floats when given as integers
/// and accepting bare words for string settings.
fn parse_value(raw: &str, current: &toml::Value) -> Result<toml::Value> {
    let parsed = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"));
    let value = match (parsed, current) {
        (Some(toml::Value::Integer(i)), toml::Value::Float(_)) => toml::Value::Float(i as f64),
        (Some(v), _) => v,
        (None, toml::Value::String(_)) => toml::Value::String(raw.to_string()),
        (None, _) => {
            return Err(Error::Config(format!(
                "cannot parse override value {raw:?}"
            )))
        }
    };
    if std::mem::discriminant(&value) != std::mem::discriminant(current) {
        return Err(Error::Config(format!(
            "override value {raw:?} has type {}, expected {}",
            value.type_str(),
            current.type_str()
        )));
    }
    Ok(value)
}

/// A scenario with its arm chain resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub settings: ScenarioSettings,
    /// The bare arm, as loaded from the chain file.
    pub arm: ChainFile,
}

impl ScenarioConfig {
    pub fn from_settings(settings: ScenarioSettings, base_dir: &Path) -> Result<Self> {
        settings.validate()?;
        let arm = resolve_chain(&settings.chain, base_dir)?;
        arm.to_chain()?;
        Ok(Self { settings, arm })
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let settings = ScenarioSettings::parse_with_overrides(&text, overrides)?;
        let dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Self::from_settings(settings, &dir)
    }

    pub fn default_scenario() -> Self {
        Self::from_settings(ScenarioSettings::default(), Path::new("."))
            .expect("default scenario is valid")
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.settings.variant = variant;
        self
    }

    /// The chain for the configured variant.
    pub fn chain(&self) -> Result<KinematicChain> {
        let bare = self.arm.to_chain()?;
        make_variant(
            &bare,
            self.settings.variant,
            &self.settings.variant_params(),
        )
    }

    /// Hex SHA-256 of the resolved scenario, excluding the variant tag, so
    /// grids of different variants of one scenario share a fingerprint.
    pub fn fingerprint(&self) -> String {
        #[derive(Serialize)]
        struct Canonical<'a> {
            settings: &'a ScenarioSettings,
            arm: &'a ChainFile,
        }
        let mut settings = self.settings.clone();
        settings.variant = Variant::Bare;
        settings.chain = String::new();
        let json = serde_json::to_string(&Canonical {
            settings: &settings,
            arm: &self.arm,
        })
        .expect("scenario serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn resolve_chain(source: &str, base_dir: &Path) -> Result<ChainFile> {
    match source.strip_prefix("builtin:") {
        Some("lwa3") => ChainFile::parse(BUILTIN_LWA3),
        Some("iiwa") => ChainFile::parse(BUILTIN_IIWA),
        Some(other) => Err(Error::Config(format!(
            "unknown builtin chain {other:?} (lwa3 or iiwa)"
        ))),
        None => {
            let path = base_dir.join(source);
            if !path.exists() {
                return Err(Error::Config(format!(
                    "chain file {} not found",
                    path.display()
                )));
            }
            ChainFile::load(&path)
        }
    }
}
