//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns plain strings (JSON where structured) so
//! the page needs no generated TypeScript types. The `*_json` functions are
//! the same operations without the JavaScript error wrapper, for native use
//! and tests.

use serde::Serialize;
use wasm_bindgen::prelude::*;
use wristcap_core::capmap::{self, ComputeOptions};
use wristcap_core::kinematics::Variant;
use wristcap_core::scenario::{ScenarioConfig, ScenarioSettings, DEFAULT_SCENARIO};
use wristcap_core::transmission::{
    propagate_limits, servo_to_wrist, tendon_excursion, wrist_to_servo, PropagatedLimits,
    ServoCommand, TendonState, WristLimits, WristPose,
};

#[derive(Serialize)]
struct TransmissionView {
    q1: f64,
    q2: f64,
    flexion: f64,
    abduction: f64,
    /// Pose inside the joint limits; equals the requested pose when valid.
    clamped: bool,
    tendons: TendonState,
    limits: PropagatedLimits,
    rom: WristLimits,
}

fn err(e: impl ToString) -> String {
    e.to_string()
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(err)
}

fn view(pose: WristPose, clamped: bool) -> Result<String, String> {
    let params = wristcap_core::transmission::TransmissionParams::default();
    let cmd = wrist_to_servo(pose, &params).map_err(err)?;
    to_json(&TransmissionView {
        q1: cmd.q1,
        q2: cmd.q2,
        flexion: pose.flexion,
        abduction: pose.abduction,
        clamped,
        tendons: tendon_excursion(pose, &params).map_err(err)?,
        limits: propagate_limits(&Default::default(), 2, &params).map_err(err)?,
        rom: params.limits,
    })
}

/// Wrist state for a servo command. Commands past the joint limits are
/// clamped to the nearest valid pose and flagged rather than rejected, so
/// a slider can be dragged freely.
pub fn servo_state_json(q1: f64, q2: f64) -> Result<String, String> {
    let params = wristcap_core::transmission::TransmissionParams::default();
    match servo_to_wrist(ServoCommand::new(q1, q2), &params) {
        Ok(pose) => view(pose, false),
        Err(wristcap_core::Error::WristLimit { clamped, .. }) => view(clamped, true),
        Err(e) => Err(err(e)),
    }
}

/// Servo command and tendon state for a wrist pose, clamped like
/// [`servo_state_json`].
pub fn wrist_state_json(flexion: f64, abduction: f64) -> Result<String, String> {
    let limits = WristLimits::default();
    let pose = WristPose::new(flexion, abduction);
    let inside = limits.contains(&pose);
    view(limits.clamp(&pose), !inside)
}

fn parse_variant(name: &str) -> Result<Variant, String> {
    name.parse().map_err(err)
}

/// Capability map of the default scenario with `key=value` overrides, one
/// per line, as structured JSON.
pub fn capability_map_json(variant: &str, overrides: &str) -> Result<String, String> {
    let overrides: Vec<String> = overrides
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect();
    let settings =
        ScenarioSettings::parse_with_overrides(DEFAULT_SCENARIO, &overrides).map_err(err)?;
    let scenario = ScenarioConfig::from_settings(settings, std::path::Path::new("."))
        .map_err(err)?
        .with_variant(parse_variant(variant)?);
    let grid = capmap::compute_with(&scenario, ComputeOptions::serial()).map_err(err)?;
    Ok(capmap::to_structured(&grid))
}

#[derive(Serialize)]
struct ComparisonView {
    report: String,
    comparison: capmap::VariantComparison,
}

/// Cell deltas `a - b` of two structured maps plus the text report.
pub fn compare_json(a: &str, b: &str) -> Result<String, String> {
    let ga = capmap::from_structured(a).map_err(err)?;
    let gb = capmap::from_structured(b).map_err(err)?;
    let comparison = capmap::compare(&ga, &gb).map_err(err)?;
    let name = |g: &capmap::CapabilityGrid| g.variant.map_or("map".to_string(), |v| v.to_string());
    to_json(&ComparisonView {
        report: comparison.report(&name(&ga), &name(&gb)),
        comparison,
    })
}

#[wasm_bindgen(js_name = servoState)]
pub fn servo_state(q1: f64, q2: f64) -> Result<String, JsError> {
    servo_state_json(q1, q2).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = wristState)]
pub fn wrist_state(flexion: f64, abduction: f64) -> Result<String, JsError> {
    wrist_state_json(flexion, abduction).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = capabilityMap)]
pub fn capability_map(variant: &str, overrides: &str) -> Result<String, JsError> {
    capability_map_json(variant, overrides).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = compareMaps)]
pub fn compare_maps(a: &str, b: &str) -> Result<String, JsError> {
    compare_json(a, b).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = defaultScenario)]
pub fn default_scenario() -> String {
    DEFAULT_SCENARIO.to_string()
}
