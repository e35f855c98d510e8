//! Operational scenario library and file format.
//!
//! Scenarios are strict-schema JSON documents (`format_version` 1, unknown
//! keys rejected) describing the ego and its sensor/tracker/AEB stack, the
//! scripted actors, embedded attacks, registered safety constraints and
//! termination conditions. Sweep grids wrap a base scenario with parameter
//! axes addressed by JSON-pointer paths.

use crate::aeb::AebConfig;
use crate::attacks::AttackSpec;
use crate::geometry::Pose2;
use crate::monitors::SafetyConstraint;
use crate::sensors::{CameraConfig, LidarConfig, RadarConfig, SensorKind};
use crate::world::{Actor, Body, BodyKind, Script, WorldState, DEFAULT_DT};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("sweep axis path '{0}' does not resolve in the base scenario")]
    BadAxisPath(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BodySpec {
    pub id: String,
    pub kind: BodyKind,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub heading: f64,
    pub length: f64,
    pub width: f64,
    #[serde(default)]
    pub rcs: f64,
}

impl BodySpec {
    fn to_body(&self, velocity: (f64, f64)) -> Body {
        Body {
            id: self.id.clone(),
            kind: self.kind,
            pose: Pose2::new(self.x, self.y, self.heading),
            velocity,
            length: self.length,
            width: self.width,
            radar_cross_section: self.rcs,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if self.length <= 0.0 || self.width <= 0.0 {
            return Err(format!("body '{}': extent must be positive", self.id));
        }
        if self.rcs < 0.0 {
            return Err(format!("body '{}': rcs must be non-negative", self.id));
        }
        if !(self.x.is_finite() && self.y.is_finite() && self.heading.is_finite()) {
            return Err(format!("body '{}': pose must be finite", self.id));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorSpec {
    pub body: BodySpec,
    pub script: Script,
}

/// One sensor slot: present config plus enable/consume flags. A disabled
/// sensor never runs; an enabled one that is not `use_for_control` still
/// senses into the trace but its detections are excluded from fusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSlot<C> {
    #[serde(default = "default_true")]
    pub enabled: bool,
    #[serde(default = "default_true")]
    pub use_for_control: bool,
    pub config: C,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorSuite {
    pub radar: Option<SensorSlot<RadarConfig>>,
    pub camera: Option<SensorSlot<CameraConfig>>,
    pub lidar: Option<SensorSlot<LidarConfig>>,
}

impl SensorSuite {
    pub fn has_enabled(&self, kind: SensorKind) -> bool {
        match kind {
            SensorKind::Radar => self.radar.as_ref().is_some_and(|s| s.enabled),
            SensorKind::Camera => self.camera.as_ref().is_some_and(|s| s.enabled),
            SensorKind::Lidar => self.lidar.as_ref().is_some_and(|s| s.enabled),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoSpec {
    pub body: BodySpec,
    /// Initial forward speed, m/s.
    pub speed: f64,
    /// Half-width of the in-path gate used for MIO selection, meters.
    pub lane_halfwidth_m: f64,
    pub sensors: SensorSuite,
    pub tracker: crate::fusion::TrackerConfig,
    pub aeb: AebConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TerminationSpec {
    pub on_crash: bool,
    /// Stop the run once the ego has braked and reached standstill.
    pub on_ego_stop: bool,
}

impl Default for TerminationSpec {
    fn default() -> Self {
        Self {
            on_crash: true,
            on_ego_stop: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConflictPoint {
    pub x: f64,
    pub y: f64,
}

/// A fully validated operational scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    pub duration_limit_s: f64,
    #[serde(default = "default_dt")]
    pub dt_s: f64,
    pub ego: EgoSpec,
    #[serde(default)]
    pub actors: Vec<ActorSpec>,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    #[serde(default)]
    pub monitors: Vec<SafetyConstraint>,
    #[serde(default)]
    pub conflict_point: Option<ConflictPoint>,
    /// Body whose separation from the ego is tracked for the verdict.
    #[serde(default)]
    pub target_id: Option<String>,
    #[serde(default = "default_comfort_margin")]
    pub comfort_margin_m: f64,
    #[serde(default)]
    pub termination: TerminationSpec,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_comfort_margin() -> f64 {
    7.0
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fail = |msg: String| Err(ScenarioError::Invalid(msg));
        if self.format_version != FORMAT_VERSION {
            return Err(ScenarioError::Version(self.format_version));
        }
        if self.duration_limit_s <= 0.0 || self.duration_limit_s.is_nan() {
            return fail("duration_limit_s must be positive".into());
        }
        if self.dt_s <= 0.0 || self.dt_s.is_nan() {
            return fail("dt_s must be positive".into());
        }
        if self.ego.body.kind != BodyKind::EgoVehicle {
            return fail("ego body kind must be ego_vehicle".into());
        }
        if self.ego.speed < 0.0 {
            return fail("ego speed must be non-negative".into());
        }
        if self.ego.lane_halfwidth_m <= 0.0 {
            return fail("lane_halfwidth_m must be positive".into());
        }
        self.ego.body.validate().map_err(ScenarioError::Invalid)?;
        for actor in &self.actors {
            actor.body.validate().map_err(ScenarioError::Invalid)?;
            if actor.body.kind == BodyKind::EgoVehicle {
                return fail(format!(
                    "actor '{}' cannot be an ego vehicle",
                    actor.body.id
                ));
            }
        }
        let mut ids: Vec<&str> = std::iter::once(self.ego.body.id.as_str())
            .chain(self.actors.iter().map(|a| a.body.id.as_str()))
            .collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return fail("body ids must be unique".into());
        }
        if let Some(slot) = &self.ego.sensors.radar {
            slot.config.validate().map_err(ScenarioError::Invalid)?;
        }
        if let Some(slot) = &self.ego.sensors.camera {
            slot.config.validate().map_err(ScenarioError::Invalid)?;
        }
        if let Some(slot) = &self.ego.sensors.lidar {
            slot.config.validate().map_err(ScenarioError::Invalid)?;
        }
        self.ego
            .tracker
            .validate()
            .map_err(ScenarioError::Invalid)?;
        self.ego.aeb.validate().map_err(ScenarioError::Invalid)?;
        for attack in &self.attacks {
            attack.validate().map_err(ScenarioError::Invalid)?;
            let sensor = attack.target_sensor();
            if !self.ego.sensors.has_enabled(sensor) {
                return fail(format!(
                    "attack '{}' targets a sensor the ego lacks: {:?}",
                    attack.kind_name(),
                    sensor
                ));
            }
        }
        for monitor in &self.monitors {
            monitor.validate().map_err(ScenarioError::Invalid)?;
        }
        if let Some(target) = &self.target_id {
            if !self.actors.iter().any(|a| &a.body.id == target) {
                return fail(format!("target_id '{target}' names no actor"));
            }
        }
        Ok(())
    }

    /// Build the initial world state.
    pub fn initial_world(&self) -> WorldState {
        let ego = self.ego.body.to_body((self.ego.speed, 0.0));
        let actors = self
            .actors
            .iter()
            .map(|spec| {
                let body = spec.body.to_body(spec.script.velocity(0.0));
                Actor {
                    start_pose: body.pose,
                    body,
                    script: spec.script,
                }
            })
            .collect();
        WorldState {
            time: 0.0,
            ego,
            ego_speed: self.ego.speed,
            actors,
            ego_command: crate::aeb::BrakeCommand::none(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parse and fully validate a scenario document. Unknown fields are
/// rejected; schema errors carry the JSON path to the offending key.
pub fn load_scenario(document: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let scenario: Scenario =
        serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario_file(path: &std::path::Path) -> Result<Scenario, ScenarioError> {
    load_scenario(&std::fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Bundled scenario constructors
// ---------------------------------------------------------------------------

/// Parameters for the crossing-pedestrian (nearside, obstructed) scenario.
#[derive(Debug, Clone)]
pub struct CpnoParams {
    /// Ego speed, m/s (default 25 km/h).
    pub ego_speed: f64,
    /// Pedestrian crossing speed, m/s (default 5 km/h).
    pub ped_speed: f64,
    /// Parked-vehicle centers forming the obstruction, nearside of the lane.
    pub occluders: Vec<(f64, f64)>,
    pub aeb_enabled: bool,
}

impl Default for CpnoParams {
    fn default() -> Self {
        Self {
            ego_speed: 25.0 / 3.6,
            ped_speed: 5.0 / 3.6,
            occluders: vec![(29.0, -3.0), (34.0, -3.0)],
            aeb_enabled: true,
        }
    }
}

/// Distance from the ego start to the conflict point in CPNO, meters.
pub const CPNO_CONFLICT_X: f64 = 40.0;
/// Pedestrian standing position (hidden behind the parked vehicles).
const CPNO_PED_START_Y: f64 = -3.6;

/// Crossing pedestrian, nearside, obstructed: the ego drives toward a
/// conflict point 40 m ahead while a pedestrian, initially hidden behind two
/// parked vehicles, crosses from the nearside timed to meet the unbraked ego
/// exactly at the conflict point.
pub fn instantiate_cpno(params: &CpnoParams) -> Result<Scenario, ScenarioError> {
    if params.ego_speed <= 0.0 || params.ego_speed.is_nan() {
        return Err(ScenarioError::Invalid("ego_speed must be positive".into()));
    }
    if params.ped_speed <= 0.0 || params.ped_speed.is_nan() {
        return Err(ScenarioError::Invalid(
            "ped_speed must be positive (no crossing otherwise)".into(),
        ));
    }
    let t_conflict = CPNO_CONFLICT_X / params.ego_speed;
    let walk_time = -CPNO_PED_START_Y / params.ped_speed;
    let start_s = t_conflict - walk_time;
    if start_s < 0.0 {
        return Err(ScenarioError::Invalid(format!(
            "conflict timing impossible: pedestrian needs {walk_time:.2} s but the ego arrives in {t_conflict:.2} s"
        )));
    }

    let aeb = AebConfig {
        enabled: params.aeb_enabled,
        ..Default::default()
    };

    let mut actors = vec![ActorSpec {
        body: BodySpec {
            id: "ped".into(),
            kind: BodyKind::Pedestrian,
            x: CPNO_CONFLICT_X,
            y: CPNO_PED_START_Y,
            heading: std::f64::consts::FRAC_PI_2,
            length: 0.5,
            width: 0.5,
            rcs: 1.0,
        },
        script: Script::Delayed {
            start_s,
            vx: 0.0,
            vy: params.ped_speed,
        },
    }];
    for (idx, (x, y)) in params.occluders.iter().enumerate() {
        actors.push(ActorSpec {
            body: BodySpec {
                id: format!("parked_{}", idx + 1),
                kind: BodyKind::Car,
                x: *x,
                y: *y,
                heading: 0.0,
                length: 4.4,
                width: 1.8,
                rcs: 10.0,
            },
            script: Script::Static,
        });
    }

    let scenario = Scenario {
        format_version: FORMAT_VERSION,
        name: "cpno".into(),
        description: "crossing pedestrian from the nearside, initially obstructed by two parked \
                      vehicles"
            .into(),
        seed: 7,
        duration_limit_s: 12.0,
        dt_s: DEFAULT_DT,
        ego: EgoSpec {
            body: BodySpec {
                id: "ego".into(),
                kind: BodyKind::EgoVehicle,
                x: 0.0,
                y: 0.0,
                heading: 0.0,
                length: 4.5,
                width: 1.8,
                rcs: 10.0,
            },
            speed: params.ego_speed,
            // The in-path gate is wider than the physical lane half-width so
            // a crossing pedestrian entering the lane edge is already an MIO.
            lane_halfwidth_m: 2.25,
            sensors: SensorSuite {
                radar: Some(SensorSlot {
                    enabled: true,
                    use_for_control: true,
                    config: RadarConfig::default(),
                }),
                camera: Some(SensorSlot {
                    enabled: true,
                    use_for_control: true,
                    config: CameraConfig::default(),
                }),
                lidar: Some(SensorSlot {
                    enabled: true,
                    use_for_control: true,
                    config: LidarConfig::default(),
                }),
            },
            tracker: crate::fusion::TrackerConfig::default(),
            aeb: aeb.clone(),
        },
        actors,
        attacks: vec![],
        monitors: vec![SafetyConstraint::sc1_for(params.ego_speed, &aeb)],
        conflict_point: Some(ConflictPoint {
            x: CPNO_CONFLICT_X,
            y: 0.0,
        }),
        target_id: Some("ped".into()),
        comfort_margin_m: 7.0,
        termination: TerminationSpec::default(),
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Stationary lead vehicle 40 m ahead, no obstruction.
pub fn instantiate_ccrs(ego_speed: f64) -> Result<Scenario, ScenarioError> {
    car_to_car(
        ego_speed,
        0.0,
        "ccrs",
        "approach to a stationary lead vehicle",
    )
}

/// Slower lead vehicle 40 m ahead moving at `lead_speed`.
pub fn instantiate_ccrm(ego_speed: f64, lead_speed: f64) -> Result<Scenario, ScenarioError> {
    if lead_speed >= ego_speed {
        return Err(ScenarioError::Invalid(
            "lead must be slower than the ego for an approach conflict".into(),
        ));
    }
    car_to_car(
        ego_speed,
        lead_speed,
        "ccrm",
        "approach to a slower moving lead vehicle",
    )
}

fn car_to_car(
    ego_speed: f64,
    lead_speed: f64,
    name: &str,
    description: &str,
) -> Result<Scenario, ScenarioError> {
    if ego_speed <= 0.0 || ego_speed.is_nan() {
        return Err(ScenarioError::Invalid("ego_speed must be positive".into()));
    }
    let script = if lead_speed == 0.0 {
        Script::Static
    } else {
        Script::Linear {
            vx: lead_speed,
            vy: 0.0,
        }
    };
    let scenario = Scenario {
        format_version: FORMAT_VERSION,
        name: name.into(),
        description: description.into(),
        seed: 11,
        duration_limit_s: 15.0,
        dt_s: DEFAULT_DT,
        ego: EgoSpec {
            body: BodySpec {
                id: "ego".into(),
                kind: BodyKind::EgoVehicle,
                x: 0.0,
                y: 0.0,
                heading: 0.0,
                length: 4.5,
                width: 1.8,
                rcs: 10.0,
            },
            speed: ego_speed,
            lane_halfwidth_m: 1.75,
            sensors: SensorSuite {
                radar: Some(SensorSlot {
                    enabled: true,
                    use_for_control: true,
                    config: RadarConfig::default(),
                }),
                camera: Some(SensorSlot {
                    enabled: true,
                    use_for_control: true,
                    config: CameraConfig::default(),
                }),
                lidar: Some(SensorSlot {
                    enabled: true,
                    use_for_control: true,
                    config: LidarConfig::default(),
                }),
            },
            tracker: crate::fusion::TrackerConfig::default(),
            aeb: AebConfig::default(),
        },
        actors: vec![ActorSpec {
            body: BodySpec {
                id: "lead".into(),
                kind: BodyKind::Car,
                x: 40.0,
                y: 0.0,
                heading: 0.0,
                length: 4.4,
                width: 1.8,
                rcs: 10.0,
            },
            script,
        }],
        attacks: vec![],
        monitors: vec![SafetyConstraint::sc1_for_closing(
            ego_speed,
            ego_speed - lead_speed,
            &AebConfig::default(),
        )],
        // Conflict points describe crossing geometry; a car-following stop
        // is judged by its separation, not by a crossing margin.
        conflict_point: None,
        target_id: Some("lead".into()),
        comfort_margin_m: 7.0,
        termination: TerminationSpec::default(),
    };
    scenario.validate()?;
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// Sweep grids
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    /// JSON-pointer into the scenario document, e.g. `/attacks/0/tx_power_dbm`.
    pub path: String,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub format_version: u32,
    pub name: String,
    pub base: Scenario,
    pub axes: Vec<SweepAxis>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ScenarioError::Version(self.format_version));
        }
        if self.axes.is_empty() {
            return Err(ScenarioError::Invalid(
                "sweep needs at least one axis".into(),
            ));
        }
        for axis in &self.axes {
            if axis.values.is_empty() {
                return Err(ScenarioError::Invalid(format!(
                    "axis '{}' has no values",
                    axis.path
                )));
            }
        }
        self.base.validate()?;
        let base_doc = serde_json::to_value(&self.base).expect("scenario serializes");
        for axis in &self.axes {
            if base_doc.pointer(&axis.path).is_none() {
                return Err(ScenarioError::BadAxisPath(axis.path.clone()));
            }
        }
        Ok(())
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.values.len()).collect()
    }

    pub fn cell_count(&self) -> usize {
        self.shape().iter().product()
    }

    /// Coordinates of the `index`-th cell in row-major axis order.
    pub fn coords(&self, index: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut rest = index;
        let mut coords = vec![0; shape.len()];
        for (k, len) in shape.iter().enumerate().rev() {
            coords[k] = rest % len;
            rest /= len;
        }
        coords
    }

    pub fn index_of(&self, coords: &[usize]) -> usize {
        let shape = self.shape();
        let mut idx = 0;
        for (k, &c) in coords.iter().enumerate() {
            idx = idx * shape[k] + c;
        }
        idx
    }

    /// Scenario for one grid cell, with every axis value substituted.
    pub fn cell_scenario(&self, coords: &[usize]) -> Result<Scenario, ScenarioError> {
        let mut doc = serde_json::to_value(&self.base).expect("scenario serializes");
        for (axis, &value_idx) in self.axes.iter().zip(coords) {
            let slot = doc
                .pointer_mut(&axis.path)
                .ok_or_else(|| ScenarioError::BadAxisPath(axis.path.clone()))?;
            *slot = axis.values[value_idx].clone();
        }
        let scenario: Scenario =
            serde_json::from_value(doc).map_err(|e| ScenarioError::Schema {
                path: String::new(),
                message: e.to_string(),
            })?;
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Row-major Cartesian expansion of the grid into concrete scenarios,
/// paired with their coordinates.
pub fn expand_sweep(grid: &SweepGrid) -> Result<Vec<(Vec<usize>, Scenario)>, ScenarioError> {
    grid.validate()?;
    let n = grid.cell_count();
    let mut out = Vec::with_capacity(n);
    for index in 0..n {
        let coords = grid.coords(index);
        let scenario = grid.cell_scenario(&coords)?;
        out.push((coords, scenario));
    }
    Ok(out)
}

pub fn load_sweep(document: &str) -> Result<SweepGrid, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let grid: SweepGrid =
        serde_path_to_error::deserialize(de).map_err(|e| ScenarioError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    grid.validate()?;
    Ok(grid)
}

pub fn load_sweep_file(path: &std::path::Path) -> Result<SweepGrid, ScenarioError> {
    load_sweep(&std::fs::read_to_string(path)?)
}

/// Attack parameter slots a scenario may expose for STPA concretization:
/// maps slot name to either one fixed value or a sweep value list.
pub type AttackSlots = BTreeMap<String, Vec<serde_json::Value>>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpno_builds_and_validates() {
        let s = instantiate_cpno(&CpnoParams::default()).unwrap();
        assert_eq!(s.name, "cpno");
        assert_eq!(s.actors.len(), 3);
        assert!(s.validate().is_ok());
        // Conflict timing: pedestrian reaches y = 0 exactly when the
        // unbraked ego reaches x = 40.
        let t_conflict = CPNO_CONFLICT_X / s.ego.speed;
        let ped = &s.actors[0];
        let (_, dy) = ped.script.displacement(t_conflict);
        assert!((ped.body.y + dy).abs() < 1e-9);
    }

    #[test]
    fn cpno_pedestrian_initially_hidden() {
        let s = instantiate_cpno(&CpnoParams::default()).unwrap();
        let world = s.initial_world();
        let ped = world.body("ped").unwrap();
        let occluders: Vec<&crate::world::Body> =
            world.actor_bodies().filter(|b| b.id != "ped").collect();
        let vf = crate::world::visible_fraction(&world.ego.pose, ped, &occluders);
        assert_eq!(vf, 0.0, "pedestrian must start fully obstructed");
    }

    #[test]
    fn cpno_zero_ped_speed_rejected() {
        let params = CpnoParams {
            ped_speed: 0.0,
            ..Default::default()
        };
        assert!(instantiate_cpno(&params).is_err());
    }

    #[test]
    fn cpno_impossible_timing_rejected() {
        // Very slow pedestrian cannot reach the conflict in time.
        let params = CpnoParams {
            ego_speed: 20.0,
            ped_speed: 0.5,
            ..Default::default()
        };
        assert!(instantiate_cpno(&params).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let s = instantiate_cpno(&CpnoParams::default()).unwrap();
        let json = s.to_json();
        let reloaded = load_scenario(&json).unwrap();
        assert_eq!(s, reloaded);
        let json2 = reloaded.to_json();
        assert_eq!(json, json2);
    }

    #[test]
    fn unknown_key_rejected_with_path() {
        let s = instantiate_cpno(&CpnoParams::default()).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        doc["ego"]["bogus_key"] = serde_json::json!(1);
        let err = load_scenario(&serde_json::to_string(&doc).unwrap()).unwrap_err();
        match err {
            ScenarioError::Schema { path, .. } => assert!(path.contains("ego"), "path = {path}"),
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn missing_ego_rejected() {
        let s = instantiate_cpno(&CpnoParams::default()).unwrap();
        let mut doc: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        doc.as_object_mut().unwrap().remove("ego");
        let err = load_scenario(&serde_json::to_string(&doc).unwrap()).unwrap_err();
        assert!(err.to_string().contains("ego"), "err = {err}");
    }

    #[test]
    fn attack_on_missing_sensor_rejected() {
        let mut s = instantiate_cpno(&CpnoParams::default()).unwrap();
        s.ego.sensors.lidar = None;
        s.attacks.push(AttackSpec::LidarBlinding {
            sector_rad: (-0.1, 0.1),
            active_window_s: Default::default(),
        });
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("lidar"), "err = {err}");
    }

    fn tiny_grid() -> SweepGrid {
        let mut base = instantiate_cpno(&CpnoParams::default()).unwrap();
        base.attacks.push(AttackSpec::RadarDenialJamming {
            attacker: crate::attacks::AttackerPosition {
                frame: crate::attacks::AttackerFrame::EgoRelative,
                x: 30.0,
                y: 0.0,
            },
            tx_power_dbm: 10.0,
            antenna_gain_dbi: 10.0,
            active_window_s: Default::default(),
        });
        SweepGrid {
            format_version: FORMAT_VERSION,
            name: "tiny".into(),
            base,
            axes: vec![
                SweepAxis {
                    path: "/attacks/0/attacker/x".into(),
                    values: vec![10.0.into(), 20.0.into(), 30.0.into()],
                },
                SweepAxis {
                    path: "/attacks/0/tx_power_dbm".into(),
                    values: vec![0.0.into(), 10.0.into()],
                },
            ],
        }
    }

    #[test]
    fn sweep_product_and_bijection() {
        let grid = tiny_grid();
        let cells = expand_sweep(&grid).unwrap();
        assert_eq!(cells.len(), 6);
        // Row-major order and coordinate bijection.
        let mut seen = std::collections::BTreeSet::new();
        for (idx, (coords, scenario)) in cells.iter().enumerate() {
            assert_eq!(grid.index_of(coords), idx);
            assert_eq!(&grid.coords(idx), coords);
            assert!(seen.insert(coords.clone()));
            // The substitution really happened.
            match &scenario.attacks[0] {
                AttackSpec::RadarDenialJamming {
                    attacker,
                    tx_power_dbm,
                    ..
                } => {
                    let want_x: f64 = match coords[0] {
                        0 => 10.0,
                        1 => 20.0,
                        _ => 30.0,
                    };
                    assert_eq!(attacker.x, want_x);
                    let want_p: f64 = if coords[1] == 0 { 0.0 } else { 10.0 };
                    assert_eq!(*tx_power_dbm, want_p);
                }
                other => panic!("unexpected attack {other:?}"),
            }
        }
    }

    #[test]
    fn single_cell_sweep() {
        let mut grid = tiny_grid();
        grid.axes = vec![SweepAxis {
            path: "/seed".into(),
            values: vec![3.into()],
        }];
        let cells = expand_sweep(&grid).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].1.seed, 3);
    }

    #[test]
    fn bad_axis_path_rejected() {
        let mut grid = tiny_grid();
        grid.axes[0].path = "/attacks/5/tx_power_dbm".into();
        assert!(matches!(
            grid.validate(),
            Err(ScenarioError::BadAxisPath(_))
        ));
    }

    #[test]
    fn sweep_round_trip() {
        let grid = tiny_grid();
        let json = serde_json::to_string_pretty(&grid).unwrap();
        let reloaded = load_sweep(&json).unwrap();
        assert_eq!(grid, reloaded);
    }

    #[test]
    fn ccrs_ccrm_build() {
        assert!(instantiate_ccrs(25.0 / 3.6).is_ok());
        assert!(instantiate_ccrm(25.0 / 3.6, 10.0 / 3.6).is_ok());
        assert!(instantiate_ccrm(25.0 / 3.6, 30.0 / 3.6).is_err());
    }

    #[test]
    fn bundled_fixtures_match_constructors() {
        // The JSON fixtures are generated from these constructors; a drift
        // means someone edited one side only.
        let cpno = instantiate_cpno(&CpnoParams::default()).unwrap();
        assert_eq!(load_scenario(crate::fixtures::CPNO).unwrap(), cpno);
        let ccrs = instantiate_ccrs(25.0 / 3.6).unwrap();
        assert_eq!(load_scenario(crate::fixtures::CCRS).unwrap(), ccrs);
        let ccrm = instantiate_ccrm(25.0 / 3.6, 10.0 / 3.6).unwrap();
        assert_eq!(load_scenario(crate::fixtures::CCRM).unwrap(), ccrm);
    }
}
