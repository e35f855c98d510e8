//! Runtime verdict layer: a ground-truth control channel running alongside
//! the sensed one, safety-constraint checks over the finished trace, and
//! outcome classification.
//!
//! The simulator maintains two AEB decisions per tick: the sensed command,
//! computed from tracker output, and the oracle command, computed from true
//! positions and velocities while ignoring occlusion and sensing entirely.
//! Comparing the two is what turns a run into a constraint verdict.

use crate::aeb::{aeb_decide, AebConfig, BrakeCommand, BrakeStage, MioInput};
use crate::sensors::Detection;
use crate::world::{relative_polar, WorldState};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A registered safety constraint. SC1 is the bundled frontal-braking
/// constraint; further constraints register through the same shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SafetyConstraint {
    pub id: String,
    #[serde(default)]
    pub description: String,
    /// Distance below which braking becomes mandatory, meters.
    pub trigger_distance_m: f64,
    /// Grace period between trigger and brake onset, seconds.
    pub max_latency_s: f64,
}

impl SafetyConstraint {
    /// SC1 against a stationary conflict: trigger distance from the ego
    /// speed at the first partial-braking threshold plus a 2 m margin.
    pub fn sc1_for(ego_speed: f64, cfg: &AebConfig) -> Self {
        Self::sc1_for_closing(ego_speed, ego_speed, cfg)
    }

    /// SC1 for a general approach: the trigger is the distance covered at
    /// `closing_speed` during the first partial-braking TTC threshold, plus
    /// a 2 m margin. With `closing_speed == ego_speed` this is the
    /// stationary-target trigger.
    pub fn sc1_for_closing(ego_speed: f64, closing_speed: f64, cfg: &AebConfig) -> Self {
        let ttc_at_partial1 = cfg.stage_multipliers.partial1 * ego_speed / cfg.partial1_decel;
        Self {
            id: "SC1".into(),
            description: "brake within the configured latency once the nearest in-path object \
                          is inside the trigger distance"
                .into(),
            trigger_distance_m: ttc_at_partial1 * closing_speed + 2.0,
            max_latency_s: 0.2,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.trigger_distance_m <= 0.0 || self.max_latency_s < 0.0 {
            return Err(format!("constraint {}: params must be positive", self.id));
        }
        Ok(())
    }
}

/// Per-tick record. One row per sensing period, append-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub tick: usize,
    pub time_s: f64,
    pub ego_x: f64,
    pub ego_y: f64,
    pub ego_speed: f64,
    pub stage: BrakeStage,
    pub decel: f64,
    pub oracle_stage: BrakeStage,
    pub oracle_decel: f64,
    /// Sensed most-important object, if any: (range, closing rate, lateral).
    pub mio: Option<(f64, f64, f64)>,
    pub n_radar: usize,
    pub n_camera: usize,
    pub n_lidar: usize,
    pub n_confirmed_tracks: usize,
    /// True nearest in-path actor range (ground truth channel).
    pub true_in_path_range: Option<f64>,
    /// Designated target: true range/azimuth and rectangle separation from
    /// the ego.
    pub target_range: Option<f64>,
    pub target_azimuth: Option<f64>,
    pub target_separation: Option<f64>,
    pub target_visible_fraction: Option<f64>,
    /// Names of attacks active this tick.
    pub active_attacks: Vec<String>,
    /// Radar extra noise injected this tick, dBm.
    pub radar_extra_noise_dbm: Option<f64>,
    pub ghost_count: usize,
    /// Radar detections as (range, azimuth) pairs, for post-run analysis.
    pub radar_detections: Vec<(f64, f64)>,
}

/// Why the tick loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Crash,
    EgoStopped,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub rows: Vec<TraceRow>,
    pub termination: Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Safe,
    Crash,
    ConstraintViolated,
    StoppedTooSoon,
    ModelError,
}

impl Outcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            Outcome::Safe => "safe",
            Outcome::Crash => "crash",
            Outcome::ConstraintViolated => "constraint_violated",
            Outcome::StoppedTooSoon => "stopped_too_soon",
            Outcome::ModelError => "model_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    /// Violated constraint id and time, when outcome is ConstraintViolated.
    pub violated_constraint: Option<(String, f64)>,
    pub first_violation_time_s: Option<f64>,
    /// Minimum ego-to-target rectangle distance over the run; 0 on crash.
    pub min_separation_m: f64,
    /// Distance from the ego to the conflict point at standstill, when the
    /// scenario defines one and the ego stopped.
    pub stop_position_margin_m: Option<f64>,
    pub first_brake_time_s: Option<f64>,
}

/// Ground-truth AEB channel. Runs the same controller as the sensed channel
/// but on true in-path geometry, with closing rates differentiated from the
/// true range history exactly like the tracker differentiates its estimates.
#[derive(Debug, Clone)]
pub struct OracleController {
    cfg: AebConfig,
    lane_halfwidth: f64,
    dt: f64,
    prev_cmd: BrakeCommand,
    prev_ranges: BTreeMap<String, f64>,
}

impl OracleController {
    pub fn new(cfg: AebConfig, lane_halfwidth: f64, dt: f64) -> Self {
        Self {
            cfg,
            lane_halfwidth,
            dt,
            prev_cmd: BrakeCommand::none(),
            prev_ranges: BTreeMap::new(),
        }
    }

    /// True nearest in-path actor: ahead of the ego and inside the lane gate.
    pub fn true_mio(world: &WorldState, lane_halfwidth: f64) -> Option<(String, f64, f64)> {
        let mut best: Option<(String, f64, f64)> = None;
        for body in world.actor_bodies() {
            let (range, azimuth, closing) = relative_polar(&world.ego, body);
            let longitudinal = range * azimuth.cos();
            let lateral = range * azimuth.sin();
            if longitudinal <= 0.0 || lateral.abs() > lane_halfwidth {
                continue;
            }
            if best.as_ref().is_none_or(|(_, r, _)| range < *r) {
                best = Some((body.id.clone(), range, closing));
            }
        }
        best
    }

    pub fn decide(&mut self, world: &WorldState) -> BrakeCommand {
        let mio = Self::true_mio(world, self.lane_halfwidth).map(|(id, range, instantaneous)| {
            let closing = match self.prev_ranges.get(&id) {
                Some(prev) => (prev - range) / self.dt,
                None => instantaneous,
            };
            self.prev_ranges.insert(id, range);
            MioInput {
                range,
                closing_speed: closing,
            }
        });
        let cmd = aeb_decide(mio, world.ego_speed, &self.cfg, &self.prev_cmd);
        self.prev_cmd = cmd.clone();
        cmd
    }
}

/// One-shot oracle decision from a single snapshot, using instantaneous
/// closing rates. The in-loop channel is the stateful [`OracleController`].
pub fn oracle_decide(world: &WorldState, cfg: &AebConfig, lane_halfwidth: f64) -> BrakeCommand {
    let mio =
        OracleController::true_mio(world, lane_halfwidth).map(|(_, range, closing)| MioInput {
            range,
            closing_speed: closing,
        });
    aeb_decide(mio, world.ego_speed, cfg, &BrakeCommand::none())
}

/// SC1 check over a finished trace.
///
/// Fails at the first tick where the true nearest in-path object sits inside
/// the trigger distance and no sensed stage of Partial1 or stronger follows
/// within the latency budget. Returns the violation time on failure.
pub fn check_sc1(trace: &RunTrace, sc: &SafetyConstraint, dt: f64) -> Result<(), f64> {
    let latency_ticks = (sc.max_latency_s / dt).round() as usize;
    for (idx, row) in trace.rows.iter().enumerate() {
        // A stopped ego has nothing left to brake; the constraint concerns
        // the approach.
        let triggered = row.ego_speed > 0.0
            && matches!(row.true_in_path_range, Some(r) if r < sc.trigger_distance_m);
        if !triggered {
            continue;
        }
        let deadline = (idx + latency_ticks).min(trace.rows.len().saturating_sub(1));
        let braked = trace.rows[idx..=deadline]
            .iter()
            .any(|r| r.stage >= BrakeStage::Partial1);
        if !braked {
            return Err(row.time_s);
        }
    }
    Ok(())
}

/// Classify a terminated run.
///
/// Crash dominates; then the first failing registered constraint; then a
/// premature stop (standstill far short of the conflict point while the
/// oracle channel sees no reason to brake); otherwise safe.
pub fn classify_outcome(
    trace: &RunTrace,
    constraints: &[SafetyConstraint],
    comfort_margin_m: f64,
    conflict_margin: Option<f64>,
    dt: f64,
) -> Verdict {
    let min_separation = trace
        .rows
        .iter()
        .filter_map(|r| r.target_separation)
        .fold(f64::INFINITY, f64::min);
    let min_separation = if min_separation.is_finite() {
        min_separation
    } else {
        f64::NAN
    };
    let first_brake_time_s = trace.rows.iter().find(|r| r.decel > 0.0).map(|r| r.time_s);

    if trace.termination == Termination::Crash {
        return Verdict {
            outcome: Outcome::Crash,
            violated_constraint: None,
            first_violation_time_s: None,
            min_separation_m: 0.0,
            stop_position_margin_m: conflict_margin,
            first_brake_time_s,
        };
    }

    let mut violation: Option<(String, f64)> = None;
    for sc in constraints {
        if let Err(t) = check_sc1(trace, sc, dt) {
            if violation.as_ref().is_none_or(|(_, vt)| t < *vt) {
                violation = Some((sc.id.clone(), t));
            }
        }
    }
    if let Some((id, t)) = violation {
        return Verdict {
            outcome: Outcome::ConstraintViolated,
            violated_constraint: Some((id, t)),
            first_violation_time_s: Some(t),
            min_separation_m: min_separation,
            stop_position_margin_m: conflict_margin,
            first_brake_time_s,
        };
    }

    if trace.termination == Termination::EgoStopped {
        if let Some(margin) = conflict_margin {
            let oracle_idle = trace
                .rows
                .last()
                .map(|r| r.oracle_decel == 0.0)
                .unwrap_or(true);
            if margin > comfort_margin_m && oracle_idle {
                return Verdict {
                    outcome: Outcome::StoppedTooSoon,
                    violated_constraint: None,
                    first_violation_time_s: None,
                    min_separation_m: min_separation,
                    stop_position_margin_m: Some(margin),
                    first_brake_time_s,
                };
            }
        }
    }

    Verdict {
        outcome: Outcome::Safe,
        violated_constraint: None,
        first_violation_time_s: None,
        min_separation_m: min_separation,
        stop_position_margin_m: conflict_margin,
        first_brake_time_s,
    }
}

/// Count per-sensor detections for a trace row.
pub fn count_by_sensor(detections: &[Detection]) -> (usize, usize, usize) {
    let mut counts = (0, 0, 0);
    for d in detections {
        match d.sensor {
            crate::sensors::SensorKind::Radar => counts.0 += 1,
            crate::sensors::SensorKind::Camera => counts.1 += 1,
            crate::sensors::SensorKind::Lidar => counts.2 += 1,
        }
    }
    counts
}
