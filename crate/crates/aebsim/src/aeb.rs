//! Staged AEB controller: computes time-to-collision from the most-important
//! object and escalates through FCW / partial / full braking stages.
//!
//! Stage `s` engages when TTC falls below `multiplier_s * stopping_time` (plus
//! the driver reaction time for the warning stage, which brakes nothing by
//! itself). Stages only escalate while an MIO is present, and full braking
//! latches until the ego stands still so that a momentary track loss cannot
//! release an emergency stop.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrakeStage {
    None,
    Fcw,
    Partial1,
    Partial2,
    Full,
}

impl BrakeStage {
    pub fn as_str(self) -> &'static str {
        match self {
            BrakeStage::None => "none",
            BrakeStage::Fcw => "fcw",
            BrakeStage::Partial1 => "partial1",
            BrakeStage::Partial2 => "partial2",
            BrakeStage::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrakeCommand {
    pub stage: BrakeStage,
    /// Commanded deceleration, m/s². Zero for `None` and `Fcw`.
    pub decel: f64,
}

impl BrakeCommand {
    pub fn none() -> Self {
        Self {
            stage: BrakeStage::None,
            decel: 0.0,
        }
    }

    pub fn is_braking(&self) -> bool {
        self.decel > 0.0
    }
}

/// Stage threshold multipliers applied to the per-stage stopping time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageMultipliers {
    pub fcw: f64,
    pub partial1: f64,
    pub partial2: f64,
    pub full: f64,
}

impl Default for StageMultipliers {
    fn default() -> Self {
        Self {
            fcw: 1.2,
            partial1: 1.0,
            partial2: 0.8,
            full: 0.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AebConfig {
    pub enabled: bool,
    /// Assumed driver reaction time added to the FCW threshold, seconds.
    pub fcw_reaction_time_s: f64,
    pub partial1_decel: f64,
    pub partial2_decel: f64,
    pub full_decel: f64,
    /// Desired standstill offset from the obstacle, meters. Carried in the
    /// scenario schema for downstream analysis; the staged TTC thresholds do
    /// not consume it.
    pub headway_offset_m: f64,
    pub stage_multipliers: StageMultipliers,
}

impl Default for AebConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            fcw_reaction_time_s: 1.2,
            partial1_decel: 3.8,
            partial2_decel: 5.3,
            full_decel: 9.8,
            headway_offset_m: 3.7,
            stage_multipliers: StageMultipliers::default(),
        }
    }
}

impl AebConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.partial1_decel > 0.0
            && self.partial1_decel <= self.partial2_decel
            && self.partial2_decel <= self.full_decel)
        {
            return Err("require 0 < partial1_decel <= partial2_decel <= full_decel".into());
        }
        let m = &self.stage_multipliers;
        if !(m.fcw > m.partial1 && m.partial1 > m.partial2 && m.partial2 > m.full && m.full > 0.0) {
            return Err("stage multipliers must be strictly decreasing and positive".into());
        }
        if self.fcw_reaction_time_s < 0.0 {
            return Err("fcw_reaction_time_s must be non-negative".into());
        }
        Ok(())
    }
}

/// Most-important-object summary handed to the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MioInput {
    /// Range to the object, meters.
    pub range: f64,
    /// Closing speed, m/s, positive when approaching.
    pub closing_speed: f64,
}

/// Time to collision: `range / closing_speed` when closing, otherwise none.
pub fn compute_ttc(range: f64, closing_speed: f64) -> Option<f64> {
    if closing_speed > 0.0 {
        Some(range / closing_speed)
    } else {
        None
    }
}

/// Time to reach standstill from `ego_speed` under constant `decel`.
pub fn stopping_time(ego_speed: f64, decel: f64) -> f64 {
    assert!(decel > 0.0, "decel must be positive");
    ego_speed / decel
}

fn stage_from_ttc(ttc: Option<f64>, ego_speed: f64, cfg: &AebConfig) -> BrakeStage {
    let Some(ttc) = ttc else {
        return BrakeStage::None;
    };
    let m = &cfg.stage_multipliers;
    if ttc < m.full * stopping_time(ego_speed, cfg.full_decel) {
        BrakeStage::Full
    } else if ttc < m.partial2 * stopping_time(ego_speed, cfg.partial2_decel) {
        BrakeStage::Partial2
    } else if ttc < m.partial1 * stopping_time(ego_speed, cfg.partial1_decel) {
        BrakeStage::Partial1
    } else if ttc < m.fcw * stopping_time(ego_speed, cfg.partial1_decel) + cfg.fcw_reaction_time_s {
        // The warning threshold assumes the driver responds with the first
        // partial-brake level after the reaction time.
        BrakeStage::Fcw
    } else {
        BrakeStage::None
    }
}

fn command_for(stage: BrakeStage, cfg: &AebConfig) -> BrakeCommand {
    let decel = match stage {
        BrakeStage::None | BrakeStage::Fcw => 0.0,
        BrakeStage::Partial1 => cfg.partial1_decel,
        BrakeStage::Partial2 => cfg.partial2_decel,
        BrakeStage::Full => cfg.full_decel,
    };
    BrakeCommand { stage, decel }
}

/// One controller decision.
///
/// With an MIO present the stage is the stronger of the TTC-derived stage and
/// the previous one (monotone escalation within an approach). Losing the MIO
/// releases everything except an engaged full brake, which persists until the
/// ego has stopped.
pub fn aeb_decide(
    mio: Option<MioInput>,
    ego_speed: f64,
    cfg: &AebConfig,
    prev: &BrakeCommand,
) -> BrakeCommand {
    if prev.stage == BrakeStage::Full && ego_speed > 0.0 {
        return command_for(BrakeStage::Full, cfg);
    }
    if ego_speed <= 0.0 {
        return BrakeCommand::none();
    }
    match mio {
        None => BrakeCommand::none(),
        Some(m) => {
            let ttc = compute_ttc(m.range, m.closing_speed);
            let stage = stage_from_ttc(ttc, ego_speed, cfg).max(prev.stage);
            command_for(stage, cfg)
        }
    }
}
