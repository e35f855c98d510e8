//! Deterministic closed-loop simulator and analysis toolkit for evaluating
//! an AEB-equipped vehicle under sensor attacks.
//!
//! The crate is organized around a fixed pipeline per simulation tick:
//! scheduled attacks compile into sensor interference, the radar/camera/
//! LiDAR models sense the world, detections concatenate into one list, an
//! M-of-N tracker confirms objects and selects the most-important one, the
//! staged AEB controller decides, and the plant steps. A ground-truth oracle
//! channel runs the same controller on true positions and velocities, and
//! monitors turn the finished trace into a safety verdict.
//!
//! Scenario generation starts one level higher: a declarative hazard
//! analysis enumerates unsafe control actions, expands them into hazard
//! scenarios, links a sensor-attack catalog, and concretizes the resulting
//! templates into runnable scenario files and parameter sweeps.

pub mod aeb;
pub mod attacks;
pub mod fusion;
pub mod geometry;
pub mod monitors;
pub mod report;
pub mod runner;
pub mod scenarios;
pub mod sensors;
pub mod stpa;
pub mod world;

pub use aeb::{aeb_decide, compute_ttc, stopping_time, AebConfig, BrakeCommand, BrakeStage};
pub use attacks::{compile_interference, jammer_power_at_receiver, AttackSpec};
pub use fusion::{concatenate_detections, Tracker, TrackerConfig};
pub use monitors::{check_sc1, classify_outcome, oracle_decide, Outcome, RunTrace, Verdict};
pub use runner::{run_once, run_sweep, SweepResult};
pub use scenarios::{load_scenario, load_sweep, Scenario, SweepGrid};
pub use sensors::{Detection, Interference};
pub use world::{bodies_overlap, step_world, visible_fraction, WorldState};

/// Bundled fixture documents, embedded so the library and CLI can run the
/// reference experiments without external files.
pub mod fixtures {
    pub const CPNO: &str = include_str!("../fixtures/cpno.json");
    pub const CPNO_JAM_RADAR_ONLY: &str = include_str!("../fixtures/cpno_jam_radar_only.json");
    pub const CPNO_JAM_CONCAT: &str = include_str!("../fixtures/cpno_jam_concat.json");
    pub const CCRS: &str = include_str!("../fixtures/ccrs.json");
    pub const CCRM: &str = include_str!("../fixtures/ccrm.json");
    pub const CCRS_IDEAL: &str = include_str!("../fixtures/ccrs_ideal.json");
    pub const JAMMING_SWEEP: &str = include_str!("../fixtures/jamming_sweep.json");
    pub const JAMMING_SWEEP_FALSE_ALARM: &str =
        include_str!("../fixtures/jamming_sweep_false_alarm.json");
    pub const STPA_MODEL: &str = include_str!("../fixtures/stpa_model.json");
    pub const ATTACK_CATALOG: &str = include_str!("../fixtures/attack_catalog.json");
}
