//! Sensor models producing detection lists from world state, with an
//! interference input port for the attack model.
//!
//! Three sensors are modeled: a power-budget radar with CA-CFAR detection, a
//! geometric classed camera detector, and a sector-scanning LiDAR. Each is a
//! pure transformation of an immutable world snapshot plus an explicit seeded
//! generator, so concurrent runs never share state.

mod camera;
mod radar;

pub mod lidar;

pub use camera::{camera_sense, CameraConfig};
pub use lidar::{lidar_sense, LidarConfig};
pub use radar::{
    build_power_profile, cfar_detect, cfar_threshold_factor, radar_received_power, radar_sense,
    CfarConfig, RadarConfig,
};

use crate::world::BodyKind;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Radar,
    Camera,
    Lidar,
}

impl SensorKind {
    /// Concatenation rank: radar first, then camera, then LiDAR.
    pub fn rank(self) -> u8 {
        match self {
            SensorKind::Radar => 0,
            SensorKind::Camera => 1,
            SensorKind::Lidar => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Car,
    Pedestrian,
    Cyclist,
    Unknown,
}

impl From<BodyKind> for ClassLabel {
    fn from(kind: BodyKind) -> Self {
        match kind {
            BodyKind::EgoVehicle | BodyKind::Car => ClassLabel::Car,
            BodyKind::Pedestrian => ClassLabel::Pedestrian,
            BodyKind::Cyclist => ClassLabel::Cyclist,
            BodyKind::Obstruction => ClassLabel::Unknown,
        }
    }
}

/// One sensor measurement in the ego polar frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub sensor: SensorKind,
    /// Range from the ego, meters.
    pub range: f64,
    /// Azimuth in the ego frame, radians.
    pub azimuth: f64,
    /// Closing rate, m/s, positive when approaching. Radar only.
    pub range_rate: Option<f64>,
    pub class_label: Option<ClassLabel>,
    /// Signal-to-noise ratio in dB. Radar only.
    pub snr: Option<f64>,
    /// Frame time, seconds.
    pub timestamp: f64,
}

/// A spoofed radar return scheduled by the attack model. Its power is
/// injected into the victim's range profile; if the bin fires, the emitted
/// detection carries the ghost's kinematics.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostReturn {
    /// Spoofed range, meters.
    pub range: f64,
    /// Azimuth the ghost appears at, radians.
    pub azimuth: f64,
    /// Received ghost power at the victim, dBm.
    pub power_dbm: f64,
    /// Spoofed closing rate, m/s; `None` keeps the bin's natural rate.
    pub range_rate: Option<f64>,
}

/// Per-frame interference produced by the attack model and consumed by the
/// sensors. `default()` is the identity: no attack, no effect.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Interference {
    /// Extra noise power added to the radar noise floor, dBm. `None` adds
    /// nothing (an inactive jammer contributes no power at all).
    pub radar_extra_noise_dbm: Option<f64>,
    /// Spoofed radar returns, strictly additive to the power profile.
    pub radar_ghosts: Vec<GhostReturn>,
    /// Camera classes suppressed by an adversarial patch.
    pub suppressed_classes: BTreeSet<ClassLabel>,
    /// LiDAR sectors `[lo, hi]` (ego-frame azimuth) that return nothing.
    pub blinded_sectors: Vec<(f64, f64)>,
}

impl Interference {
    pub fn is_identity(&self) -> bool {
        self.radar_extra_noise_dbm.is_none()
            && self.radar_ghosts.is_empty()
            && self.suppressed_classes.is_empty()
            && self.blinded_sectors.is_empty()
    }
}

pub(crate) fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub(crate) fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}
