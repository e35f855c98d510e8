//! Attack model: converts scheduled attack specs plus world geometry into
//! the per-frame interference consumed by the sensors.
//!
//! Five attack kinds are supported. Denial jamming raises the victim radar's
//! noise floor through a one-way link budget; range and velocity deception
//! inject ghost returns; an adversarial patch suppresses camera classes while
//! the patch is in view; LiDAR blinding erases a sector. With no active
//! attack the compiled interference is the identity, so an attack-free run is
//! indistinguishable from one without the attack model installed.

use crate::geometry::{wrap_angle, Pose2};
use crate::sensors::{
    dbm_to_mw, mw_to_dbm, CameraConfig, ClassLabel, GhostReturn, Interference, RadarConfig,
};
use crate::world::{relative_polar, WorldState};
use serde::{Deserialize, Serialize};

/// Where the attacker sits. `World` is a fixed point; `EgoRelative` keeps a
/// constant offset from the ego (an attacker vehicle holding its standoff),
/// which is what the bundled jamming sweeps vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackerFrame {
    World,
    EgoRelative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerPosition {
    pub frame: AttackerFrame,
    pub x: f64,
    pub y: f64,
}

impl AttackerPosition {
    /// World-frame position at the current ego pose.
    pub fn resolve(&self, ego: &Pose2) -> (f64, f64) {
        match self.frame {
            AttackerFrame::World => (self.x, self.y),
            AttackerFrame::EgoRelative => (ego.x + self.x, ego.y + self.y),
        }
    }
}

/// Closed activity window in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveWindow(pub f64, pub f64);

impl Default for ActiveWindow {
    fn default() -> Self {
        ActiveWindow(0.0, f64::MAX)
    }
}

impl ActiveWindow {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.0 && t <= self.1
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.0 > self.1 || self.0.is_nan() || self.1.is_nan() {
            return Err("active window start must not exceed its end".into());
        }
        Ok(())
    }
}

/// One scheduled attack. Exactly the fields relevant to each kind exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    /// Barrage jamming that raises the victim radar's noise floor.
    RadarDenialJamming {
        attacker: AttackerPosition,
        tx_power_dbm: f64,
        antenna_gain_dbi: f64,
        #[serde(default)]
        active_window_s: ActiveWindow,
    },
    /// Ghost return displaced from the true most-important object.
    RadarRangeDeception {
        attacker: AttackerPosition,
        tx_power_dbm: f64,
        antenna_gain_dbi: f64,
        spoof_range_offset_m: f64,
        #[serde(default)]
        active_window_s: ActiveWindow,
    },
    /// Ghost return at the true range with a spoofed closing rate.
    RadarVelocityDeception {
        attacker: AttackerPosition,
        tx_power_dbm: f64,
        antenna_gain_dbi: f64,
        spoof_velocity_mps: f64,
        #[serde(default)]
        active_window_s: ActiveWindow,
    },
    /// Patch that suppresses camera classes while it is inside the camera FOV.
    CameraAdversarialPatch {
        attacker: AttackerPosition,
        patch_classes: Vec<ClassLabel>,
        #[serde(default)]
        active_window_s: ActiveWindow,
    },
    /// Blinds a LiDAR azimuth sector `[lo, hi]` in the ego frame.
    LidarBlinding {
        sector_rad: (f64, f64),
        #[serde(default)]
        active_window_s: ActiveWindow,
    },
}

impl AttackSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AttackSpec::RadarDenialJamming { .. } => "radar_denial_jamming",
            AttackSpec::RadarRangeDeception { .. } => "radar_range_deception",
            AttackSpec::RadarVelocityDeception { .. } => "radar_velocity_deception",
            AttackSpec::CameraAdversarialPatch { .. } => "camera_adversarial_patch",
            AttackSpec::LidarBlinding { .. } => "lidar_blinding",
        }
    }

    pub fn active_window(&self) -> &ActiveWindow {
        match self {
            AttackSpec::RadarDenialJamming {
                active_window_s, ..
            }
            | AttackSpec::RadarRangeDeception {
                active_window_s, ..
            }
            | AttackSpec::RadarVelocityDeception {
                active_window_s, ..
            }
            | AttackSpec::CameraAdversarialPatch {
                active_window_s, ..
            }
            | AttackSpec::LidarBlinding {
                active_window_s, ..
            } => active_window_s,
        }
    }

    pub fn is_active(&self, t: f64) -> bool {
        self.active_window().contains(t)
    }

    /// Which sensor this attack needs on the victim.
    pub fn target_sensor(&self) -> crate::sensors::SensorKind {
        match self {
            AttackSpec::RadarDenialJamming { .. }
            | AttackSpec::RadarRangeDeception { .. }
            | AttackSpec::RadarVelocityDeception { .. } => crate::sensors::SensorKind::Radar,
            AttackSpec::CameraAdversarialPatch { .. } => crate::sensors::SensorKind::Camera,
            AttackSpec::LidarBlinding { .. } => crate::sensors::SensorKind::Lidar,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        self.active_window().validate()?;
        match self {
            AttackSpec::RadarDenialJamming { tx_power_dbm, .. }
            | AttackSpec::RadarRangeDeception { tx_power_dbm, .. }
            | AttackSpec::RadarVelocityDeception { tx_power_dbm, .. } => {
                if !tx_power_dbm.is_finite() {
                    return Err("attack tx_power_dbm must be finite".into());
                }
            }
            AttackSpec::CameraAdversarialPatch { patch_classes, .. } => {
                if patch_classes.is_empty() {
                    return Err("camera patch needs at least one class".into());
                }
            }
            AttackSpec::LidarBlinding { sector_rad, .. } => {
                if sector_rad.0 > sector_rad.1 || sector_rad.0.is_nan() || sector_rad.1.is_nan() {
                    return Err("lidar blinding sector must be ordered [lo, hi]".into());
                }
            }
        }
        Ok(())
    }
}

/// One-way jammer-to-victim link budget, dBm:
/// `Pj + Gj + Gr + 10·log10(λ² / ((4π)² d²))`.
///
/// Distances clamp to 0.5 m. The victim's antenna gain and wavelength come
/// from its radar config.
pub fn jammer_power_at_receiver(
    tx_power_dbm: f64,
    antenna_gain_dbi: f64,
    attacker_xy: (f64, f64),
    ego: &Pose2,
    cfg: &RadarConfig,
) -> f64 {
    let d = (attacker_xy.0 - ego.x)
        .hypot(attacker_xy.1 - ego.y)
        .max(0.5);
    let lambda = cfg.wavelength_m;
    let four_pi = 4.0 * std::f64::consts::PI;
    tx_power_dbm
        + antenna_gain_dbi
        + cfg.antenna_gain_dbi
        + 10.0 * (lambda * lambda / (four_pi * four_pi * d * d)).log10()
}

/// True most-important object from ground truth: nearest in-path actor ahead
/// of the ego. Deception ghosts anchor to it.
fn true_mio(world: &WorldState, lane_halfwidth: f64) -> Option<(f64, f64, f64)> {
    let mut best: Option<(f64, f64, f64)> = None;
    for body in world.actor_bodies() {
        let (range, azimuth, closing) = relative_polar(&world.ego, body);
        let longitudinal = range * azimuth.cos();
        let lateral = range * azimuth.sin();
        if longitudinal <= 0.0 || lateral.abs() > lane_halfwidth {
            continue;
        }
        if best.is_none_or(|(r, _, _)| range < r) {
            best = Some((range, azimuth, closing));
        }
    }
    best
}

/// Compile every active attack at `world.time` into one interference frame.
///
/// Multiple jammers sum in linear power. Deception ghosts carry the one-way
/// link budget as their injected power. The patch only acts while its carrier
/// geometry is inside the camera FOV. Ghosts never touch true returns; they
/// are additive inputs to the radar profile.
pub fn compile_interference(
    specs: &[AttackSpec],
    world: &WorldState,
    radar_cfg: Option<&RadarConfig>,
    camera_cfg: Option<&CameraConfig>,
    lane_halfwidth: f64,
) -> Interference {
    let mut out = Interference::default();
    let mut jam_mw = 0.0f64;
    let t = world.time;

    for spec in specs {
        if !spec.is_active(t) {
            continue;
        }
        match spec {
            AttackSpec::RadarDenialJamming {
                attacker,
                tx_power_dbm,
                antenna_gain_dbi,
                ..
            } => {
                if let Some(cfg) = radar_cfg {
                    let xy = attacker.resolve(&world.ego.pose);
                    let p = jammer_power_at_receiver(
                        *tx_power_dbm,
                        *antenna_gain_dbi,
                        xy,
                        &world.ego.pose,
                        cfg,
                    );
                    jam_mw += dbm_to_mw(p);
                }
            }
            AttackSpec::RadarRangeDeception {
                attacker,
                tx_power_dbm,
                antenna_gain_dbi,
                spoof_range_offset_m,
                ..
            } => {
                if let Some(cfg) = radar_cfg {
                    if let Some((range, azimuth, _)) = true_mio(world, lane_halfwidth) {
                        let xy = attacker.resolve(&world.ego.pose);
                        let p = jammer_power_at_receiver(
                            *tx_power_dbm,
                            *antenna_gain_dbi,
                            xy,
                            &world.ego.pose,
                            cfg,
                        );
                        let spoofed = range + spoof_range_offset_m;
                        if spoofed >= 0.0 && spoofed < cfg.max_range_m {
                            out.radar_ghosts.push(GhostReturn {
                                range: spoofed,
                                azimuth,
                                power_dbm: p,
                                range_rate: None,
                            });
                        }
                    }
                }
            }
            AttackSpec::RadarVelocityDeception {
                attacker,
                tx_power_dbm,
                antenna_gain_dbi,
                spoof_velocity_mps,
                ..
            } => {
                if let Some(cfg) = radar_cfg {
                    if let Some((range, azimuth, _)) = true_mio(world, lane_halfwidth) {
                        let xy = attacker.resolve(&world.ego.pose);
                        let p = jammer_power_at_receiver(
                            *tx_power_dbm,
                            *antenna_gain_dbi,
                            xy,
                            &world.ego.pose,
                            cfg,
                        );
                        out.radar_ghosts.push(GhostReturn {
                            range,
                            azimuth,
                            power_dbm: p,
                            range_rate: Some(*spoof_velocity_mps),
                        });
                    }
                }
            }
            AttackSpec::CameraAdversarialPatch {
                attacker,
                patch_classes,
                ..
            } => {
                if let Some(cfg) = camera_cfg {
                    let (px, py) = attacker.resolve(&world.ego.pose);
                    let azimuth = wrap_angle(
                        (py - world.ego.pose.y).atan2(px - world.ego.pose.x)
                            - world.ego.pose.heading,
                    );
                    let range = (px - world.ego.pose.x).hypot(py - world.ego.pose.y);
                    if azimuth.abs() <= cfg.fov_rad / 2.0 && range <= cfg.max_range_m {
                        out.suppressed_classes.extend(patch_classes.iter().copied());
                    }
                }
            }
            AttackSpec::LidarBlinding { sector_rad, .. } => {
                out.blinded_sectors.push(*sector_rad);
            }
        }
    }

    if jam_mw > 0.0 {
        out.radar_extra_noise_dbm = Some(mw_to_dbm(jam_mw));
    }
    out
}
