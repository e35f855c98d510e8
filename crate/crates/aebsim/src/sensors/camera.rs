//! Geometric classed camera detector.
//!
//! Object detection is modeled at the detection level rather than pixel
//! level: a body inside the field of view yields a classed detection with a
//! range-dependent probability, scaled by how much of it is visible. Classes
//! suppressed by an adversarial patch are dropped for the frame.

use super::{ClassLabel, Detection, Interference, SensorKind};
use crate::world::{relative_polar, visible_fraction, WorldState};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Full field-of-view width, radians.
    pub fov_rad: f64,
    pub max_range_m: f64,
    /// Piecewise-linear detection probability over range: `(range, p)` knots,
    /// strictly increasing in range. Below the first knot the first value
    /// holds, beyond the last the last value holds.
    pub p_detect: Vec<(f64, f64)>,
    /// Minimum visible fraction for a body to be considered at all.
    pub min_visible_fraction: f64,
    /// Gaussian noise on the reported range, meters (0 = exact).
    pub range_noise_std: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            fov_rad: 60f64.to_radians(),
            max_range_m: 80.0,
            p_detect: vec![(0.0, 1.0), (50.0, 1.0), (80.0, 0.8)],
            min_visible_fraction: 0.5,
            range_noise_std: 0.0,
        }
    }
}

impl CameraConfig {
    pub fn detection_probability(&self, range: f64) -> f64 {
        if self.p_detect.is_empty() {
            return 1.0;
        }
        let first = self.p_detect[0];
        if range <= first.0 {
            return first.1;
        }
        for pair in self.p_detect.windows(2) {
            let (r0, p0) = pair[0];
            let (r1, p1) = pair[1];
            if range <= r1 {
                let t = (range - r0) / (r1 - r0);
                return p0 + t * (p1 - p0);
            }
        }
        self.p_detect.last().unwrap().1
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_range_m <= 0.0 {
            return Err("camera max_range_m must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.min_visible_fraction) {
            return Err("camera min_visible_fraction must be in [0, 1]".into());
        }
        for pair in self.p_detect.windows(2) {
            if pair[1].0 <= pair[0].0 {
                return Err("camera p_detect knots must be strictly increasing in range".into());
            }
        }
        for (_, p) in &self.p_detect {
            if !(0.0..=1.0).contains(p) {
                return Err("camera p_detect probabilities must be in [0, 1]".into());
            }
        }
        Ok(())
    }
}

/// One camera frame. Bodies outside the FOV or beyond max range never appear;
/// suppressed classes are dropped while the patch is active.
pub fn camera_sense<R: Rng>(
    world: &WorldState,
    cfg: &CameraConfig,
    interference: &Interference,
    rng: &mut R,
) -> Vec<Detection> {
    let mut out = Vec::new();
    for actor in &world.actors {
        let body = &actor.body;
        let class = ClassLabel::from(body.kind);
        if interference.suppressed_classes.contains(&class) {
            continue;
        }
        let (range, azimuth, _) = relative_polar(&world.ego, body);
        if range > cfg.max_range_m || azimuth.abs() > cfg.fov_rad / 2.0 {
            continue;
        }
        let occluders: Vec<&crate::world::Body> =
            world.actor_bodies().filter(|b| b.id != body.id).collect();
        let vf = visible_fraction(&world.ego.pose, body, &occluders);
        if vf < cfg.min_visible_fraction {
            continue;
        }
        let p = cfg.detection_probability(range) * vf;
        let detected = p >= 1.0 || rng.gen::<f64>() < p;
        if !detected {
            continue;
        }
        let meas_range = if cfg.range_noise_std > 0.0 {
            use rand_distr::Distribution;
            let noise = rand_distr::Normal::new(0.0, cfg.range_noise_std).unwrap();
            (range + noise.sample(rng)).max(0.0)
        } else {
            range
        };
        out.push(Detection {
            sensor: SensorKind::Camera,
            range: meas_range,
            azimuth,
            range_rate: None,
            class_label: Some(class),
            snr: None,
            timestamp: world.time,
        });
    }
    out
}
