//! Sector-scanning LiDAR: a ray sweep across the field of view where each
//! ray returns the first rectangle it hits. Rays inside a blinded sector
//! return nothing. Adjacent returns cluster into detections.

use super::{ClassLabel, Detection, Interference, SensorKind};
use crate::geometry::Point2;
use crate::world::WorldState;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    /// Full field-of-view width, radians.
    pub fov_rad: f64,
    /// Angular spacing between rays, radians.
    pub angular_resolution_rad: f64,
    pub max_range_m: f64,
    /// Range step between adjacent rays above which a cluster splits, meters.
    pub cluster_range_gap_m: f64,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            fov_rad: 120f64.to_radians(),
            angular_resolution_rad: 0.5f64.to_radians(),
            max_range_m: 60.0,
            cluster_range_gap_m: 1.5,
        }
    }
}

impl LidarConfig {
    pub fn num_rays(&self) -> usize {
        (self.fov_rad / self.angular_resolution_rad).floor() as usize + 1
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_range_m <= 0.0 {
            return Err("lidar max_range_m must be positive".into());
        }
        if self.angular_resolution_rad <= 0.0 || self.angular_resolution_rad > self.fov_rad {
            return Err("lidar angular_resolution_rad must be in (0, fov]".into());
        }
        Ok(())
    }
}

fn in_blinded_sector(azimuth: f64, sectors: &[(f64, f64)]) -> bool {
    sectors
        .iter()
        .any(|&(lo, hi)| azimuth >= lo && azimuth <= hi)
}

/// One LiDAR sweep. Returns cluster centroids (range and azimuth averaged
/// over the member rays) with class `Unknown`.
pub fn lidar_sense(
    world: &WorldState,
    cfg: &LidarConfig,
    interference: &Interference,
) -> Vec<Detection> {
    let origin = Point2::new(world.ego.pose.x, world.ego.pose.y);
    let half = cfg.fov_rad / 2.0;
    let n = cfg.num_rays();

    // Ray returns: (azimuth, range) or None.
    let returns: Vec<Option<(f64, f64)>> = (0..n)
        .map(|k| {
            let azimuth = -half + k as f64 * cfg.angular_resolution_rad;
            if in_blinded_sector(azimuth, &interference.blinded_sectors) {
                return None;
            }
            let world_angle = world.ego.pose.heading + azimuth;
            let dir = (world_angle.cos(), world_angle.sin());
            let mut nearest = f64::INFINITY;
            for body in world.actor_bodies() {
                if let Some(d) = body.rect().ray_entry_distance(origin, dir) {
                    if d < nearest {
                        nearest = d;
                    }
                }
            }
            if nearest.is_finite() && nearest <= cfg.max_range_m {
                Some((azimuth, nearest))
            } else {
                None
            }
        })
        .collect();

    // Cluster adjacent rays; a gap ray or a large range jump splits.
    let mut clusters: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    let mut last_range: Option<f64> = None;
    for ret in returns {
        match ret {
            Some((az, r)) => {
                let split = match last_range {
                    Some(prev) => (r - prev).abs() > cfg.cluster_range_gap_m,
                    None => false,
                };
                if split && !current.is_empty() {
                    clusters.push(std::mem::take(&mut current));
                }
                current.push((az, r));
                last_range = Some(r);
            }
            None => {
                if !current.is_empty() {
                    clusters.push(std::mem::take(&mut current));
                }
                last_range = None;
            }
        }
    }
    if !current.is_empty() {
        clusters.push(current);
    }

    clusters
        .into_iter()
        .map(|members| {
            let m = members.len() as f64;
            let azimuth = members.iter().map(|(a, _)| a).sum::<f64>() / m;
            let range = members.iter().map(|(_, r)| r).sum::<f64>() / m;
            Detection {
                sensor: SensorKind::Lidar,
                range,
                azimuth,
                range_rate: None,
                class_label: Some(ClassLabel::Unknown),
                snr: None,
                timestamp: world.time,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aeb::BrakeCommand;
    use crate::geometry::Pose2;
    use crate::world::{Actor, Body, BodyKind, Script, WorldState};

    fn world_with(actors: Vec<Actor>) -> WorldState {
        WorldState {
            time: 0.0,
            ego: Body {
                id: "ego".into(),
                kind: BodyKind::EgoVehicle,
                pose: Pose2::new(0.0, 0.0, 0.0),
                velocity: (0.0, 0.0),
                length: 4.5,
                width: 1.8,
                radar_cross_section: 10.0,
            },
            ego_speed: 0.0,
            actors,
            ego_command: BrakeCommand::none(),
        }
    }

    fn boxy(id: &str, x: f64, y: f64, l: f64, w: f64) -> Actor {
        let body = Body {
            id: id.into(),
            kind: BodyKind::Car,
            pose: Pose2::new(x, y, 0.0),
            velocity: (0.0, 0.0),
            length: l,
            width: w,
            radar_cross_section: 10.0,
        };
        Actor {
            start_pose: body.pose,
            body,
            script: Script::Static,
        }
    }

    #[test]
    fn single_body_one_cluster_at_face_range() {
        let cfg = LidarConfig::default();
        let w = world_with(vec![boxy("car", 20.0, 0.0, 4.0, 2.0)]);
        let dets = lidar_sense(&w, &cfg, &Interference::default());
        assert_eq!(dets.len(), 1);
        // Near face is at x = 18; the centroid sits just past it because
        // oblique rays enter slightly deeper.
        assert!(
            (dets[0].range - 18.0).abs() < 0.2,
            "range {}",
            dets[0].range
        );
        assert_eq!(dets[0].class_label, Some(ClassLabel::Unknown));
    }

    #[test]
    fn blinded_sector_erases_body() {
        let cfg = LidarConfig::default();
        let w = world_with(vec![boxy("car", 20.0, 0.0, 4.0, 2.0)]);
        let jam = Interference {
            blinded_sectors: vec![(-0.3, 0.3)],
            ..Default::default()
        };
        let dets = lidar_sense(&w, &cfg, &jam);
        assert!(dets.is_empty());
    }

    #[test]
    fn two_separated_bodies_two_clusters() {
        let cfg = LidarConfig::default();
        let w = world_with(vec![
            boxy("a", 20.0, -4.0, 2.0, 2.0),
            boxy("b", 20.0, 4.0, 2.0, 2.0),
        ]);
        let dets = lidar_sense(&w, &cfg, &Interference::default());
        assert_eq!(dets.len(), 2);
        assert!(dets[0].azimuth < 0.0 && dets[1].azimuth > 0.0);
    }

    #[test]
    fn occlusion_is_physical() {
        let cfg = LidarConfig::default();
        // The wall hides the car behind it; only one cluster at the wall.
        let w = world_with(vec![
            boxy("wall", 10.0, 0.0, 1.0, 8.0),
            boxy("car", 25.0, 0.0, 4.0, 2.0),
        ]);
        let dets = lidar_sense(&w, &cfg, &Interference::default());
        assert_eq!(dets.len(), 1);
        assert!(dets[0].range < 12.0);
    }

    #[test]
    fn beyond_max_range_silent() {
        let cfg = LidarConfig::default();
        let w = world_with(vec![boxy("far", 100.0, 0.0, 4.0, 2.0)]);
        assert!(lidar_sense(&w, &cfg, &Interference::default()).is_empty());
    }

    #[test]
    fn ray_cast_oracle_agreement() {
        // Independent oracle: dense point sampling along each ray, compared
        // against the slab-test ray cast per ray.
        let cfg = LidarConfig {
            angular_resolution_rad: 2f64.to_radians(),
            ..Default::default()
        };
        let actors = vec![
            boxy("a", 15.0, -3.0, 3.0, 2.0),
            boxy("b", 22.0, 5.0, 3.0, 2.0),
        ];
        let w = world_with(actors.clone());

        let half = cfg.fov_rad / 2.0;
        for k in 0..cfg.num_rays() {
            let az = -half + k as f64 * cfg.angular_resolution_rad;
            let dir = (az.cos(), az.sin());

            // Implementation path.
            let impl_range = actors
                .iter()
                .filter_map(|a| a.body.rect().ray_entry_distance(Point2::new(0.0, 0.0), dir))
                .fold(f64::INFINITY, f64::min);

            // Oracle: walk the ray in 1 cm steps.
            let mut oracle_range = f64::INFINITY;
            let mut step = 0.01;
            while step <= cfg.max_range_m {
                let p = Point2::new(dir.0 * step, dir.1 * step);
                if actors.iter().any(|a| a.body.rect().contains(p)) {
                    oracle_range = step;
                    break;
                }
                step += 0.01;
            }

            match (impl_range.is_finite(), oracle_range.is_finite()) {
                (true, true) => assert!(
                    (impl_range - oracle_range).abs() < 0.02,
                    "ray {k}: impl {impl_range} vs oracle {oracle_range}"
                ),
                (a, b) => assert_eq!(a, b, "ray {k}: hit disagreement"),
            }
        }

        // And the full sweep still separates the two bodies.
        let dets = lidar_sense(&w, &cfg, &Interference::default());
        assert!(dets.len() >= 2);
        assert!(dets.iter().any(|d| d.azimuth < 0.0));
        assert!(dets.iter().any(|d| d.azimuth > 0.0));
    }
}
