//! Planar kinematic world: ego longitudinal dynamics, scripted actor
//! trajectories, occlusion geometry and crash detection support.
//!
//! The world is 2D plan-view. The ego drives along +x in a straight lane;
//! lateral ego dynamics are frozen. One step advances time by a fixed `dt`,
//! integrates the ego with trapezoidal position updates, and moves scripted
//! actors along their closed-form trajectories.

use crate::aeb::BrakeCommand;
use crate::geometry::{Point2, Pose2, Rect};
use serde::{Deserialize, Serialize};

/// Simulation tick length in seconds (20 Hz, equal to the sensor frame period).
pub const DEFAULT_DT: f64 = 0.05;

/// Number of sample points on a target's near face for occlusion tests.
pub const VISIBILITY_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    EgoVehicle,
    Car,
    Pedestrian,
    Cyclist,
    Obstruction,
}

/// Closed-form motion script for non-ego actors. Positions are computed from
/// the scenario start pose and the current time, never integrated, so actor
/// trajectories are exact and deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Script {
    /// Never moves.
    Static,
    /// Constant velocity from t = 0.
    Linear { vx: f64, vy: f64 },
    /// Stands still until `start_s`, then moves at constant velocity.
    Delayed { start_s: f64, vx: f64, vy: f64 },
}

impl Script {
    /// Displacement from the start pose at time `t`.
    pub fn displacement(&self, t: f64) -> (f64, f64) {
        match *self {
            Script::Static => (0.0, 0.0),
            Script::Linear { vx, vy } => (vx * t, vy * t),
            Script::Delayed { start_s, vx, vy } => {
                let dt = (t - start_s).max(0.0);
                (vx * dt, vy * dt)
            }
        }
    }

    /// Velocity at time `t`.
    pub fn velocity(&self, t: f64) -> (f64, f64) {
        match *self {
            Script::Static => (0.0, 0.0),
            Script::Linear { vx, vy } => (vx, vy),
            Script::Delayed { start_s, vx, vy } => {
                if t >= start_s {
                    (vx, vy)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }
}

pub type BodyId = String;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Body {
    pub id: BodyId,
    pub kind: BodyKind,
    pub pose: Pose2,
    /// World-frame velocity in m/s.
    pub velocity: (f64, f64),
    /// Full body length along heading, meters.
    pub length: f64,
    /// Full body width, meters.
    pub width: f64,
    /// Radar cross section, m².
    pub radar_cross_section: f64,
}

impl Body {
    pub fn rect(&self) -> Rect {
        Rect::new(self.pose, self.length, self.width)
    }

    pub fn speed(&self) -> f64 {
        self.velocity.0.hypot(self.velocity.1)
    }

    pub fn is_valid(&self) -> bool {
        self.pose.is_finite()
            && self.velocity.0.is_finite()
            && self.velocity.1.is_finite()
            && self.length > 0.0
            && self.width > 0.0
            && self.radar_cross_section >= 0.0
    }
}

/// A non-ego actor: its body plus the script that drives it. The body pose
/// holds the *current* state; `start_pose` anchors the script.
#[derive(Debug, Clone, PartialEq)]
pub struct Actor {
    pub body: Body,
    pub start_pose: Pose2,
    pub script: Script,
}

/// Immutable snapshot of the world at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub time: f64,
    pub ego: Body,
    /// Ego forward speed (m/s); the ego moves along +x only.
    pub ego_speed: f64,
    pub actors: Vec<Actor>,
    pub ego_command: BrakeCommand,
}

#[derive(Debug, thiserror::Error)]
#[error("non-finite world state at t = {time}: {what}")]
pub struct ModelError {
    pub time: f64,
    pub what: String,
}

impl WorldState {
    pub fn bodies(&self) -> impl Iterator<Item = &Body> {
        std::iter::once(&self.ego).chain(self.actors.iter().map(|a| &a.body))
    }

    pub fn actor_bodies(&self) -> impl Iterator<Item = &Body> {
        self.actors.iter().map(|a| &a.body)
    }

    pub fn body(&self, id: &str) -> Option<&Body> {
        self.bodies().find(|b| b.id == id)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.time.is_finite() || !self.ego_speed.is_finite() {
            return Err(ModelError {
                time: self.time,
                what: "time or ego speed".into(),
            });
        }
        for b in self.bodies() {
            if !b.is_valid() {
                return Err(ModelError {
                    time: self.time,
                    what: format!("body '{}'", b.id),
                });
            }
        }
        Ok(())
    }
}

/// Advance the world by `dt` seconds under the given brake command.
///
/// The ego decelerates by `cmd.decel` (never below zero speed) and its
/// position advances by the trapezoidal rule, which integrates the piecewise
/// linear speed profile exactly. Scripted actors are placed from their
/// closed-form trajectories at the new time.
pub fn step_world(
    state: &WorldState,
    dt: f64,
    cmd: &BrakeCommand,
) -> Result<WorldState, ModelError> {
    assert!(dt > 0.0, "dt must be positive");
    state.validate()?;

    let t_next = state.time + dt;
    let v0 = state.ego_speed;
    let v1 = (v0 - cmd.decel * dt).max(0.0);
    // Trapezoid is exact for linear v(t). When the speed crosses zero
    // mid-step the profile is linear-then-zero, and the exact distance of
    // that fragment is v0²/(2a); a plain clamped trapezoid would overshoot
    // short stops by up to a·dt²/8.
    let dx = if v1 == 0.0 && v0 > 0.0 && cmd.decel > 0.0 {
        v0 * v0 / (2.0 * cmd.decel)
    } else {
        0.5 * (v0 + v1) * dt
    };

    let mut ego = state.ego.clone();
    ego.pose.x += dx;
    ego.velocity = (v1, 0.0);

    let actors = state
        .actors
        .iter()
        .map(|a| {
            let (ox, oy) = a.script.displacement(t_next);
            let mut body = a.body.clone();
            body.pose.x = a.start_pose.x + ox;
            body.pose.y = a.start_pose.y + oy;
            body.velocity = a.script.velocity(t_next);
            Actor {
                body,
                start_pose: a.start_pose,
                script: a.script,
            }
        })
        .collect();

    let next = WorldState {
        time: t_next,
        ego,
        ego_speed: v1,
        actors,
        ego_command: cmd.clone(),
    };
    next.validate()?;
    Ok(next)
}

/// Fraction of the target's near face visible from `observer`, in [0, 1].
///
/// Samples `VISIBILITY_SAMPLES` evenly spaced points on the face of the
/// target rectangle closest to the observer and casts a sight segment to
/// each; a point counts as visible when the segment crosses no occluder.
/// A degenerate zero-extent target collapses to a single sample point.
pub fn visible_fraction(observer: &Pose2, target: &Body, occluders: &[&Body]) -> f64 {
    let eye = Point2::new(observer.x, observer.y);
    let samples = near_face_samples(target, eye);
    let n = samples.len();
    let mut visible = 0usize;
    'sample: for p in samples {
        for occ in occluders {
            if occ.id == target.id {
                continue;
            }
            if occ.rect().intersects_segment(eye, p) {
                continue 'sample;
            }
        }
        visible += 1;
    }
    visible as f64 / n as f64
}

fn near_face_samples(target: &Body, eye: Point2) -> Vec<Point2> {
    if target.length <= 0.0 && target.width <= 0.0 {
        return vec![Point2::new(target.pose.x, target.pose.y)];
    }
    let corners = target.rect().corners();
    // Pick the edge whose midpoint is closest to the observer.
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for i in 0..4 {
        let a = corners[i];
        let b = corners[(i + 1) % 4];
        let mid = Point2::new((a.x + b.x) / 2.0, (a.y + b.y) / 2.0);
        let d = eye.distance_to(mid);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    let a = corners[best];
    let b = corners[(best + 1) % 4];
    (0..VISIBILITY_SAMPLES)
        .map(|k| {
            let t = if VISIBILITY_SAMPLES == 1 {
                0.5
            } else {
                k as f64 / (VISIBILITY_SAMPLES - 1) as f64
            };
            Point2::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y))
        })
        .collect()
}

/// Closed rectangle intersection: touching counts as a crash.
pub fn bodies_overlap(a: &Body, b: &Body) -> bool {
    a.rect().overlaps(&b.rect())
}

/// Minimum rectangle-to-rectangle distance, 0 when overlapping.
pub fn body_separation(a: &Body, b: &Body) -> f64 {
    a.rect().separation(&b.rect())
}

/// Range, azimuth and closing rate of `target` as seen from the ego body.
/// Range is center-to-center; closing rate is positive when approaching.
pub fn relative_polar(ego: &Body, target: &Body) -> (f64, f64, f64) {
    let dx = target.pose.x - ego.pose.x;
    let dy = target.pose.y - ego.pose.y;
    let range = dx.hypot(dy);
    let azimuth = dy.atan2(dx) - ego.pose.heading;
    let vrx = target.velocity.0 - ego.velocity.0;
    let vry = target.velocity.1 - ego.velocity.1;
    let closing = if range > 1e-12 {
        -(dx * vrx + dy * vry) / range
    } else {
        0.0
    };
    (range, crate::geometry::wrap_angle(azimuth), closing)
}
