//! Detection concatenation and M-of-N multi-object tracking.
//!
//! Fusion runs in two stages. Detection concatenation maps every per-sensor
//! list into a common ego polar frame and joins them in a normalized order
//! (no deduplication — association is the tracker's job). The tracker then
//! associates detections to tracks greedily by nearest neighbor inside a
//! gate, smooths the estimates exponentially, and confirms a track once it
//! has been detected at least M times in the last N sensing periods.

use crate::sensors::{ClassLabel, Detection};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Required hits (M) within the window.
    pub m_confirm: usize,
    /// Window length (N) in sensing periods.
    pub n_window: usize,
    /// Association gate radius, meters.
    pub gate_radius_m: f64,
    /// Consecutive misses before a track is deleted.
    pub miss_delete: usize,
    /// Exponential smoothing factor for the estimates, in (0, 1].
    pub smoothing: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            m_confirm: 2,
            n_window: 2,
            gate_radius_m: 2.0,
            miss_delete: 2,
            smoothing: 0.5,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(1 <= self.m_confirm && self.m_confirm <= self.n_window) {
            return Err("require 1 <= m_confirm <= n_window".into());
        }
        if self.gate_radius_m <= 0.0 {
            return Err("gate_radius_m must be positive".into());
        }
        if self.miss_delete == 0 {
            return Err("miss_delete must be at least 1".into());
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err("smoothing must be in (0, 1]".into());
        }
        Ok(())
    }
}

/// Sliding hit window for M-of-N confirmation.
///
/// Push one flag per sensing period; the window keeps the last `n` flags.
/// `qualifies` reports whether the current window (including a shorter
/// prefix right after creation) holds at least `m` hits.
#[derive(Debug, Clone, PartialEq)]
pub struct HitHistory {
    n: usize,
    flags: Vec<bool>,
}

impl HitHistory {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            flags: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, hit: bool) {
        if self.flags.len() == self.n {
            self.flags.remove(0);
        }
        self.flags.push(hit);
    }

    pub fn hits(&self) -> usize {
        self.flags.iter().filter(|&&h| h).count()
    }

    pub fn qualifies(&self, m: usize) -> bool {
        self.hits() >= m
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub id: u64,
    /// Range estimate, meters.
    pub range: f64,
    /// Azimuth estimate in the ego frame, radians.
    pub azimuth: f64,
    /// Closing-rate estimate, m/s, positive when approaching.
    pub range_rate: f64,
    pub status: TrackStatus,
    pub class_label: Option<ClassLabel>,
    pub last_update: f64,
    history: HitHistory,
    consecutive_misses: usize,
}

impl Track {
    pub fn cartesian(&self) -> (f64, f64) {
        (
            self.range * self.azimuth.cos(),
            self.range * self.azimuth.sin(),
        )
    }

    pub fn longitudinal(&self) -> f64 {
        self.range * self.azimuth.cos()
    }

    pub fn lateral(&self) -> f64 {
        self.range * self.azimuth.sin()
    }

    pub fn hit_count(&self) -> usize {
        self.history.hits()
    }
}

/// Map per-sensor detections into one deterministic list: sensor rank
/// (radar, camera, LiDAR), then range ascending, then azimuth.
pub fn concatenate_detections(per_sensor: Vec<Vec<Detection>>) -> Vec<Detection> {
    let mut all: Vec<Detection> = per_sensor.into_iter().flatten().collect();
    all.sort_by(|a, b| {
        (a.sensor.rank(), a.range, a.azimuth)
            .partial_cmp(&(b.sensor.rank(), b.range, b.azimuth))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    all
}

/// Multi-object tracker owned by a single run.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    /// Tick length used for deriving closing rates from range differences
    /// when no Doppler-bearing detection is available.
    dt: f64,
}

impl Tracker {
    pub fn new(config: TrackerConfig, dt: f64) -> Self {
        Self {
            config,
            tracks: Vec::new(),
            next_id: 0,
            dt,
        }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn confirmed(&self) -> impl Iterator<Item = &Track> {
        self.tracks
            .iter()
            .filter(|t| t.status == TrackStatus::Confirmed)
    }

    /// One sensing period: associate, smooth, push hit flags, spawn, delete.
    ///
    /// Each detection associates to its nearest live track within the gate
    /// (ties to the lower track id). A track with associations takes one hit
    /// and smooths toward the centroid of its associated detections, so a
    /// single update never moves an estimate farther than the gate radius.
    /// Detections that associate nowhere spawn tentative tracks.
    pub fn update(&mut self, detections: &[Detection], now: f64) {
        let beta = self.config.smoothing;
        let gate = self.config.gate_radius_m;

        let mut assigned: Vec<Vec<&Detection>> = vec![Vec::new(); self.tracks.len()];
        let mut unassociated: Vec<&Detection> = Vec::new();

        for det in detections {
            let dx = det.range * det.azimuth.cos();
            let dy = det.range * det.azimuth.sin();
            let mut best: Option<(usize, f64)> = None;
            for (idx, track) in self.tracks.iter().enumerate() {
                if track.status == TrackStatus::Deleted {
                    continue;
                }
                let (tx, ty) = track.cartesian();
                let dist = (dx - tx).hypot(dy - ty);
                if dist > gate {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bidx, bdist)) => {
                        dist < bdist
                            || (dist == bdist && self.tracks[idx].id < self.tracks[bidx].id)
                    }
                };
                if better {
                    best = Some((idx, dist));
                }
            }
            match best {
                Some((idx, _)) => assigned[idx].push(det),
                None => unassociated.push(det),
            }
        }

        for (idx, dets) in assigned.iter().enumerate() {
            let track = &mut self.tracks[idx];
            if track.status == TrackStatus::Deleted {
                continue;
            }
            if dets.is_empty() {
                track.history.push(false);
                track.consecutive_misses += 1;
                if track.consecutive_misses >= self.config.miss_delete {
                    track.status = TrackStatus::Deleted;
                }
                continue;
            }

            // Centroid of the associated measurements in cartesian space.
            let m = dets.len() as f64;
            let (mut cx, mut cy) = (0.0, 0.0);
            for d in dets {
                cx += d.range * d.azimuth.cos() / m;
                cy += d.range * d.azimuth.sin() / m;
            }
            let meas_range = cx.hypot(cy);
            let meas_azimuth = cy.atan2(cx);

            let prev_range = track.range;
            track.range += beta * (meas_range - track.range);
            track.azimuth += beta * (meas_azimuth - track.azimuth);

            // Doppler if any detection carries it; otherwise differentiate
            // the smoothed range estimate (positive when closing).
            let doppler: Vec<f64> = dets.iter().filter_map(|d| d.range_rate).collect();
            let rr_meas = if doppler.is_empty() {
                (prev_range - track.range) / self.dt
            } else {
                doppler.iter().sum::<f64>() / doppler.len() as f64
            };
            track.range_rate += beta * (rr_meas - track.range_rate);

            if let Some(class) = dets
                .iter()
                .filter_map(|d| d.class_label)
                .find(|c| *c != ClassLabel::Unknown)
            {
                track.class_label = Some(class);
            }
            track.history.push(true);
            track.consecutive_misses = 0;
            track.last_update = now;
            if track.status == TrackStatus::Tentative
                && track.history.qualifies(self.config.m_confirm)
            {
                track.status = TrackStatus::Confirmed;
            }
        }

        for det in unassociated {
            let mut history = HitHistory::new(self.config.n_window);
            history.push(true);
            let status = if history.qualifies(self.config.m_confirm) {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            };
            self.tracks.push(Track {
                id: self.next_id,
                range: det.range,
                azimuth: det.azimuth,
                range_rate: det.range_rate.unwrap_or(0.0),
                status,
                class_label: det.class_label.filter(|c| *c != ClassLabel::Unknown),
                last_update: now,
                history,
                consecutive_misses: 0,
            });
            self.next_id += 1;
        }

        self.tracks.retain(|t| t.status != TrackStatus::Deleted);
    }

    /// Most-important object: confirmed, ahead of the ego, inside the lane
    /// gate, nearest range. Ties break to the higher closing rate, then the
    /// lower id.
    pub fn select_mio(&self, lane_halfwidth: f64) -> Option<&Track> {
        self.confirmed()
            .filter(|t| t.longitudinal() > 0.0 && t.lateral().abs() <= lane_halfwidth)
            .min_by(|a, b| {
                (a.range, -a.range_rate, a.id)
                    .partial_cmp(&(b.range, -b.range_rate, b.id))
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    }
}
