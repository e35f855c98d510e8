//! Monostatic radar model: power-budget returns per range bin, exponential
//! noise, cell-averaging CFAR detection.

use super::{dbm_to_mw, mw_to_dbm, Detection, GhostReturn, Interference, SensorKind};
use crate::world::{relative_polar, visible_fraction, WorldState};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Cell-averaging CFAR parameters. Training and guard counts are per side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CfarConfig {
    pub num_train: usize,
    pub num_guard: usize,
    pub pfa: f64,
}

impl Default for CfarConfig {
    fn default() -> Self {
        Self {
            num_train: 4,
            num_guard: 2,
            pfa: 1e-3,
        }
    }
}

impl CfarConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.num_train < 1 {
            return Err("cfar num_train must be >= 1".into());
        }
        if !(self.pfa > 0.0 && self.pfa < 1.0) {
            return Err("cfar pfa must be in (0, 1)".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadarConfig {
    /// Transmit power, dBm.
    pub tx_power_dbm: f64,
    /// Antenna gain, dBi, applied on transmit and receive.
    pub antenna_gain_dbi: f64,
    /// Carrier wavelength, meters (77 GHz band by default).
    pub wavelength_m: f64,
    pub max_range_m: f64,
    pub range_bin_width_m: f64,
    /// Mean noise power per bin, dBm.
    pub noise_floor_dbm: f64,
    /// Full field-of-view width, radians.
    pub fov_rad: f64,
    pub cfar: CfarConfig,
    /// Std-dev of the Gaussian noise on measured closing rates, m/s.
    pub range_rate_noise_std: f64,
    /// Pure-noise detections report a closing rate drawn uniformly from
    /// `[-bound, bound]`: a false alarm lands in an arbitrary Doppler bin.
    pub false_alarm_range_rate_bound: f64,
}

impl Default for RadarConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 10.0,
            antenna_gain_dbi: 28.0,
            wavelength_m: 0.0039,
            max_range_m: 80.0,
            range_bin_width_m: 0.5,
            noise_floor_dbm: -100.0,
            fov_rad: 120f64.to_radians(),
            cfar: CfarConfig::default(),
            range_rate_noise_std: 0.1,
            false_alarm_range_rate_bound: 15.0,
        }
    }
}

impl RadarConfig {
    pub fn num_bins(&self) -> usize {
        (self.max_range_m / self.range_bin_width_m).ceil() as usize
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.max_range_m <= 0.0 {
            return Err("radar max_range_m must be positive".into());
        }
        if self.range_bin_width_m <= 0.0 {
            return Err("radar range_bin_width_m must be positive".into());
        }
        if self.wavelength_m <= 0.0 {
            return Err("radar wavelength_m must be positive".into());
        }
        self.cfar.validate()?;
        let needed = 2 * (self.cfar.num_train + self.cfar.num_guard) + 1;
        if self.num_bins() <= needed {
            return Err(format!(
                "radar profile of {} bins too short for CFAR window of {}",
                self.num_bins(),
                needed
            ));
        }
        Ok(())
    }
}

/// Received power of a monostatic return, dBm:
/// `Pt + 2G + 10·log10(λ²σ / ((4π)³ R⁴))`.
///
/// Ranges below 0.5 m clamp to 0.5 m (near-field guard). A zero cross
/// section returns negative infinity: no return at all.
pub fn radar_received_power(cfg: &RadarConfig, target_range: f64, rcs: f64) -> f64 {
    if rcs <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let r = target_range.max(0.5);
    let lambda = cfg.wavelength_m;
    let four_pi = 4.0 * std::f64::consts::PI;
    cfg.tx_power_dbm
        + 2.0 * cfg.antenna_gain_dbi
        + 10.0 * (lambda * lambda * rcs / (four_pi.powi(3) * r.powi(4))).log10()
}

/// CA-CFAR threshold factor `α = n·(pfa^(−1/n) − 1)` for `n` training cells.
///
/// With exponentially distributed noise power this section keeps the
/// false-alarm probability exactly at `pfa`.
pub fn cfar_threshold_factor(num_train_cells: usize, pfa: f64) -> f64 {
    let n = num_train_cells as f64;
    n * (pfa.powf(-1.0 / n) - 1.0)
}

/// Per-bin received power profile in linear milliwatts.
///
/// Each bin draws exponential noise with mean `noise_floor + extra_noise`
/// (summed in linear units); every visible in-FOV body adds its received
/// power, scaled by its visible fraction, to its range bin; scheduled ghosts
/// add their power at their spoofed bins.
pub fn build_power_profile<R: Rng>(
    world: &WorldState,
    cfg: &RadarConfig,
    interference: &Interference,
    rng: &mut R,
) -> Vec<f64> {
    let bins = cfg.num_bins();
    let mut noise_mean = dbm_to_mw(cfg.noise_floor_dbm);
    if let Some(extra) = interference.radar_extra_noise_dbm {
        noise_mean += dbm_to_mw(extra);
    }

    // Exponential power noise (single-pulse, square-law detector).
    let mut profile: Vec<f64> = (0..bins)
        .map(|_| {
            let u: f64 = rng.gen::<f64>();
            -noise_mean * (1.0 - u).ln()
        })
        .collect();

    for actor in &world.actors {
        let body = &actor.body;
        let (range, azimuth, _) = relative_polar(&world.ego, body);
        if range >= cfg.max_range_m || azimuth.abs() > cfg.fov_rad / 2.0 {
            continue;
        }
        let occluders: Vec<&crate::world::Body> =
            world.actor_bodies().filter(|b| b.id != body.id).collect();
        let vf = visible_fraction(&world.ego.pose, body, &occluders);
        if vf <= 0.0 {
            continue;
        }
        let power_dbm = radar_received_power(cfg, range, body.radar_cross_section);
        if power_dbm.is_finite() {
            let bin = (range / cfg.range_bin_width_m) as usize;
            if bin < bins {
                profile[bin] += dbm_to_mw(power_dbm) * vf;
            }
        }
    }

    for ghost in &interference.radar_ghosts {
        if ghost.range < 0.0 || ghost.range >= cfg.max_range_m {
            continue;
        }
        let bin = (ghost.range / cfg.range_bin_width_m) as usize;
        if bin < bins {
            profile[bin] += dbm_to_mw(ghost.power_dbm);
        }
    }

    profile
}

/// Cell-averaging CFAR over a linear power profile; returns detected bins.
///
/// The threshold for each cell under test is `α` times the mean of the
/// training cells on both sides, skipping the guard cells. Cells near the
/// edges fall back to one-sided (truncated) training windows, with `α`
/// recomputed from the actual training count so the false-alarm rate stays
/// at the configured value everywhere.
pub fn cfar_detect(profile: &[f64], cfar: &CfarConfig) -> Vec<usize> {
    let n = profile.len();
    let g = cfar.num_guard;
    let t = cfar.num_train;
    let mut hits = Vec::new();
    for cut in 0..n {
        let mut sum = 0.0;
        let mut count = 0usize;
        // Leading window.
        let lead_end = cut.saturating_sub(g);
        let lead_start = cut.saturating_sub(g + t);
        if lead_end > 0 {
            for &p in &profile[lead_start..lead_end] {
                sum += p;
                count += 1;
            }
        }
        // Trailing window.
        let trail_start = (cut + g + 1).min(n);
        let trail_end = (cut + g + t + 1).min(n);
        for &p in &profile[trail_start..trail_end] {
            sum += p;
            count += 1;
        }
        if count == 0 {
            continue;
        }
        let alpha = cfar_threshold_factor(count, cfar.pfa);
        let threshold = alpha * sum / count as f64;
        if profile[cut] > threshold {
            hits.push(cut);
        }
    }
    hits
}

/// Full radar frame: power profile, CFAR, then detection assembly.
///
/// A detected bin reports the bin-center range. Its closing rate comes from
/// the nearest body in that bin (ground truth plus Gaussian noise), unless
/// a ghost targeted the bin with a spoofed rate, which overrides it. Bins
/// with no attributable source are false alarms and carry a seeded uniform
/// closing rate and an in-FOV uniform azimuth.
pub fn radar_sense<R: Rng>(
    world: &WorldState,
    cfg: &RadarConfig,
    interference: &Interference,
    rng: &mut R,
) -> Vec<Detection> {
    let profile = build_power_profile(world, cfg, interference, rng);
    let noise_mean_dbm = {
        let mut m = dbm_to_mw(cfg.noise_floor_dbm);
        if let Some(extra) = interference.radar_extra_noise_dbm {
            m += dbm_to_mw(extra);
        }
        mw_to_dbm(m)
    };
    let hits = cfar_detect(&profile, &cfg.cfar);

    // Nearest true contributor per bin.
    let mut contributors: Vec<Option<(f64, f64, f64)>> = vec![None; profile.len()]; // (range, azimuth, closing)
    for actor in &world.actors {
        let body = &actor.body;
        let (range, azimuth, closing) = relative_polar(&world.ego, body);
        if range >= cfg.max_range_m || azimuth.abs() > cfg.fov_rad / 2.0 {
            continue;
        }
        let occluders: Vec<&crate::world::Body> =
            world.actor_bodies().filter(|b| b.id != body.id).collect();
        let vf = visible_fraction(&world.ego.pose, body, &occluders);
        if vf <= 0.0 {
            continue;
        }
        if !radar_received_power(cfg, range, body.radar_cross_section).is_finite() {
            continue;
        }
        let bin = (range / cfg.range_bin_width_m) as usize;
        if bin < contributors.len() {
            match contributors[bin] {
                Some((nearest, _, _)) if nearest <= range => {}
                _ => contributors[bin] = Some((range, azimuth, closing)),
            }
        }
    }

    let mut ghost_by_bin: Vec<Option<&GhostReturn>> = vec![None; profile.len()];
    for ghost in &interference.radar_ghosts {
        if ghost.range < 0.0 || ghost.range >= cfg.max_range_m {
            continue;
        }
        let bin = (ghost.range / cfg.range_bin_width_m) as usize;
        if bin < ghost_by_bin.len() {
            ghost_by_bin[bin] = Some(ghost);
        }
    }

    let rr_noise = Normal::new(0.0, cfg.range_rate_noise_std.max(0.0)).ok();
    hits.into_iter()
        .map(|bin| {
            let range = (bin as f64 + 0.5) * cfg.range_bin_width_m;
            let snr = mw_to_dbm(profile[bin]) - noise_mean_dbm;
            let (azimuth, range_rate) = match (ghost_by_bin[bin], contributors[bin]) {
                (Some(ghost), contrib) => {
                    let rr = ghost
                        .range_rate
                        .or_else(|| contrib.map(|(_, _, c)| c))
                        .unwrap_or(0.0);
                    (ghost.azimuth, rr)
                }
                (None, Some((_, azimuth, closing))) => {
                    let noise = match (&rr_noise, cfg.range_rate_noise_std > 0.0) {
                        (Some(n), true) => n.sample(rng),
                        _ => 0.0,
                    };
                    (azimuth, closing + noise)
                }
                (None, None) => {
                    // False alarm: arbitrary bearing and Doppler.
                    let half_fov = cfg.fov_rad / 2.0;
                    let az = rng.gen_range(-half_fov..=half_fov);
                    let b = cfg.false_alarm_range_rate_bound;
                    let rr = if b > 0.0 { rng.gen_range(-b..=b) } else { 0.0 };
                    (az, rr)
                }
            };
            Detection {
                sensor: SensorKind::Radar,
                range,
                azimuth,
                range_rate: Some(range_rate),
                class_label: None,
                snr: Some(snr),
                timestamp: world.time,
            }
        })
        .collect()
}
