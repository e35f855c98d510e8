//! Cross-module invariants: attack-off identity, perfect-sensing safety,
//! statistical jamming monotonicity, and property-based checks of the
//! kinematic and tracking contracts.

use aebsim::aeb::{aeb_decide, AebConfig, BrakeCommand, BrakeStage, MioInput};
use aebsim::attacks::{ActiveWindow, AttackSpec, AttackerFrame, AttackerPosition};
use aebsim::fixtures;
use aebsim::fusion::{Tracker, TrackerConfig};
use aebsim::monitors::{check_sc1, Outcome};
use aebsim::report::trace_to_csv;
use aebsim::runner::run_once;
use aebsim::scenarios::load_scenario;
use aebsim::sensors::{radar_sense, Detection, Interference, RadarConfig, SensorKind};
use aebsim::world::{bodies_overlap, relative_polar, step_world, visible_fraction, Body, BodyKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A scheduled attack outside its active window leaves the whole pipeline
/// byte-identical to a run with no attacks at all.
#[test]
fn attack_off_is_identity() {
    let clean = load_scenario(fixtures::CPNO).unwrap();
    let mut dormant = clean.clone();
    dormant.attacks.push(AttackSpec::RadarDenialJamming {
        attacker: AttackerPosition {
            frame: AttackerFrame::World,
            x: 30.0,
            y: 0.0,
        },
        tx_power_dbm: 30.0,
        antenna_gain_dbi: 10.0,
        // Never active within the 12 s run.
        active_window_s: ActiveWindow(1e6, 1e7),
    });

    let (trace_clean, verdict_clean) = run_once(&clean, clean.seed).unwrap();
    let (trace_dormant, verdict_dormant) = run_once(&dormant, dormant.seed).unwrap();
    assert_eq!(trace_to_csv(&trace_clean), trace_to_csv(&trace_dormant));
    assert_eq!(verdict_clean.outcome, verdict_dormant.outcome);
    assert_eq!(
        verdict_clean.min_separation_m,
        verdict_dormant.min_separation_m
    );
}

/// Feeding ground-truth detections straight into fusion (no sensors, no
/// occlusion) keeps the bundled crossing scenario safe: the scenario is
/// winnable whenever perception is.
#[test]
fn perfect_sensing_keeps_cpno_safe() {
    let scenario = load_scenario(fixtures::CPNO).unwrap();
    let mut world = scenario.initial_world();
    let dt = scenario.dt_s;
    let mut tracker = Tracker::new(
        TrackerConfig {
            m_confirm: 1,
            n_window: 1,
            miss_delete: 1,
            gate_radius_m: 2.0,
            smoothing: 1.0,
        },
        dt,
    );
    let mut prev = BrakeCommand::none();
    let mut braked = false;
    for _ in 0..400 {
        let detections: Vec<Detection> = world
            .actor_bodies()
            .map(|body| {
                let (range, azimuth, closing) = relative_polar(&world.ego, body);
                Detection {
                    sensor: SensorKind::Radar,
                    range,
                    azimuth,
                    range_rate: Some(closing),
                    class_label: None,
                    snr: Some(40.0),
                    timestamp: world.time,
                }
            })
            .collect();
        tracker.update(&detections, world.time);
        let mio = tracker
            .select_mio(scenario.ego.lane_halfwidth_m)
            .map(|t| MioInput {
                range: t.range,
                closing_speed: t.range_rate,
            });
        let cmd = aeb_decide(mio, world.ego_speed, &scenario.ego.aeb, &prev);
        braked |= cmd.is_braking();
        assert!(
            !world.actor_bodies().any(|b| bodies_overlap(&world.ego, b)),
            "perfect sensing must not crash"
        );
        if world.ego_speed == 0.0 && braked {
            return; // stopped safely
        }
        world = step_world(&world, dt, &cmd).unwrap();
        prev = cmd;
    }
    panic!("run neither stopped nor finished");
}

/// More jamming power never helps detection: the count of true-target
/// detections is non-increasing in extra noise over matched seeds.
#[test]
fn jamming_monotonicity_statistical() {
    let cfg = RadarConfig::default();
    let scenario = load_scenario(fixtures::CPNO).unwrap();
    let mut world = scenario.initial_world();
    // Put the pedestrian in the clear at 20 m for a strong return.
    world.actors.retain(|a| a.body.id == "ped");
    world.actors[0].body.pose.x = world.ego.pose.x + 20.0;
    world.actors[0].body.pose.y = 0.0;

    let mut last_count = usize::MAX;
    for extra in [None, Some(-90.0), Some(-75.0), Some(-60.0), Some(-45.0)] {
        let interference = Interference {
            radar_extra_noise_dbm: extra,
            ..Default::default()
        };
        let mut count = 0usize;
        for seed in 0..40u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dets = radar_sense(&world, &cfg, &interference, &mut rng);
            if dets.iter().any(|d| (d.range - 20.25).abs() < 0.5) {
                count += 1;
            }
        }
        assert!(
            count <= last_count,
            "detections increased with stronger jamming: {count} > {last_count}"
        );
        last_count = count;
    }
    assert_eq!(
        last_count, 0,
        "the strongest jam level must bury the target"
    );
}

/// Every crash of the bundled frontal scenarios is preceded by an SC1
/// failure (the constraint is sound for this geometry).
#[test]
fn sc1_soundness_on_bundled_crash() {
    let scenario = load_scenario(fixtures::CPNO_JAM_RADAR_ONLY).unwrap();
    let (trace, verdict) = run_once(&scenario, scenario.seed).unwrap();
    assert_eq!(verdict.outcome, Outcome::Crash);
    let sc = &scenario.monitors[0];
    let violation = check_sc1(&trace, sc, scenario.dt_s);
    let crash_time = trace.rows.last().unwrap().time_s;
    match violation {
        Err(t) => assert!(
            t <= crash_time,
            "violation {t} must precede impact {crash_time}"
        ),
        Ok(()) => panic!("crash without a preceding SC1 failure"),
    }
}

/// The oracle channel commands full braking under total sensor denial.
#[test]
fn oracle_ignores_sensor_denial() {
    let mut scenario = load_scenario(fixtures::CPNO_JAM_RADAR_ONLY).unwrap();
    // Blind everything: megawatt jammer, patch on the pedestrian class.
    scenario.attacks.push(AttackSpec::CameraAdversarialPatch {
        attacker: AttackerPosition {
            frame: AttackerFrame::EgoRelative,
            x: 10.0,
            y: 0.0,
        },
        patch_classes: vec![aebsim::sensors::ClassLabel::Pedestrian],
        active_window_s: ActiveWindow::default(),
    });
    let (trace, verdict) = run_once(&scenario, scenario.seed).unwrap();
    assert_eq!(verdict.outcome, Outcome::Crash);
    assert!(
        trace.rows.iter().any(|r| r.oracle_decel > 0.0),
        "the oracle channel must brake even when every sensor is attacked"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Discrete stopping distance stays within 2% of v²/(2a) at dt = 0.05.
    #[test]
    fn stopping_distance_error_bounded(v0 in 1.0f64..30.0, decel in 2.0f64..10.0) {
        let mut world = test_world(v0);
        let cmd = BrakeCommand { stage: BrakeStage::Full, decel };
        while world.ego_speed > 0.0 {
            world = step_world(&world, 0.05, &cmd).unwrap();
        }
        let expected = v0 * v0 / (2.0 * decel);
        prop_assert!((world.ego.pose.x - expected).abs() / expected < 0.02);
    }

    /// Ego speed is non-increasing under any non-negative deceleration.
    #[test]
    fn ego_speed_non_increasing(v0 in 0.0f64..30.0, decel in 0.0f64..12.0, steps in 1usize..100) {
        let mut world = test_world(v0);
        let cmd = BrakeCommand { stage: BrakeStage::Full, decel };
        let mut prev = world.ego_speed;
        for _ in 0..steps {
            world = step_world(&world, 0.05, &cmd).unwrap();
            prop_assert!(world.ego_speed <= prev + 1e-12);
            prev = world.ego_speed;
        }
    }

    /// Removing an occluder never decreases the visible fraction.
    #[test]
    fn occlusion_monotone_in_occluders(
        ox in 5.0f64..35.0,
        oy in -4.0f64..4.0,
        ox2 in 5.0f64..35.0,
        oy2 in -4.0f64..4.0,
        ty in -6.0f64..6.0,
    ) {
        let target = body("t", 40.0, ty, 0.5, 0.5);
        let occ1 = body("o1", ox, oy, 4.4, 1.8);
        let occ2 = body("o2", ox2, oy2, 4.4, 1.8);
        let eye = aebsim::geometry::Pose2::new(0.0, 0.0, 0.0);
        let both = visible_fraction(&eye, &target, &[&occ1, &occ2]);
        let one = visible_fraction(&eye, &target, &[&occ1]);
        let none = visible_fraction(&eye, &target, &[]);
        prop_assert!(one >= both);
        prop_assert!(none >= one);
        prop_assert_eq!(none, 1.0);
    }

    /// If (M2, N) confirms a history, every (M1 <= M2, N) confirms no later.
    #[test]
    fn confirmation_monotone_in_m(bits in 0u32..(1 << 12), m2 in 1usize..=12) {
        let n = 12usize;
        let history: Vec<bool> = (0..n).map(|k| bits & (1 << k) != 0).collect();
        let confirm_tick = |m: usize| -> Option<usize> {
            let mut window = aebsim::fusion::HitHistory::new(n);
            for (t, &hit) in history.iter().enumerate() {
                window.push(hit);
                if window.qualifies(m) {
                    return Some(t);
                }
            }
            None
        };
        if let Some(t2) = confirm_tick(m2) {
            for m1 in 1..=m2 {
                let t1 = confirm_tick(m1).expect("weaker rule must also confirm");
                prop_assert!(t1 <= t2);
            }
        }
    }

    /// Stages never weaken as TTC falls at fixed ego speed.
    #[test]
    fn stage_never_weakens_as_ttc_falls(speed in 2.0f64..30.0, steps in 2usize..50) {
        let cfg = AebConfig::default();
        let mut last = BrakeStage::None;
        for k in (1..=steps).rev() {
            let ttc = k as f64 * 0.1;
            let cmd = aeb_decide(
                Some(MioInput { range: ttc * speed, closing_speed: speed }),
                speed,
                &cfg,
                &BrakeCommand::none(),
            );
            // Iterating from large TTC down: stage rank must not decrease.
            prop_assert!(cmd.stage >= last, "stage weakened at ttc {}", ttc);
            last = cmd.stage;
        }
    }
}

fn test_world(speed: f64) -> aebsim::world::WorldState {
    let mut ego = body("ego", 0.0, 0.0, 4.5, 1.8);
    ego.velocity = (speed, 0.0);
    aebsim::world::WorldState {
        time: 0.0,
        ego,
        ego_speed: speed,
        actors: vec![],
        ego_command: BrakeCommand::none(),
    }
}

fn body(id: &str, x: f64, y: f64, length: f64, width: f64) -> Body {
    Body {
        id: id.into(),
        kind: if id == "ego" {
            BodyKind::EgoVehicle
        } else {
            BodyKind::Car
        },
        pose: aebsim::geometry::Pose2::new(x, y, 0.0),
        velocity: (0.0, 0.0),
        length,
        width,
        radar_cross_section: 10.0,
    }
}
