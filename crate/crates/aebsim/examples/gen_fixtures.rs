//! Regenerates the bundled fixture documents under `fixtures/`.
//!
//! The fixtures are data, not code: this generator is their single source of
//! truth. Run it after changing scenario constructors or the analysis
//! dataset: `cargo run -p aebsim --example gen_fixtures`.

use aebsim::attacks::{ActiveWindow, AttackSpec, AttackerFrame, AttackerPosition};
use aebsim::scenarios::{
    instantiate_ccrm, instantiate_ccrs, instantiate_cpno, CpnoParams, Scenario, SensorSlot,
    SweepAxis, SweepGrid, FORMAT_VERSION,
};
use aebsim::sensors::CameraConfig;
use aebsim::stpa::{
    Applicability, AttackCatalog, AttackType, ControlAction, ControlStructure, Exclusion,
    FeedbackLink, FilterRules, Hazard, HintWord, StpaModel, UcaCategory,
};
use std::collections::BTreeMap;
use std::path::Path;

fn write(dir: &Path, name: &str, json: String) {
    let path = dir.join(name);
    std::fs::write(&path, json + "\n").expect("write fixture");
    println!("wrote {}", path.display());
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serialize fixture")
}

fn jam_attack(distance_m: f64, power_dbm: f64) -> AttackSpec {
    AttackSpec::RadarDenialJamming {
        attacker: AttackerPosition {
            frame: AttackerFrame::EgoRelative,
            x: distance_m,
            y: 0.0,
        },
        tx_power_dbm: power_dbm,
        antenna_gain_dbi: 10.0,
        active_window_s: ActiveWindow::default(),
    }
}

/// Jammed CPNO where the radar drives control alone; camera and LiDAR
/// still sense into the trace.
fn cpno_jam_radar_only() -> Scenario {
    let mut s = instantiate_cpno(&CpnoParams::default()).unwrap();
    s.name = "cpno_jam_radar_only".into();
    s.description =
        "CPNO with barrage jamming against the radar; camera and LiDAR excluded from control"
            .into();
    s.attacks.push(jam_attack(30.0, 10.0));
    if let Some(cam) = s.ego.sensors.camera.as_mut() {
        cam.use_for_control = false;
    }
    if let Some(lid) = s.ego.sensors.lidar.as_mut() {
        lid.use_for_control = false;
    }
    s.validate().unwrap();
    s
}

fn cpno_jam_concat() -> Scenario {
    let mut s = cpno_jam_radar_only();
    s.name = "cpno_jam_concat".into();
    s.description = "CPNO with the same jamming, radar and camera concatenated for control".into();
    if let Some(cam) = s.ego.sensors.camera.as_mut() {
        cam.use_for_control = true;
    }
    s.validate().unwrap();
    s
}

/// Sweep base: jammed CPNO, radar-only control, no constraint monitors (the
/// matrix records crash/safe only), and partial2 tuned so the crash boundary
/// in brake-onset range is a single threshold.
fn jamming_sweep() -> SweepGrid {
    let mut base = cpno_jam_radar_only();
    base.name = "cpno_jam_sweep_base".into();
    base.monitors.clear();
    base.ego.aeb.partial2_decel = 4.9;
    base.ego.aeb.stage_multipliers.partial2 = 0.95;
    base.validate().unwrap();
    SweepGrid {
        format_version: FORMAT_VERSION,
        name: "jamming_sweep".into(),
        base,
        axes: vec![
            SweepAxis {
                path: "/attacks/0/attacker/x".into(),
                values: vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0]
                    .into_iter()
                    .map(Into::into)
                    .collect(),
            },
            SweepAxis {
                path: "/attacks/0/tx_power_dbm".into(),
                values: vec![-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
                    .into_iter()
                    .map(Into::into)
                    .collect(),
            },
        ],
    }
}

/// False-alarm inflation variant: the CFAR operating point is pushed to a
/// false-alarm probability where phantom tracks confirm under (2,2).
fn jamming_sweep_false_alarm() -> SweepGrid {
    let mut grid = jamming_sweep();
    grid.name = "jamming_sweep_false_alarm".into();
    if let Some(radar) = grid.base.ego.sensors.radar.as_mut() {
        radar.config.cfar.pfa = 0.2;
    }
    grid.base.validate().unwrap();
    grid
}

/// Ideal-sensor, occlusion-free approach for oracle-equivalence checks:
/// exact camera ranging, no noise, (1,1) confirmation, no smoothing lag.
fn ccrs_ideal() -> Scenario {
    let mut s = instantiate_ccrs(25.0 / 3.6).unwrap();
    s.name = "ccrs_ideal".into();
    s.description =
        "stationary lead, ideal camera-only sensing for dual-channel equivalence".into();
    s.ego.sensors.radar = None;
    s.ego.sensors.lidar = None;
    s.ego.sensors.camera = Some(SensorSlot {
        enabled: true,
        use_for_control: true,
        config: CameraConfig {
            fov_rad: 60f64.to_radians(),
            max_range_m: 80.0,
            p_detect: vec![(0.0, 1.0), (80.0, 1.0)],
            min_visible_fraction: 0.5,
            range_noise_std: 0.0,
        },
    });
    s.ego.tracker.m_confirm = 1;
    s.ego.tracker.n_window = 1;
    s.ego.tracker.miss_delete = 1;
    s.ego.tracker.smoothing = 1.0;
    s.monitors.clear();
    s.validate().unwrap();
    s
}

fn stpa_model() -> StpaModel {
    let structure = ControlStructure {
        components: vec![
            "Driver".into(),
            "AEB ECU".into(),
            "Brake".into(),
            "Vehicle".into(),
            "External Environment".into(),
        ],
        control_actions: vec![
            ControlAction {
                id: "CA1".into(),
                source: "AEB ECU".into(),
                target: "Brake".into(),
                label: "apply automatic emergency braking".into(),
                tags: vec!["aeb".into()],
            },
            ControlAction {
                id: "CA2".into(),
                source: "AEB ECU".into(),
                target: "Brake".into(),
                label: "release automatic braking".into(),
                tags: vec!["aeb".into()],
            },
            ControlAction {
                id: "CA3".into(),
                source: "AEB ECU".into(),
                target: "Driver".into(),
                label: "issue forward collision warning".into(),
                tags: vec!["aeb".into()],
            },
            ControlAction {
                id: "CA4".into(),
                source: "Driver".into(),
                target: "Brake".into(),
                label: "apply service brake".into(),
                tags: vec!["aeb".into()],
            },
            ControlAction {
                id: "CA5".into(),
                source: "Driver".into(),
                target: "Vehicle".into(),
                label: "press accelerator".into(),
                tags: vec![],
            },
            ControlAction {
                id: "CA6".into(),
                source: "Driver".into(),
                target: "Vehicle".into(),
                label: "steer".into(),
                tags: vec![],
            },
        ],
        feedback_links: vec![
            FeedbackLink {
                id: "FB1".into(),
                source: "External Environment".into(),
                target: "AEB ECU".into(),
                label: "radar, camera and LiDAR measurements".into(),
            },
            FeedbackLink {
                id: "FB2".into(),
                source: "Vehicle".into(),
                target: "AEB ECU".into(),
                label: "ego speed".into(),
            },
            FeedbackLink {
                id: "FB3".into(),
                source: "Vehicle".into(),
                target: "Driver".into(),
                label: "speed and vehicle status".into(),
            },
            FeedbackLink {
                id: "FB4".into(),
                source: "External Environment".into(),
                target: "Driver".into(),
                label: "visual scene".into(),
            },
            FeedbackLink {
                id: "FB5".into(),
                source: "Brake".into(),
                target: "Vehicle".into(),
                label: "deceleration".into(),
            },
        ],
    };

    let hazards = vec![
        Hazard {
            id: "H1".into(),
            description: "ego vehicle collides with the object ahead".into(),
            safety_constraint: "SC1".into(),
        },
        Hazard {
            id: "H2".into(),
            description: "unnecessary hard braking endangers following traffic and comfort".into(),
            safety_constraint: "SC2".into(),
        },
    ];

    let mut hazard_map = BTreeMap::new();
    hazard_map.insert("CA1".to_string(), vec!["H1".to_string(), "H2".to_string()]);
    hazard_map.insert("CA2".to_string(), vec!["H1".to_string()]);
    hazard_map.insert("CA3".to_string(), vec!["H1".to_string(), "H2".to_string()]);
    hazard_map.insert("CA4".to_string(), vec!["H1".to_string()]);
    hazard_map.insert("CA5".to_string(), vec!["H1".to_string()]);
    hazard_map.insert("CA6".to_string(), vec!["H1".to_string()]);

    let filter_rules = FilterRules {
        exclusions: vec![
            Exclusion {
                action_id: "CA3".into(),
                category: UcaCategory::StoppedTooSoonAppliedTooLong,
                reason: "warning duration has no direct dynamic effect on the vehicle".into(),
            },
            Exclusion {
                action_id: "CA2".into(),
                category: UcaCategory::NotProviding,
                reason: "withholding brake release keeps the vehicle stopped, a safe state here"
                    .into(),
            },
            Exclusion {
                action_id: "CA6".into(),
                category: UcaCategory::StoppedTooSoonAppliedTooLong,
                reason: "steering duration is outside the longitudinal braking analysis".into(),
            },
        ],
        hazard_map,
    };

    let hint_words = vec![
        HintWord {
            id: "HW1".into(),
            text: "Control input or external information wrong or missing".into(),
        },
        HintWord {
            id: "HW2".into(),
            text: "Inadequate or missing feedback, Feedback Delays".into(),
        },
    ];

    // Event-tag vocabulary matched against the attack catalog.
    let miss: Vec<String> = [
        "object_missed_radar",
        "object_farther_radar",
        "object_receding_radar",
        "object_missed_camera",
        "object_misclassified_camera",
        "object_missed_lidar",
        "sweep_lost_lidar",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let phantom: Vec<String> = [
        "phantom_objects_radar",
        "phantom_objects_camera",
        "object_nearer_radar",
        "object_closing_faster_radar",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let phantom_plus_misclass: Vec<String> = phantom
        .iter()
        .cloned()
        .chain(std::iter::once("object_misclassified_camera".to_string()))
        .collect();
    let miss_plus_seduction: Vec<String> = miss
        .iter()
        .cloned()
        .chain(std::iter::once("phantom_objects_radar".to_string()))
        .collect();

    let entry = |hint: &str, uca: &str, cause: &str, tags: &[String]| Applicability {
        hint_word: hint.into(),
        uca_id: uca.into(),
        cause: cause.into(),
        event_tags: tags.to_vec(),
    };

    let applicability = vec![
        entry(
            "HW1",
            "UCA-CA1-NP",
            "object ahead never perceived, emergency braking withheld",
            &miss,
        ),
        entry(
            "HW2",
            "UCA-CA1-NP",
            "measurement stream delayed or dropped, braking decision starved",
            &miss,
        ),
        entry(
            "HW1",
            "UCA-CA1-TET",
            "object perceived only at short range, braking starts too late",
            &miss,
        ),
        entry(
            "HW2",
            "UCA-CA1-TET",
            "confirmation latency defers the braking decision past the deadline",
            &miss,
        ),
        entry(
            "HW1",
            "UCA-CA1-P",
            "phantom object triggers emergency braking on an open road",
            &phantom_plus_misclass,
        ),
        entry(
            "HW1",
            "UCA-CA1-SSAL",
            "track lost mid-stop, emergency braking released before standstill",
            &miss_plus_seduction,
        ),
        entry(
            "HW1",
            "UCA-CA2-P",
            "brake released while the object ahead is still present",
            &miss,
        ),
        entry(
            "HW2",
            "UCA-CA2-TET",
            "stale object list releases the brake at the wrong time",
            &miss,
        ),
        entry(
            "HW1",
            "UCA-CA3-NP",
            "no collision warning because the object is never perceived",
            &miss,
        ),
        entry(
            "HW1",
            "UCA-CA3-TET",
            "warning raised too late for the driver to react",
            &miss,
        ),
        entry(
            "HW2",
            "UCA-CA3-TET",
            "feedback delay postpones the warning past the reaction budget",
            &miss,
        ),
        entry(
            "HW1",
            "UCA-CA3-P",
            "false warning conditions the driver to ignore alerts",
            &phantom_plus_misclass,
        ),
        entry(
            "HW2",
            "UCA-CA4-NP",
            "driver never brakes because the warning channel stays silent",
            &miss,
        ),
        entry(
            "HW2",
            "UCA-CA4-TET",
            "driver brakes late on a delayed warning",
            &miss,
        ),
        entry(
            "HW2",
            "UCA-CA5-P",
            "driver keeps accelerating on stale scene information",
            &miss,
        ),
    ];

    StpaModel {
        structure,
        hazards,
        filter_rules,
        hint_words,
        applicability,
    }
}

fn attack_catalog() -> AttackCatalog {
    let at =
        |id: &str, caused: &str, sensor: aebsim::sensors::SensorKind, desc: &str, refs: &[&str]| {
            AttackType {
                id: id.into(),
                caused_event: caused.into(),
                sensor,
                description: desc.into(),
                references: refs.iter().map(|s| s.to_string()).collect(),
            }
        };
    use aebsim::sensors::SensorKind::{Camera, Lidar, Radar};
    let attack_types = vec![
        at(
            "AT01",
            "object_missed_radar",
            Radar,
            "denial jamming suppresses radar detection",
            &["rad-jam-1", "rad-jam-2"],
        ),
        at(
            "AT02",
            "object_nearer_radar",
            Radar,
            "range deception injects a nearer ghost",
            &["rad-spoof-1"],
        ),
        at(
            "AT03",
            "object_farther_radar",
            Radar,
            "range deception injects a farther ghost",
            &["rad-spoof-1", "rad-spoof-2"],
        ),
        at(
            "AT04",
            "object_closing_faster_radar",
            Radar,
            "velocity deception spoofs a faster closing rate",
            &["rad-spoof-2"],
        ),
        at(
            "AT05",
            "object_receding_radar",
            Radar,
            "velocity deception spoofs a receding rate",
            &["rad-spoof-2"],
        ),
        at(
            "AT06",
            "phantom_objects_radar",
            Radar,
            "ghost flood spawns phantom radar objects",
            &["rad-spoof-1"],
        ),
        at(
            "AT07",
            "object_missed_camera",
            Camera,
            "adversarial patch hides an object class",
            &["cam-patch-1"],
        ),
        at(
            "AT08",
            "object_misclassified_camera",
            Camera,
            "adversarial patch flips the object class",
            &["cam-patch-1"],
        ),
        at(
            "AT09",
            "phantom_objects_camera",
            Camera,
            "adversarial pattern hallucinates objects",
            &["cam-patch-1"],
        ),
        at(
            "AT10",
            "object_missed_lidar",
            Lidar,
            "sector blinding erases LiDAR returns",
            &["lidar-blind-1"],
        ),
        at(
            "AT11",
            "sweep_lost_lidar",
            Lidar,
            "saturating blinding wipes the whole sweep",
            &["lidar-blind-1"],
        ),
    ];
    let mut references = BTreeMap::new();
    references.insert(
        "rad-jam-1".into(),
        "automotive FMCW radar barrage jamming study".into(),
    );
    references.insert(
        "rad-jam-2".into(),
        "drive-by radar denial experiments".into(),
    );
    references.insert(
        "rad-spoof-1".into(),
        "FMCW range-gate spoofing demonstration".into(),
    );
    references.insert(
        "rad-spoof-2".into(),
        "Doppler and range deception against automotive radar".into(),
    );
    references.insert(
        "cam-patch-1".into(),
        "printable adversarial patches against object detectors".into(),
    );
    references.insert(
        "lidar-blind-1".into(),
        "LiDAR saturation and blinding experiments".into(),
    );
    AttackCatalog {
        attack_types,
        references,
    }
}

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir).unwrap();

    let cpno = instantiate_cpno(&CpnoParams::default()).unwrap();
    write(&dir, "cpno.json", pretty(&cpno));
    write(
        &dir,
        "cpno_jam_radar_only.json",
        pretty(&cpno_jam_radar_only()),
    );
    write(&dir, "cpno_jam_concat.json", pretty(&cpno_jam_concat()));
    write(
        &dir,
        "ccrs.json",
        pretty(&instantiate_ccrs(25.0 / 3.6).unwrap()),
    );
    write(
        &dir,
        "ccrm.json",
        pretty(&instantiate_ccrm(25.0 / 3.6, 10.0 / 3.6).unwrap()),
    );
    write(&dir, "ccrs_ideal.json", pretty(&ccrs_ideal()));
    write(&dir, "jamming_sweep.json", pretty(&jamming_sweep()));
    write(
        &dir,
        "jamming_sweep_false_alarm.json",
        pretty(&jamming_sweep_false_alarm()),
    );

    let model = stpa_model();
    let catalog = attack_catalog();
    write(&dir, "stpa_model.json", pretty(&model));
    write(&dir, "attack_catalog.json", pretty(&catalog));

    // Sanity: the analysis over the bundled dataset must reproduce the
    // reference tallies.
    let result = aebsim::stpa::analyze(&model, &catalog).unwrap();
    let aeb_count = result
        .ucas
        .iter()
        .filter(|u| u.tags.iter().any(|t| t == "aeb"))
        .count();
    println!(
        "analysis: {} UCAs ({} aeb), {} hazard scenarios, {} templates, {} uncovered",
        result.ucas.len(),
        aeb_count,
        result.hazard_scenarios.len(),
        result.templates.len(),
        result.uncovered.len()
    );
    assert_eq!(result.ucas.len(), 21);
    assert_eq!(aeb_count, 14);
    assert_eq!(result.hazard_scenarios.len(), 15);
    assert_eq!(result.templates.len(), 102);
    assert!(result.uncovered.is_empty());
}
