//! Every bundled scenario loads, validates and ends in its reference
//! outcome at its bundled seed.

use aebsim::fixtures;
use aebsim::monitors::Outcome;
use aebsim::runner::run_once;
use aebsim::scenarios::{load_scenario, load_sweep};

#[test]
fn bundled_scenarios_reach_reference_outcomes() {
    let expectations = [
        (fixtures::CPNO, "cpno", Outcome::Safe),
        (
            fixtures::CPNO_JAM_RADAR_ONLY,
            "cpno_jam_radar_only",
            Outcome::Crash,
        ),
        (fixtures::CPNO_JAM_CONCAT, "cpno_jam_concat", Outcome::Safe),
        (fixtures::CCRS, "ccrs", Outcome::Safe),
        (fixtures::CCRM, "ccrm", Outcome::Safe),
        (fixtures::CCRS_IDEAL, "ccrs_ideal", Outcome::Safe),
    ];
    for (doc, name, expected) in expectations {
        let scenario = load_scenario(doc).unwrap_or_else(|e| panic!("{name} loads: {e}"));
        assert_eq!(scenario.name, name);
        let (_, verdict) = run_once(&scenario, scenario.seed).unwrap();
        assert_eq!(verdict.outcome, expected, "{name} outcome");
        if expected == Outcome::Safe {
            assert!(
                verdict.min_separation_m.is_nan() || verdict.min_separation_m > 0.0,
                "{name} separation"
            );
        }
    }
}

#[test]
fn bundled_sweeps_validate() {
    for doc in [fixtures::JAMMING_SWEEP, fixtures::JAMMING_SWEEP_FALSE_ALARM] {
        let grid = load_sweep(doc).unwrap();
        assert_eq!(grid.cell_count(), 42);
        assert!(
            grid.base.monitors.is_empty(),
            "sweep bases record crash/safe only"
        );
    }
}

#[test]
fn bundled_analysis_documents_load() {
    let model = aebsim::stpa::load_model(fixtures::STPA_MODEL).unwrap();
    assert!(model.structure.validate().is_ok());
    let catalog = aebsim::stpa::load_catalog(fixtures::ATTACK_CATALOG).unwrap();
    assert_eq!(catalog.attack_types.len(), 11);
}
