//! Hazard-analysis engine: enumerate unsafe control actions from a declared
//! control/feedback structure, expand them into hazard scenarios via hint
//! words, link a sensor-attack catalog, and concretize the resulting attack
//! templates into runnable scenarios.
//!
//! The engine is generic; the system under analysis, its hazards, the
//! pruning rules, hint words and the attack catalog are all declarative JSON
//! documents. Every emitted template carries its full traceability chain
//! (template → hazard scenario → unsafe control action → control action →
//! hazards → safety constraints).

use crate::attacks::{ActiveWindow, AttackSpec, AttackerFrame, AttackerPosition};
use crate::scenarios::{Scenario, SweepAxis, SweepGrid, FORMAT_VERSION};
use crate::sensors::{ClassLabel, SensorKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error)]
pub enum StpaError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("unresolved template parameters with no scenario slot: {0:?}")]
    MissingBindings(Vec<String>),
    #[error("template '{template}' targets sensor {sensor:?} which the scenario's ego lacks")]
    MissingSensor {
        template: String,
        sensor: SensorKind,
    },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Control structure
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlAction {
    pub id: String,
    pub source: String,
    pub target: String,
    pub label: String,
    /// Free-form tags; "aeb" marks actions counted as AEB-related.
    #[serde(default)]
    pub tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeedbackLink {
    pub id: String,
    pub source: String,
    pub target: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlStructure {
    pub components: Vec<String>,
    pub control_actions: Vec<ControlAction>,
    pub feedback_links: Vec<FeedbackLink>,
}

impl ControlStructure {
    pub fn validate(&self) -> Result<(), StpaError> {
        if self.control_actions.is_empty() {
            return Err(StpaError::Invalid(
                "control structure has no actions".into(),
            ));
        }
        let known: BTreeSet<&str> = self.components.iter().map(String::as_str).collect();
        for action in &self.control_actions {
            for end in [&action.source, &action.target] {
                if !known.contains(end.as_str()) {
                    return Err(StpaError::Invalid(format!(
                        "action '{}' references undeclared component '{end}'",
                        action.id
                    )));
                }
            }
        }
        for link in &self.feedback_links {
            for end in [&link.source, &link.target] {
                if !known.contains(end.as_str()) {
                    return Err(StpaError::Invalid(format!(
                        "feedback '{}' references undeclared component '{end}'",
                        link.id
                    )));
                }
            }
        }
        // Connectivity over the undirected action/feedback graph.
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let edges: Vec<(&str, &str)> = self
            .control_actions
            .iter()
            .map(|a| (a.source.as_str(), a.target.as_str()))
            .chain(
                self.feedback_links
                    .iter()
                    .map(|f| (f.source.as_str(), f.target.as_str())),
            )
            .collect();
        for (a, b) in edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        if let Some(start) = self.components.first() {
            let mut seen = BTreeSet::new();
            let mut stack = vec![start.as_str()];
            while let Some(node) = stack.pop() {
                if seen.insert(node) {
                    if let Some(next) = adj.get(node) {
                        stack.extend(next.iter().copied());
                    }
                }
            }
            if seen.len() != known.len() {
                return Err(StpaError::Invalid(
                    "control structure graph is not connected".into(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// UCAs
// ---------------------------------------------------------------------------

/// The four causal categories of unsafe control actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UcaCategory {
    Providing,
    NotProviding,
    TooEarlyTooLate,
    StoppedTooSoonAppliedTooLong,
}

impl UcaCategory {
    pub const ALL: [UcaCategory; 4] = [
        UcaCategory::Providing,
        UcaCategory::NotProviding,
        UcaCategory::TooEarlyTooLate,
        UcaCategory::StoppedTooSoonAppliedTooLong,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            UcaCategory::Providing => "P",
            UcaCategory::NotProviding => "NP",
            UcaCategory::TooEarlyTooLate => "TET",
            UcaCategory::StoppedTooSoonAppliedTooLong => "SSAL",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hazard {
    pub id: String,
    pub description: String,
    /// Safety constraint enforcing the inverse of this hazard.
    pub safety_constraint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnsafeControlAction {
    pub id: String,
    pub action_id: String,
    pub category: UcaCategory,
    pub hazards: Vec<String>,
    pub rationale: String,
    pub tags: Vec<String>,
}

/// Declarative pruning and enrichment rules for the UCA cross product.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterRules {
    /// `(action, category)` pairs excluded as irrelevant, with a reason.
    pub exclusions: Vec<Exclusion>,
    /// Hazards attributed to each action's UCAs.
    pub hazard_map: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exclusion {
    pub action_id: String,
    pub category: UcaCategory,
    pub reason: String,
}

/// Cross product of control actions and the four categories, pruned by the
/// exclusion rules. Output order: action declaration order, then category
/// order.
pub fn enumerate_ucas(
    structure: &ControlStructure,
    filter: &FilterRules,
) -> Result<Vec<UnsafeControlAction>, StpaError> {
    structure.validate()?;
    let excluded: BTreeSet<(&str, UcaCategory)> = filter
        .exclusions
        .iter()
        .map(|e| (e.action_id.as_str(), e.category))
        .collect();
    let mut out = Vec::new();
    for action in &structure.control_actions {
        for category in UcaCategory::ALL {
            if excluded.contains(&(action.id.as_str(), category)) {
                continue;
            }
            let hazards = filter
                .hazard_map
                .get(&action.id)
                .cloned()
                .unwrap_or_default();
            let phrase = match category {
                UcaCategory::Providing => "providing",
                UcaCategory::NotProviding => "not providing",
                UcaCategory::TooEarlyTooLate => "providing too early or too late",
                UcaCategory::StoppedTooSoonAppliedTooLong => {
                    "stopping too soon or applying too long"
                }
            };
            out.push(UnsafeControlAction {
                id: format!("UCA-{}-{}", action.id, category.code()),
                action_id: action.id.clone(),
                category,
                hazards,
                rationale: format!("{phrase} '{}' can be hazardous in context", action.label),
                tags: action.tags.clone(),
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hazard scenarios
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HintWord {
    pub id: String,
    pub text: String,
}

/// Which hint words apply to which UCAs, with the causal event tags the
/// resulting scenario carries (these tags drive attack linking).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Applicability {
    pub hint_word: String,
    pub uca_id: String,
    pub cause: String,
    /// Event tags matched against the attack catalog's caused events.
    pub event_tags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardScenario {
    pub id: String,
    pub uca_id: String,
    pub hint_word: String,
    pub cause: String,
    pub event_tags: Vec<String>,
}

/// One hazard scenario per applicable (UCA, hint word) pair, in UCA order
/// then hint-word declaration order.
pub fn expand_hazard_scenarios(
    ucas: &[UnsafeControlAction],
    hint_words: &[HintWord],
    applicability: &[Applicability],
) -> Result<Vec<HazardScenario>, StpaError> {
    if hint_words.is_empty() {
        return Err(StpaError::Invalid("hint word list is empty".into()));
    }
    let known_hints: BTreeSet<&str> = hint_words.iter().map(|h| h.id.as_str()).collect();
    let known_ucas: BTreeSet<&str> = ucas.iter().map(|u| u.id.as_str()).collect();
    for rule in applicability {
        if !known_hints.contains(rule.hint_word.as_str()) {
            return Err(StpaError::Invalid(format!(
                "applicability references unknown hint word '{}'",
                rule.hint_word
            )));
        }
        if !known_ucas.contains(rule.uca_id.as_str()) {
            return Err(StpaError::Invalid(format!(
                "applicability references unknown UCA '{}'",
                rule.uca_id
            )));
        }
    }
    let mut out = Vec::new();
    let mut counter = 0usize;
    for uca in ucas {
        for hint in hint_words {
            for rule in applicability {
                if rule.uca_id == uca.id && rule.hint_word == hint.id {
                    counter += 1;
                    out.push(HazardScenario {
                        id: format!("HS{counter:02}"),
                        uca_id: uca.id.clone(),
                        hint_word: hint.id.clone(),
                        cause: rule.cause.clone(),
                        event_tags: rule.event_tags.clone(),
                    });
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Attack catalog and linking
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackType {
    pub id: String,
    /// Event this attack causes; matched against scenario event tags.
    pub caused_event: String,
    pub sensor: SensorKind,
    pub description: String,
    /// Citation keys into the catalog's reference list.
    #[serde(default)]
    pub references: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackCatalog {
    pub attack_types: Vec<AttackType>,
    #[serde(default)]
    pub references: BTreeMap<String, String>,
}

impl AttackCatalog {
    pub fn validate(&self) -> Result<(), StpaError> {
        let mut seen = BTreeSet::new();
        for at in &self.attack_types {
            if !seen.insert(at.id.as_str()) {
                return Err(StpaError::Invalid(format!(
                    "duplicate attack type id '{}'",
                    at.id
                )));
            }
        }
        Ok(())
    }
}

/// Parameters a template leaves unresolved until it is embedded in an
/// operational scenario.
pub const UNRESOLVED_RADAR: [&str; 3] = ["attacker_distance_m", "tx_power_dbm", "window_s"];
pub const UNRESOLVED_CAMERA: [&str; 2] = ["patch_position_m", "window_s"];
pub const UNRESOLVED_LIDAR: [&str; 2] = ["sector_rad", "window_s"];

/// Full traceability chain carried by every template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceabilityChain {
    pub hazard_scenario: String,
    pub uca: String,
    pub control_action: String,
    pub hazards: Vec<String>,
    pub safety_constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScenarioTemplate {
    pub id: String,
    pub hazard_scenario_id: String,
    pub attack_type_id: String,
    pub sensor: SensorKind,
    pub unresolved_parameters: Vec<String>,
    pub target_constraints: Vec<String>,
    pub chain: TraceabilityChain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub templates: Vec<AttackScenarioTemplate>,
    /// Hazard scenarios no attack type matched, never silently dropped.
    pub uncovered: Vec<String>,
}

/// One template per (hazard scenario, matching attack type) pair. A type
/// matches when its caused event appears among the scenario's event tags.
pub fn link_attacks(
    scenarios: &[HazardScenario],
    ucas: &[UnsafeControlAction],
    hazards: &[Hazard],
    catalog: &AttackCatalog,
) -> Result<LinkReport, StpaError> {
    catalog.validate()?;
    let uca_by_id: BTreeMap<&str, &UnsafeControlAction> =
        ucas.iter().map(|u| (u.id.as_str(), u)).collect();
    let hazard_by_id: BTreeMap<&str, &Hazard> =
        hazards.iter().map(|h| (h.id.as_str(), h)).collect();

    let mut templates = Vec::new();
    let mut uncovered = Vec::new();
    let mut counter = 0usize;
    for scenario in scenarios {
        let uca = uca_by_id.get(scenario.uca_id.as_str()).ok_or_else(|| {
            StpaError::Invalid(format!("scenario '{}' references unknown UCA", scenario.id))
        })?;
        let constraints: Vec<String> = uca
            .hazards
            .iter()
            .filter_map(|h| {
                hazard_by_id
                    .get(h.as_str())
                    .map(|hz| hz.safety_constraint.clone())
            })
            .collect();
        let mut matched = false;
        for at in &catalog.attack_types {
            if !scenario.event_tags.iter().any(|t| t == &at.caused_event) {
                continue;
            }
            matched = true;
            counter += 1;
            let unresolved = match at.sensor {
                SensorKind::Radar => UNRESOLVED_RADAR.iter(),
                SensorKind::Camera => UNRESOLVED_CAMERA.iter(),
                SensorKind::Lidar => UNRESOLVED_LIDAR.iter(),
            }
            .map(|s| s.to_string())
            .collect();
            templates.push(AttackScenarioTemplate {
                id: format!("AST{counter:03}"),
                hazard_scenario_id: scenario.id.clone(),
                attack_type_id: at.id.clone(),
                sensor: at.sensor,
                unresolved_parameters: unresolved,
                target_constraints: constraints.clone(),
                chain: TraceabilityChain {
                    hazard_scenario: scenario.id.clone(),
                    uca: uca.id.clone(),
                    control_action: uca.action_id.clone(),
                    hazards: uca.hazards.clone(),
                    safety_constraints: constraints.clone(),
                },
            });
        }
        if !matched {
            uncovered.push(scenario.id.clone());
        }
    }
    Ok(LinkReport {
        templates,
        uncovered,
    })
}

// ---------------------------------------------------------------------------
// Concretization
// ---------------------------------------------------------------------------

/// Bind a template's unresolved parameters to the slots an operational
/// scenario exposes. Slots with one value produce a runnable scenario;
/// multi-valued slots become sweep axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Concretized {
    Single(Box<Scenario>),
    Sweep(Box<SweepGrid>),
}

pub fn concretize(
    template: &AttackScenarioTemplate,
    base: &Scenario,
    slots: &crate::scenarios::AttackSlots,
) -> Result<Concretized, StpaError> {
    let sensor = template.sensor;
    if !base.ego.sensors.has_enabled(sensor) {
        return Err(StpaError::MissingSensor {
            template: template.id.clone(),
            sensor,
        });
    }
    let missing: Vec<String> = template
        .unresolved_parameters
        .iter()
        .filter(|p| !slots.contains_key(*p))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(StpaError::MissingBindings(missing));
    }

    let first_f64 = |name: &str| -> f64 { slots[name][0].as_f64().unwrap_or(0.0) };
    let window = |name: &str| -> ActiveWindow {
        let v = &slots[name][0];
        match v.as_array() {
            Some(arr) if arr.len() == 2 => ActiveWindow(
                arr[0].as_f64().unwrap_or(0.0),
                arr[1].as_f64().unwrap_or(f64::MAX),
            ),
            _ => ActiveWindow::default(),
        }
    };

    let attack = match sensor {
        SensorKind::Radar => {
            let attacker = AttackerPosition {
                frame: AttackerFrame::EgoRelative,
                x: first_f64("attacker_distance_m"),
                y: 0.0,
            };
            // The template's attack type selects the radar attack flavor.
            if template.attack_type_id.contains("range") {
                AttackSpec::RadarRangeDeception {
                    attacker,
                    tx_power_dbm: first_f64("tx_power_dbm"),
                    antenna_gain_dbi: 10.0,
                    spoof_range_offset_m: -10.0,
                    active_window_s: window("window_s"),
                }
            } else if template.attack_type_id.contains("velocity") {
                AttackSpec::RadarVelocityDeception {
                    attacker,
                    tx_power_dbm: first_f64("tx_power_dbm"),
                    antenna_gain_dbi: 10.0,
                    spoof_velocity_mps: -5.0,
                    active_window_s: window("window_s"),
                }
            } else {
                AttackSpec::RadarDenialJamming {
                    attacker,
                    tx_power_dbm: first_f64("tx_power_dbm"),
                    antenna_gain_dbi: 10.0,
                    active_window_s: window("window_s"),
                }
            }
        }
        SensorKind::Camera => AttackSpec::CameraAdversarialPatch {
            attacker: AttackerPosition {
                frame: AttackerFrame::World,
                x: first_f64("patch_position_m"),
                y: 0.0,
            },
            patch_classes: vec![ClassLabel::Pedestrian],
            active_window_s: window("window_s"),
        },
        SensorKind::Lidar => {
            let v = &slots["sector_rad"][0];
            let sector = match v.as_array() {
                Some(arr) if arr.len() == 2 => (
                    arr[0].as_f64().unwrap_or(-0.1),
                    arr[1].as_f64().unwrap_or(0.1),
                ),
                _ => (-0.1, 0.1),
            };
            AttackSpec::LidarBlinding {
                sector_rad: sector,
                active_window_s: window("window_s"),
            }
        }
    };

    let mut scenario = base.clone();
    scenario.name = format!("{}+{}", base.name, template.id);
    scenario.attacks.push(attack);
    let attack_idx = scenario.attacks.len() - 1;
    scenario
        .validate()
        .map_err(|e| StpaError::Invalid(e.to_string()))?;

    // Multi-valued slots become sweep axes in slot-name order.
    let mut axes = Vec::new();
    for (slot, values) in slots {
        if values.len() < 2 {
            continue;
        }
        let path = match (sensor, slot.as_str()) {
            (SensorKind::Radar, "attacker_distance_m") => {
                format!("/attacks/{attack_idx}/attacker/x")
            }
            (SensorKind::Radar, "tx_power_dbm") => format!("/attacks/{attack_idx}/tx_power_dbm"),
            (SensorKind::Camera, "patch_position_m") => {
                format!("/attacks/{attack_idx}/attacker/x")
            }
            _ => continue,
        };
        axes.push(SweepAxis {
            path,
            values: values.clone(),
        });
    }

    if axes.is_empty() {
        Ok(Concretized::Single(Box::new(scenario)))
    } else {
        let grid = SweepGrid {
            format_version: FORMAT_VERSION,
            name: format!("{}-sweep", scenario.name),
            base: scenario,
            axes,
        };
        grid.validate()
            .map_err(|e| StpaError::Invalid(e.to_string()))?;
        Ok(Concretized::Sweep(Box::new(grid)))
    }
}

// ---------------------------------------------------------------------------
// Model bundle and analysis driver
// ---------------------------------------------------------------------------

/// Everything the analysis needs about the system under study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StpaModel {
    pub structure: ControlStructure,
    pub hazards: Vec<Hazard>,
    pub filter_rules: FilterRules,
    pub hint_words: Vec<HintWord>,
    pub applicability: Vec<Applicability>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub ucas: Vec<UnsafeControlAction>,
    pub hazard_scenarios: Vec<HazardScenario>,
    pub templates: Vec<AttackScenarioTemplate>,
    pub uncovered: Vec<String>,
}

pub fn analyze(model: &StpaModel, catalog: &AttackCatalog) -> Result<AnalysisResult, StpaError> {
    let ucas = enumerate_ucas(&model.structure, &model.filter_rules)?;
    let scenarios = expand_hazard_scenarios(&ucas, &model.hint_words, &model.applicability)?;
    let report = link_attacks(&scenarios, &ucas, &model.hazards, catalog)?;
    Ok(AnalysisResult {
        ucas,
        hazard_scenarios: scenarios,
        templates: report.templates,
        uncovered: report.uncovered,
    })
}

pub fn load_model(document: &str) -> Result<StpaModel, StpaError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    serde_path_to_error::deserialize(de).map_err(|e| StpaError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn load_catalog(document: &str) -> Result<AttackCatalog, StpaError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let catalog: AttackCatalog =
        serde_path_to_error::deserialize(de).map_err(|e| StpaError::Schema {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    catalog.validate()?;
    Ok(catalog)
}

/// Human-readable linking report: one row per template in the layout
/// `Hazard scenario | Attack | Target constraint`, then the uncovered list.
pub fn render_report(result: &AnalysisResult, catalog: &AttackCatalog) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "UCAs: {} ({} AEB-related)\nHazard scenarios: {}\nAttack scenario templates: {}\n\n",
        result.ucas.len(),
        result
            .ucas
            .iter()
            .filter(|u| u.tags.iter().any(|t| t == "aeb"))
            .count(),
        result.hazard_scenarios.len(),
        result.templates.len(),
    ));
    out.push_str(&format!(
        "{:<44} | {:<38} | {}\n",
        "Hazard scenario", "Attack", "Target constraint"
    ));
    out.push_str(&"-".repeat(100));
    out.push('\n');
    let scenario_by_id: BTreeMap<&str, &HazardScenario> = result
        .hazard_scenarios
        .iter()
        .map(|s| (s.id.as_str(), s))
        .collect();
    let attack_by_id: BTreeMap<&str, &AttackType> = catalog
        .attack_types
        .iter()
        .map(|a| (a.id.as_str(), a))
        .collect();
    for template in &result.templates {
        let cause = scenario_by_id
            .get(template.hazard_scenario_id.as_str())
            .map(|s| s.cause.as_str())
            .unwrap_or("?");
        let attack = attack_by_id
            .get(template.attack_type_id.as_str())
            .map(|a| a.description.as_str())
            .unwrap_or("?");
        let constraints = template.target_constraints.join(",");
        out.push_str(&format!(
            "{:<44} | {:<38} | {}\n",
            format!("{}: {}", template.hazard_scenario_id, truncate(cause, 38)),
            truncate(attack, 38),
            constraints
        ));
    }
    if !result.uncovered.is_empty() {
        out.push_str("\nUncovered hazard scenarios (no matching attack type):\n");
        for id in &result.uncovered {
            out.push_str(&format!("  {id}\n"));
        }
    }
    out
}

fn truncate(s: &str, n: usize) -> String {
    if s.len() <= n {
        s.to_string()
    } else {
        format!(
            "{}…",
            &s[..s
                .char_indices()
                .take(n - 1)
                .last()
                .map(|(i, c)| i + c.len_utf8())
                .unwrap_or(0)]
        )
    }
}
