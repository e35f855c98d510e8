//! Result emission: per-run trace CSV and verdict JSON, sweep matrices as
//! CSV, JSON and SVG heatmaps. Every emitted file embeds tool version and
//! scenario hash so results stay attributable to their inputs.

use crate::monitors::{Outcome, RunTrace, Verdict};
use crate::runner::SweepResult;
use crate::scenarios::Scenario;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum EmitError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn write_file(path: &Path, contents: &str) -> Result<(), EmitError> {
    std::fs::write(path, contents).map_err(|source| EmitError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Column order of the trace CSV. Documented here and in the README; tests
/// pin it.
pub const TRACE_COLUMNS: [&str; 19] = [
    "tick",
    "time_s",
    "ego_x_m",
    "ego_y_m",
    "ego_speed_mps",
    "brake_stage",
    "brake_decel_mps2",
    "oracle_stage",
    "oracle_decel_mps2",
    "mio_range_m",
    "mio_range_rate_mps",
    "mio_lateral_m",
    "n_radar",
    "n_camera",
    "n_lidar",
    "n_confirmed_tracks",
    "true_in_path_range_m",
    "target_separation_m",
    "radar_extra_noise_dbm",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Tick-per-row trace CSV with the `TRACE_COLUMNS` order.
pub fn trace_to_csv(trace: &RunTrace) -> String {
    let mut out = String::new();
    out.push_str(&TRACE_COLUMNS.join(","));
    out.push('\n');
    for row in &trace.rows {
        let (mio_range, mio_rate, mio_lateral) = match row.mio {
            Some((r, rr, lat)) => (Some(r), Some(rr), Some(lat)),
            None => (None, None, None),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.tick,
            row.time_s,
            row.ego_x,
            row.ego_y,
            row.ego_speed,
            row.stage.as_str(),
            row.decel,
            row.oracle_stage.as_str(),
            row.oracle_decel,
            opt(mio_range),
            opt(mio_rate),
            opt(mio_lateral),
            row.n_radar,
            row.n_camera,
            row.n_lidar,
            row.n_confirmed_tracks,
            opt(row.true_in_path_range),
            opt(row.target_separation),
            opt(row.radar_extra_noise_dbm),
        );
    }
    out
}

#[derive(Serialize)]
struct VerdictRecord<'a> {
    verdict: &'a Verdict,
    scenario: &'a str,
    seed: u64,
    scenario_hash: String,
    tool_version: &'static str,
}

/// Verdict JSON with provenance.
pub fn verdict_to_json(verdict: &Verdict, scenario: &Scenario, seed: u64) -> String {
    let record = VerdictRecord {
        verdict,
        scenario: &scenario.name,
        seed,
        scenario_hash: crate::runner::scenario_hash(scenario),
        tool_version: env!("CARGO_PKG_VERSION"),
    };
    serde_json::to_string_pretty(&record).expect("verdict serializes")
}

/// Write trace.csv and verdict.json for one run into `dir`.
pub fn emit_run(
    dir: &Path,
    trace: &RunTrace,
    verdict: &Verdict,
    scenario: &Scenario,
    seed: u64,
) -> Result<(), EmitError> {
    write_file(&dir.join("trace.csv"), &trace_to_csv(trace))?;
    write_file(
        &dir.join("verdict.json"),
        &verdict_to_json(verdict, scenario, seed),
    )?;
    Ok(())
}

fn outcome_token(outcome: &Outcome) -> &'static str {
    match outcome {
        Outcome::Safe => "Safe",
        Outcome::Crash => "Crash",
        Outcome::ConstraintViolated => "ConstraintViolated",
        Outcome::StoppedTooSoon => "StoppedTooSoon",
        Outcome::ModelError => "ModelError",
    }
}

/// Sweep outcomes as a CSV matrix.
///
/// For two axes the first axis runs down the rows and the second across
/// the columns, with axis values as headers. Other dimensionalities emit a
/// long-format table (one cell per row).
pub fn sweep_to_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# sweep={} base_seed={} scenario_hash={} tool_version={}",
        result.name, result.base_seed, result.scenario_hash, result.tool_version
    );
    let shape = result.shape();
    if shape.len() == 2 {
        let (rows_axis, cols_axis) = (&result.axes[0], &result.axes[1]);
        out.push_str(&format!("{}\\{}", rows_axis.0, cols_axis.0));
        for v in &cols_axis.1 {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
        for (i, row_value) in rows_axis.1.iter().enumerate() {
            let _ = write!(out, "{row_value}");
            for j in 0..cols_axis.1.len() {
                let cell = &result.cells[i * cols_axis.1.len() + j];
                let _ = write!(out, ",{}", outcome_token(&cell.outcome));
            }
            out.push('\n');
        }
    } else {
        let header: Vec<String> = result.axes.iter().map(|(p, _)| p.clone()).collect();
        let _ = writeln!(out, "{},outcome", header.join(","));
        for cell in &result.cells {
            let coords: Vec<String> = cell
                .coords
                .iter()
                .enumerate()
                .map(|(axis, &idx)| result.axes[axis].1[idx].to_string())
                .collect();
            let _ = writeln!(out, "{},{}", coords.join(","), outcome_token(&cell.outcome));
        }
    }
    out
}

/// Full sweep result as JSON; re-parses into an equal `SweepResult`.
pub fn sweep_to_json(result: &SweepResult) -> String {
    serde_json::to_string_pretty(result).expect("sweep serializes")
}

fn outcome_color(outcome: &Outcome) -> &'static str {
    match outcome {
        Outcome::Safe => "#2e9e4f",
        Outcome::Crash => "#c0392b",
        Outcome::ConstraintViolated => "#e67e22",
        Outcome::StoppedTooSoon => "#e6b422",
        Outcome::ModelError => "#7f8c8d",
    }
}

/// SVG heatmap of a two-axis sweep: one colored cell per grid point with
/// axis labels and a legend. Falls back to a single row for 1-D sweeps.
pub fn sweep_to_svg(result: &SweepResult) -> String {
    let shape = result.shape();
    let (n_rows, n_cols, row_labels, col_labels) = match shape.len() {
        2 => (
            shape[0],
            shape[1],
            result.axes[0]
                .1
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>(),
            result.axes[1]
                .1
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>(),
        ),
        _ => (
            1,
            result.cells.len(),
            vec![String::new()],
            (0..result.cells.len()).map(|i| i.to_string()).collect(),
        ),
    };
    let cell = 46usize;
    let left = 90usize;
    let top = 60usize;
    let legend_h = 30usize;
    let width = left + n_cols * cell + 24;
    let height = top + n_rows * cell + 60 + legend_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        svg,
        r#"<title>{} (seed {}, hash {}, v{})</title>"#,
        result.name,
        result.base_seed,
        &result.scenario_hash[..12.min(result.scenario_hash.len())],
        result.tool_version
    );
    let _ = writeln!(
        svg,
        r#"<text x="{left}" y="20" font-size="14" font-weight="bold">{}</text>"#,
        result.name
    );
    if result.axes.len() == 2 {
        let _ = writeln!(
            svg,
            r#"<text x="{left}" y="40">{} ↓ / {} →</text>"#,
            result.axes[0].0, result.axes[1].0
        );
    }
    for (j, label) in col_labels.iter().enumerate() {
        let x = left + j * cell + cell / 2;
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" text-anchor="middle">{label}</text>"#,
            top - 6
        );
    }
    for (i, label) in row_labels.iter().enumerate() {
        let y = top + i * cell + cell / 2 + 4;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{y}" text-anchor="end">{label}</text>"#,
            left - 8
        );
    }
    for (idx, cell_result) in result.cells.iter().enumerate() {
        let (i, j) = if shape.len() == 2 {
            (idx / n_cols, idx % n_cols)
        } else {
            (0, idx)
        };
        let x = left + j * cell;
        let y = top + i * cell;
        let color = outcome_color(&cell_result.outcome);
        let tip = format!(
            "coords {:?}: {} (min sep {:.2} m)",
            cell_result.coords,
            outcome_token(&cell_result.outcome),
            cell_result.min_separation_m
        );
        let _ = writeln!(
            svg,
            r##"<rect class="cell" x="{x}" y="{y}" width="{w}" height="{w}" fill="{color}" stroke="#ffffff"><title>{tip}</title></rect>"##,
            w = cell - 2,
        );
    }
    // Legend.
    let mut lx = left;
    let ly = top + n_rows * cell + 24;
    for outcome in [
        Outcome::Safe,
        Outcome::Crash,
        Outcome::StoppedTooSoon,
        Outcome::ConstraintViolated,
        Outcome::ModelError,
    ] {
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{ly}" width="14" height="14" fill="{}"/><text x="{}" y="{}">{}</text>"#,
            outcome_color(&outcome),
            lx + 18,
            ly + 12,
            outcome_token(&outcome)
        );
        lx += 150;
    }
    svg.push_str("</svg>\n");
    svg
}

/// Write sweep.json, sweep.csv and sweep.svg into `dir`.
pub fn emit_sweep(dir: &Path, result: &SweepResult) -> Result<(), EmitError> {
    write_file(&dir.join("sweep.json"), &sweep_to_json(result))?;
    write_file(&dir.join("sweep.csv"), &sweep_to_csv(result))?;
    write_file(&dir.join("sweep.svg"), &sweep_to_svg(result))?;
    Ok(())
}
