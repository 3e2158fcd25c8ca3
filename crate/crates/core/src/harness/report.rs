//! CSV export/import of analysis tables and the markdown report.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::analysis::{
    AlarmRow, AnalysisReport, ClassifierRank, CorrelationRow, CorrelationTarget, DriftTypeRow, EnergyMeasure,
    NormalityRow, PairwiseRow, ALPHA,
};
use super::HarnessError;

pub const PAIRWISE_FILE: &str = "pairwise_energy.csv";
pub const DRIFT_TYPE_FILE: &str = "drift_type_energy.csv";
pub const ALARMS_FILE: &str = "alarm_accuracy.csv";
pub const RANKS_FILE: &str = "classifier_ranks.csv";
pub const CORRELATIONS_FILE: &str = "classifier_correlations.csv";
pub const NORMALITY_FILE: &str = "normality.csv";

fn write_table<T: Serialize>(dir: &Path, name: &str, rows: &[T], header: &[&str]) -> Result<(), HarnessError> {
    let path = dir.join(name);
    let csv_err = |source| HarnessError::Csv {
        path: path.display().to_string(),
        source,
    };
    // explicit header so empty tables still describe their columns
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(&path)
        .map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(&path, e))
}

fn read_table<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<Vec<T>, HarnessError> {
    let path = dir.join(name);
    let csv_err = |source| HarnessError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut r = csv::Reader::from_path(&path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

const PAIRWISE_HEADER: [&str; 13] = [
    "measure",
    "detector_1",
    "detector_2",
    "n_1",
    "n_2",
    "u_statistic",
    "p_value",
    "p_holm",
    "mean_1",
    "mean_2",
    "pct_difference",
    "cohens_d",
    "note",
];
const DRIFT_TYPE_HEADER: [&str; 11] = [
    "detector",
    "n_abrupt",
    "n_gradual",
    "u_statistic",
    "p_value",
    "p_holm",
    "mean_abrupt",
    "mean_gradual",
    "pct_difference",
    "cohens_d",
    "note",
];
const ALARMS_HEADER: [&str; 7] = [
    "detector",
    "drift_type",
    "true_count",
    "false_count",
    "missed_count",
    "true_alarm_pct",
    "mean_closeness",
];
const RANKS_HEADER: [&str; 3] = ["classifier", "mean_train_energy_j", "rank"];
const CORRELATIONS_HEADER: [&str; 6] = ["target", "detector", "n", "rho", "p_value", "note"];
const NORMALITY_HEADER: [&str; 5] = ["detector", "n", "w", "p_value", "note"];

/// Write every table of `report` as CSV into `dir`.
pub fn write_tables(report: &AnalysisReport, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_table(dir, PAIRWISE_FILE, &report.pairwise, &PAIRWISE_HEADER)?;
    write_table(dir, DRIFT_TYPE_FILE, &report.drift_types, &DRIFT_TYPE_HEADER)?;
    write_table(dir, ALARMS_FILE, &report.alarms, &ALARMS_HEADER)?;
    write_table(dir, RANKS_FILE, &report.classifier_ranks, &RANKS_HEADER)?;
    write_table(dir, CORRELATIONS_FILE, &report.correlations, &CORRELATIONS_HEADER)?;
    write_table(dir, NORMALITY_FILE, &report.normality, &NORMALITY_HEADER)
}

pub fn read_tables(dir: &Path) -> Result<AnalysisReport, HarnessError> {
    Ok(AnalysisReport {
        pairwise: read_table::<PairwiseRow>(dir, PAIRWISE_FILE)?,
        drift_types: read_table::<DriftTypeRow>(dir, DRIFT_TYPE_FILE)?,
        alarms: read_table::<AlarmRow>(dir, ALARMS_FILE)?,
        classifier_ranks: read_table::<ClassifierRank>(dir, RANKS_FILE)?,
        correlations: read_table::<CorrelationRow>(dir, CORRELATIONS_FILE)?,
        normality: read_table::<NormalityRow>(dir, NORMALITY_FILE)?,
    })
}

fn md_escape(s: &str) -> String {
    s.replace('_', "\\_")
}

fn sci(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.3e}"))
}

fn fixed(x: Option<f64>, digits: usize) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.digits$}"))
}

fn p_cell(p: Option<f64>) -> String {
    match p {
        Some(v) if v < ALPHA => format!("**{v:.2e}**"),
        Some(v) => format!("{v:.2e}"),
        None => "n/a".into(),
    }
}

fn table_header(out: &mut String, cols: &[&str]) {
    let _ = writeln!(out, "| {} |", cols.join(" | "));
    let _ = writeln!(out, "|{}", cols.iter().map(|_| "---|").collect::<String>());
}

fn measure_title(m: EnergyMeasure) -> &'static str {
    match m {
        EnergyMeasure::Detection => "detection energy",
        EnergyMeasure::Retrain => "retraining energy",
        EnergyMeasure::Combined => "detection plus retraining energy",
    }
}

/// Markdown with the pairwise, accuracy and drift-type tables followed by
/// correlation and normality results.
pub fn render_markdown(report: &AnalysisReport) -> String {
    let mut out = String::from("# Drift detector benchmark report\n\n");
    let _ = writeln!(
        out,
        "p-values are Holm-Bonferroni adjusted; bold marks p < {ALPHA}. Energies are in joules.\n"
    );

    for m in EnergyMeasure::ALL {
        let _ = writeln!(out, "## Pairwise Mann-Whitney U tests on {}\n", measure_title(m));
        table_header(
            &mut out,
            &[
                "Detector 1",
                "Detector 2",
                "p-value",
                "Detector 1 Mean",
                "Detector 2 Mean",
                "Difference (%)",
                "Cohen's d",
            ],
        );
        for r in report.pairwise_for(m) {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                md_escape(r.detector_1.label()),
                md_escape(r.detector_2.label()),
                p_cell(r.p_holm),
                sci(r.mean_1),
                sci(r.mean_2),
                fixed(r.pct_difference, 1),
                fixed(r.cohens_d, 2),
            );
        }
        out.push('\n');
    }

    out.push_str("## Alarm accuracy by detector and drift type\n\n");
    table_header(
        &mut out,
        &[
            "Drift Detector",
            "Drift Type",
            "# of True Alarms",
            "# of False Alarms",
            "# of Missed Alarms",
            "True Alarm %",
            "Mean Detection Closeness",
        ],
    );
    for r in &report.alarms {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {:.1} | {} |",
            md_escape(r.detector.label()),
            r.drift_type,
            r.true_count,
            r.false_count,
            r.missed_count,
            r.true_alarm_pct,
            fixed(r.mean_closeness, 3),
        );
    }
    out.push('\n');

    out.push_str("## Detection energy by drift type\n\n");
    table_header(
        &mut out,
        &[
            "Detector",
            "Type 1",
            "Type 2",
            "p-value",
            "T1 Mean",
            "T2 Mean",
            "Difference (%)",
            "Cohen's d",
        ],
    );
    for r in &report.drift_types {
        let significant = r.p_holm.is_some_and(|p| p < ALPHA);
        let _ = writeln!(
            out,
            "| {} | abrupt | gradual | {} | {} | {} | {} | {} |",
            md_escape(r.detector.label()),
            p_cell(r.p_holm),
            sci(r.mean_abrupt),
            sci(r.mean_gradual),
            fixed(r.pct_difference, 1),
            if significant { fixed(r.cohens_d, 2) } else { "--".into() },
        );
    }
    out.push('\n');

    out.push_str("## Classifier correlations (Spearman)\n\n");
    out.push_str("Classifiers are ranked by mean training energy (1 = lowest).\n\n");
    table_header(&mut out, &["Classifier", "Mean Training Energy", "Rank"]);
    for r in &report.classifier_ranks {
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            md_escape(r.classifier.id()),
            sci(Some(r.mean_train_energy_j)),
            r.rank
        );
    }
    out.push('\n');
    table_header(&mut out, &["Target", "Detectors", "n", "rho", "p-value", "Note"]);
    for r in &report.correlations {
        let target = match r.target {
            CorrelationTarget::DetectionEnergy => "detection energy",
            CorrelationTarget::Closeness => "closeness",
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} |",
            target,
            r.detector.map_or("all".to_string(), |d| md_escape(d.label())),
            r.n,
            fixed(r.rho, 3),
            r.p_value.map_or("n/a".into(), |p| format!("{p:.2e}")),
            r.note.as_deref().unwrap_or(""),
        );
    }
    out.push('\n');

    out.push_str("## Normality of detection energy (Shapiro-Wilk)\n\n");
    table_header(&mut out, &["Detector", "n", "W", "p-value", "Note"]);
    for r in &report.normality {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} |",
            md_escape(r.detector.label()),
            r.n,
            fixed(r.w, 4),
            r.p_value.map_or("n/a".into(), |p| format!("{p:.2e}")),
            r.note.as_deref().unwrap_or(""),
        );
    }
    out
}
