//! Statistical analysis of a results file: pairwise detector energy tests,
//! abrupt vs gradual tests, alarm accuracy aggregates, classifier
//! correlations and normality checks.
//!
//! Cells without enough data carry a `note` and empty values instead of
//! numbers.

use serde::{Deserialize, Serialize};

use super::results::ResultRow;
use crate::classifiers::Algorithm;
use crate::detectors::DetectorKind;
use crate::metrics::{aggregate_alarms, AlarmOutcome};
use crate::par::{self, Execution};
use crate::stats;
use crate::streamgen::DriftType;

/// Significance level for adjusted p-values.
pub const ALPHA: f64 = 0.05;

const SHAPIRO_MAX_N: usize = 5_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMeasure {
    Detection,
    Retrain,
    /// Detection plus retraining, with no retraining counted as zero.
    Combined,
}

impl EnergyMeasure {
    pub const ALL: [EnergyMeasure; 3] = [EnergyMeasure::Detection, EnergyMeasure::Retrain, EnergyMeasure::Combined];

    pub fn id(self) -> &'static str {
        match self {
            EnergyMeasure::Detection => "detection",
            EnergyMeasure::Retrain => "retrain",
            EnergyMeasure::Combined => "combined",
        }
    }

    fn of(self, row: &ResultRow) -> Option<f64> {
        match self {
            EnergyMeasure::Detection => Some(row.detect_energy_j),
            EnergyMeasure::Retrain => row.retrain_energy_j,
            EnergyMeasure::Combined => Some(row.combined_energy_j()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRow {
    pub measure: EnergyMeasure,
    /// The detector with the higher mean.
    pub detector_1: DetectorKind,
    pub detector_2: DetectorKind,
    pub n_1: usize,
    pub n_2: usize,
    pub u_statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub p_holm: Option<f64>,
    pub mean_1: Option<f64>,
    pub mean_2: Option<f64>,
    pub pct_difference: Option<f64>,
    pub cohens_d: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftTypeRow {
    pub detector: DetectorKind,
    pub n_abrupt: usize,
    pub n_gradual: usize,
    pub u_statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub p_holm: Option<f64>,
    pub mean_abrupt: Option<f64>,
    pub mean_gradual: Option<f64>,
    pub pct_difference: Option<f64>,
    /// Absolute effect size.
    pub cohens_d: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmRow {
    pub detector: DetectorKind,
    pub drift_type: DriftType,
    pub true_count: usize,
    pub false_count: usize,
    pub missed_count: usize,
    pub true_alarm_pct: f64,
    pub mean_closeness: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationTarget {
    DetectionEnergy,
    Closeness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub target: CorrelationTarget,
    /// `None` pools all detectors.
    pub detector: Option<DetectorKind>,
    pub n: usize,
    pub rho: Option<f64>,
    pub p_value: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityRow {
    pub detector: DetectorKind,
    pub n: usize,
    pub w: Option<f64>,
    pub p_value: Option<f64>,
    pub note: Option<String>,
}

/// Ordinal encoding of classifiers used by the correlation tests: rank 1
/// has the lowest mean training energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierRank {
    pub classifier: Algorithm,
    pub mean_train_energy_j: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisReport {
    pub pairwise: Vec<PairwiseRow>,
    pub drift_types: Vec<DriftTypeRow>,
    pub alarms: Vec<AlarmRow>,
    pub classifier_ranks: Vec<ClassifierRank>,
    pub correlations: Vec<CorrelationRow>,
    pub normality: Vec<NormalityRow>,
}

impl AnalysisReport {
    pub fn pairwise_for(&self, measure: EnergyMeasure) -> impl Iterator<Item = &PairwiseRow> {
        self.pairwise.iter().filter(move |r| r.measure == measure)
    }

    pub fn alarm_row(&self, detector: DetectorKind, drift_type: DriftType) -> Option<&AlarmRow> {
        self.alarms
            .iter()
            .find(|r| r.detector == detector && r.drift_type == drift_type)
    }

    pub fn pair(&self, measure: EnergyMeasure, a: DetectorKind, b: DetectorKind) -> Option<&PairwiseRow> {
        self.pairwise_for(measure)
            .find(|r| (r.detector_1, r.detector_2) == (a, b) || (r.detector_1, r.detector_2) == (b, a))
    }
}

/// Two-sample comparison shared by both energy tables.
struct Comparison {
    u: Option<f64>,
    p: Option<f64>,
    mean_a: Option<f64>,
    mean_b: Option<f64>,
    pct: Option<f64>,
    d: Option<f64>,
    notes: Vec<String>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

fn compare(a: &[f64], b: &[f64]) -> Comparison {
    let mut notes = Vec::new();
    let (mut u, mut p) = (None, None);
    if a.is_empty() || b.is_empty() {
        notes.push(format!("insufficient rows ({} vs {})", a.len(), b.len()));
    } else {
        match stats::mann_whitney_u(a, b) {
            Ok(t) => {
                u = Some(t.statistic);
                p = Some(t.p_value);
            }
            Err(e) => notes.push(format!("U test: {e}")),
        }
    }
    let (mean_a, mean_b) = (mean(a), mean(b));
    let pct = match (mean_a, mean_b) {
        (Some(x), Some(y)) => stats::pct_difference(x, y).map_err(|e| notes.push(format!("difference: {e}"))).ok(),
        _ => None,
    };
    let d = if a.is_empty() || b.is_empty() {
        None
    } else {
        stats::cohens_d(a, b).map_err(|e| notes.push(format!("Cohen's d: {e}"))).ok()
    };
    Comparison {
        u,
        p,
        mean_a,
        mean_b,
        pct,
        d,
        notes,
    }
}

fn joined(notes: Vec<String>) -> Option<String> {
    (!notes.is_empty()).then(|| notes.join("; "))
}

/// Holm adjustment over the defined entries, leaving the rest `None`.
fn holm_sparse(ps: &[Option<f64>]) -> Vec<Option<f64>> {
    let defined: Vec<f64> = ps.iter().flatten().copied().collect();
    let adjusted = stats::holm_bonferroni(&defined).expect("p-values from tests lie in [0, 1]");
    let mut it = adjusted.into_iter();
    ps.iter().map(|p| p.and_then(|_| it.next())).collect()
}

fn detectors_present(rows: &[ResultRow]) -> Vec<DetectorKind> {
    DetectorKind::ALL
        .into_iter()
        .filter(|k| rows.iter().any(|r| r.detector == *k))
        .collect()
}

fn energies(rows: &[ResultRow], measure: EnergyMeasure, keep: impl Fn(&ResultRow) -> bool) -> Vec<f64> {
    rows.iter().filter(|r| keep(r)).filter_map(|r| measure.of(r)).collect()
}

fn desc(a: Option<f64>, b: Option<f64>) -> std::cmp::Ordering {
    match (a, b) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    }
}

pub fn pairwise_tests(rows: &[ResultRow], measure: EnergyMeasure, exec: Execution) -> Vec<PairwiseRow> {
    let dets = detectors_present(rows);
    let pairs: Vec<(DetectorKind, DetectorKind)> = dets
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| dets[i + 1..].iter().map(move |&b| (a, b)))
        .collect();
    let mut out: Vec<PairwiseRow> = par::map(exec, &pairs, |&(a, b)| {
        let xa = energies(rows, measure, |r| r.detector == a);
        let xb = energies(rows, measure, |r| r.detector == b);
        let c = compare(&xa, &xb);
        // put the higher mean first
        let swap = matches!((c.mean_a, c.mean_b), (Some(x), Some(y)) if y > x);
        let (d1, d2, n1, n2, m1, m2) = if swap {
            (b, a, xb.len(), xa.len(), c.mean_b, c.mean_a)
        } else {
            (a, b, xa.len(), xb.len(), c.mean_a, c.mean_b)
        };
        PairwiseRow {
            measure,
            detector_1: d1,
            detector_2: d2,
            n_1: n1,
            n_2: n2,
            u_statistic: c.u.map(|u| if swap { (n1 * n2) as f64 - u } else { u }),
            p_value: c.p,
            p_holm: None,
            mean_1: m1,
            mean_2: m2,
            pct_difference: c.pct,
            cohens_d: c.d.map(|d| if swap { -d } else { d }),
            note: joined(c.notes),
        }
    });
    let adjusted = holm_sparse(&out.iter().map(|r| r.p_value).collect::<Vec<_>>());
    for (r, p) in out.iter_mut().zip(adjusted) {
        r.p_holm = p;
    }
    out.sort_by(|x, y| desc(x.pct_difference, y.pct_difference));
    out
}

pub fn drift_type_tests(rows: &[ResultRow]) -> Vec<DriftTypeRow> {
    let mut out: Vec<DriftTypeRow> = detectors_present(rows)
        .into_iter()
        .map(|det| {
            let ab = energies(rows, EnergyMeasure::Detection, |r| {
                r.detector == det && r.drift_type == DriftType::Abrupt
            });
            let gr = energies(rows, EnergyMeasure::Detection, |r| {
                r.detector == det && r.drift_type == DriftType::Gradual
            });
            let c = compare(&ab, &gr);
            DriftTypeRow {
                detector: det,
                n_abrupt: ab.len(),
                n_gradual: gr.len(),
                u_statistic: c.u,
                p_value: c.p,
                p_holm: None,
                mean_abrupt: c.mean_a,
                mean_gradual: c.mean_b,
                pct_difference: c.pct,
                cohens_d: c.d.map(f64::abs),
                note: joined(c.notes),
            }
        })
        .collect();
    let adjusted = holm_sparse(&out.iter().map(|r| r.p_value).collect::<Vec<_>>());
    for (r, p) in out.iter_mut().zip(adjusted) {
        r.p_holm = p;
    }
    // significant rows by effect size, then the rest by difference
    let significant = |r: &DriftTypeRow| r.p_holm.is_some_and(|p| p < ALPHA);
    out.sort_by(|x, y| {
        significant(y)
            .cmp(&significant(x))
            .then_with(|| {
                if significant(x) {
                    desc(x.cohens_d, y.cohens_d)
                } else {
                    desc(x.pct_difference, y.pct_difference)
                }
            })
    });
    out
}

pub fn alarm_table(rows: &[ResultRow]) -> Vec<AlarmRow> {
    let mut out = Vec::new();
    for det in detectors_present(rows) {
        for dt in DriftType::ALL {
            let outcomes: Vec<AlarmOutcome> = rows
                .iter()
                .filter(|r| r.detector == det && r.drift_type == dt)
                .map(|r| AlarmOutcome {
                    kind: r.alarm_kind,
                    detected_index: r.detected_index,
                    drift_index: 0,
                    closeness: r.closeness,
                })
                .collect();
            if let Ok(s) = aggregate_alarms(&outcomes) {
                out.push(AlarmRow {
                    detector: det,
                    drift_type: dt,
                    true_count: s.true_count,
                    false_count: s.false_count,
                    missed_count: s.missed_count,
                    true_alarm_pct: s.true_alarm_pct,
                    mean_closeness: s.mean_closeness,
                });
            }
        }
    }
    out.sort_by(|a, b| b.true_alarm_pct.total_cmp(&a.true_alarm_pct));
    out
}

pub fn classifier_ranks(rows: &[ResultRow]) -> Vec<ClassifierRank> {
    let mut means: Vec<(Algorithm, f64)> = Algorithm::ALL
        .into_iter()
        .filter_map(|alg| {
            let xs: Vec<f64> = rows.iter().filter(|r| r.classifier == alg).map(|r| r.train_energy_j).collect();
            mean(&xs).map(|m| (alg, m))
        })
        .collect();
    means.sort_by(|a, b| a.1.total_cmp(&b.1));
    means
        .into_iter()
        .enumerate()
        .map(|(i, (classifier, m))| ClassifierRank {
            classifier,
            mean_train_energy_j: m,
            rank: i + 1,
        })
        .collect()
}

fn correlation(
    rows: &[ResultRow],
    ranks: &[ClassifierRank],
    target: CorrelationTarget,
    detector: Option<DetectorKind>,
) -> CorrelationRow {
    let rank_of = |alg: Algorithm| ranks.iter().find(|r| r.classifier == alg).map(|r| r.rank as f64);
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| detector.is_none_or(|d| r.detector == d))
        .filter_map(|r| {
            let y = match target {
                CorrelationTarget::DetectionEnergy => Some(r.detect_energy_j),
                CorrelationTarget::Closeness => r.closeness,
            }?;
            Some((rank_of(r.classifier)?, y))
        })
        .unzip();
    let (rho, p_value, note) = match stats::spearman(&xs, &ys) {
        Ok(t) => (Some(t.statistic), Some(t.p_value), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    CorrelationRow {
        target,
        detector,
        n: xs.len(),
        rho,
        p_value,
        note,
    }
}

pub fn classifier_correlations(rows: &[ResultRow], ranks: &[ClassifierRank]) -> Vec<CorrelationRow> {
    let scopes: Vec<Option<DetectorKind>> = std::iter::once(None)
        .chain(detectors_present(rows).into_iter().map(Some))
        .collect();
    let mut out = Vec::new();
    if rows.is_empty() {
        return out;
    }
    for target in [CorrelationTarget::DetectionEnergy, CorrelationTarget::Closeness] {
        for &scope in &scopes {
            out.push(correlation(rows, ranks, target, scope));
        }
    }
    out
}

pub fn normality(rows: &[ResultRow]) -> Vec<NormalityRow> {
    detectors_present(rows)
        .into_iter()
        .map(|det| {
            let xs = energies(rows, EnergyMeasure::Detection, |r| r.detector == det);
            let (w, p_value, note) = if xs.len() > SHAPIRO_MAX_N {
                (None, None, Some(format!("{} samples exceed the supported {SHAPIRO_MAX_N}", xs.len())))
            } else {
                match stats::shapiro_wilk(&xs) {
                    Ok(t) => (Some(t.statistic), Some(t.p_value), None),
                    Err(e) => (None, None, Some(e.to_string())),
                }
            };
            NormalityRow {
                detector: det,
                n: xs.len(),
                w,
                p_value,
                note,
            }
        })
        .collect()
}

pub fn analyze(rows: &[ResultRow]) -> AnalysisReport {
    analyze_with(rows, Execution::default())
}

pub fn analyze_with(rows: &[ResultRow], exec: Execution) -> AnalysisReport {
    let pairwise = EnergyMeasure::ALL
        .into_iter()
        .flat_map(|m| pairwise_tests(rows, m, exec))
        .collect();
    let classifier_ranks = classifier_ranks(rows);
    AnalysisReport {
        pairwise,
        drift_types: drift_type_tests(rows),
        alarms: alarm_table(rows),
        correlations: classifier_correlations(rows, &classifier_ranks),
        classifier_ranks,
        normality: normality(rows),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::Provider;
    use crate::metrics::AlarmKind;
    use crate::streamgen::Generator;

    fn row(det: DetectorKind, dt: DriftType, energy: f64) -> ResultRow {
        ResultRow {
            detector: det,
            generator: Generator::Sine,
            drift_type: dt,
            classifier: Algorithm::NaiveBayes,
            repetition: 0,
            train_energy_j: 1.0,
            train_acc: 0.9,
            detect_energy_j: energy,
            alarm_kind: AlarmKind::Missed,
            detected_index: None,
            closeness: None,
            pre_retrain_acc: None,
            retrain_energy_j: None,
            retrain_acc: None,
            provider: Provider::CpuTimeProxy,
            alarm_indices: vec![],
        }
    }

    #[test]
    fn empty_input_gives_empty_tables() {
        assert_eq!(analyze(&[]), AnalysisReport::default());
    }

    #[test]
    fn higher_mean_listed_first_and_sorted() {
        let mut rows = Vec::new();
        for i in 0..20 {
            let x = 1.0 + i as f64 * 0.01;
            rows.push(row(DetectorKind::Ddm, DriftType::Abrupt, x));
            rows.push(row(DetectorKind::Kswin, DriftType::Abrupt, 5.0 * x));
            rows.push(row(DetectorKind::Adwin, DriftType::Abrupt, 2.0 * x));
        }
        let t = pairwise_tests(&rows, EnergyMeasure::Detection, Execution::Sequential);
        let order: Vec<_> = t.iter().map(|r| (r.detector_1, r.detector_2)).collect();
        assert_eq!(
            order,
            vec![
                (DetectorKind::Kswin, DetectorKind::Ddm),
                (DetectorKind::Kswin, DetectorKind::Adwin),
                (DetectorKind::Adwin, DetectorKind::Ddm),
            ]
        );
        assert!(t.iter().all(|r| r.cohens_d.unwrap() > 0.0 && r.mean_1 > r.mean_2));
        assert!((t[0].pct_difference.unwrap() - 80.0).abs() < 1e-9);
        // no overlap at all: U of the larger group is n1*n2
        assert_eq!(t[0].u_statistic, Some(400.0));
    }

    #[test]
    fn missing_retrain_rows_are_flagged() {
        let rows = vec![
            row(DetectorKind::Ddm, DriftType::Abrupt, 1.0),
            row(DetectorKind::Eddm, DriftType::Abrupt, 2.0),
        ];
        let t = pairwise_tests(&rows, EnergyMeasure::Retrain, Execution::Sequential);
        assert_eq!(t.len(), 1);
        assert!(t[0].p_holm.is_none() && t[0].mean_1.is_none());
        assert!(t[0].note.as_deref().unwrap().contains("insufficient rows (0 vs 0)"));
    }

    #[test]
    fn drift_type_table_orders_significant_first() {
        let mut rows = Vec::new();
        for i in 0..30 {
            let x = 1.0 + (i % 7) as f64 * 0.1;
            rows.push(row(DetectorKind::Eddm, DriftType::Abrupt, x));
            rows.push(row(DetectorKind::Eddm, DriftType::Gradual, x + 1.0));
            rows.push(row(DetectorKind::Ddm, DriftType::Abrupt, x));
            rows.push(row(DetectorKind::Ddm, DriftType::Gradual, x));
        }
        let t = drift_type_tests(&rows);
        assert_eq!(t[0].detector, DetectorKind::Eddm);
        assert!(t[0].p_holm.unwrap() < ALPHA);
        assert_eq!(t[1].p_holm, Some(1.0));
        assert_eq!(t[1].pct_difference, Some(0.0));
    }

    #[test]
    fn classifier_ranks_follow_training_energy() {
        let mut a = row(DetectorKind::Ddm, DriftType::Abrupt, 1.0);
        a.classifier = Algorithm::Knn;
        a.train_energy_j = 0.1;
        let mut b = a.clone();
        b.classifier = Algorithm::RandomForest;
        b.train_energy_j = 5.0;
        let ranks = classifier_ranks(&[b, a]);
        assert_eq!(ranks[0].classifier, Algorithm::Knn);
        assert_eq!(ranks[1].rank, 2);
    }
}
