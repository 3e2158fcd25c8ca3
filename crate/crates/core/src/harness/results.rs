//! The flat results CSV: one row per iteration, schema version in a
//! leading comment line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::classifiers::Algorithm;
use crate::detectors::DetectorKind;
use crate::energy::Provider;
use crate::metrics::AlarmKind;
use crate::streamgen::{DriftType, Generator};

pub const SCHEMA_COMMENT: &str = "# driftbench results v1";

pub const COLUMNS: [&str; 16] = [
    "detector",
    "generator",
    "drift_type",
    "classifier",
    "repetition",
    "train_energy_j",
    "train_acc",
    "detect_energy_j",
    "alarm_kind",
    "detected_index",
    "closeness",
    "pre_retrain_acc",
    "retrain_energy_j",
    "retrain_acc",
    "provider",
    "alarm_indices",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub detector: DetectorKind,
    pub generator: Generator,
    pub drift_type: DriftType,
    pub classifier: Algorithm,
    pub repetition: usize,
    pub train_energy_j: f64,
    pub train_acc: f64,
    pub detect_energy_j: f64,
    pub alarm_kind: AlarmKind,
    pub detected_index: Option<usize>,
    pub closeness: Option<f64>,
    pub pre_retrain_acc: Option<f64>,
    pub retrain_energy_j: Option<f64>,
    pub retrain_acc: Option<f64>,
    pub provider: Provider,
    /// Every alarm the detector raised, space separated. Only differs from
    /// `detected_index` in continuous mode.
    #[serde(with = "index_list")]
    pub alarm_indices: Vec<usize>,
}

impl ResultRow {
    /// Copy with all measured energies zeroed, for comparing runs.
    pub fn without_energy(&self) -> Self {
        Self {
            train_energy_j: 0.0,
            detect_energy_j: 0.0,
            retrain_energy_j: self.retrain_energy_j.map(|_| 0.0),
            ..self.clone()
        }
    }

    /// Detection plus retraining energy (retraining counts as zero when it
    /// did not happen).
    pub fn combined_energy_j(&self) -> f64 {
        self.detect_energy_j + self.retrain_energy_j.unwrap_or(0.0)
    }
}

mod index_list {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<String> = v.iter().map(|i| i.to_string()).collect();
        s.serialize_str(&text.join(" "))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let text = String::deserialize(d)?;
        text.split_whitespace()
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Appends rows, flushing after each one so a crash loses at most the
/// row being written.
pub struct ResultsWriter {
    inner: csv::Writer<File>,
    path: String,
}

impl ResultsWriter {
    /// Start a new file (truncating any existing one).
    pub fn create(path: &Path) -> Result<Self, HarnessError> {
        let mut file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        writeln!(file, "{SCHEMA_COMMENT}").map_err(|e| HarnessError::io(path, e))?;
        let mut w = Self::wrap(file, path);
        w.inner.write_record(COLUMNS).map_err(|e| w.csv_err(e))?;
        w.inner.flush().map_err(|e| HarnessError::io(path, e))?;
        Ok(w)
    }

    /// Continue an existing file that ends with a complete row.
    pub fn append(path: &Path) -> Result<Self, HarnessError> {
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        Ok(Self::wrap(file, path))
    }

    fn wrap(file: File, path: &Path) -> Self {
        Self {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(file),
            path: path.display().to_string(),
        }
    }

    fn csv_err(&self, source: csv::Error) -> HarnessError {
        HarnessError::Csv {
            path: self.path.clone(),
            source,
        }
    }

    pub fn write(&mut self, row: &ResultRow) -> Result<(), HarnessError> {
        self.inner.serialize(row).map_err(|e| self.csv_err(e))?;
        self.inner.flush().map_err(|e| HarnessError::Io {
            path: self.path.clone(),
            source: e,
        })
    }
}

fn check_header(path: &Path, lines: &[&str]) -> Result<(), HarnessError> {
    let malformed = |reason: String| HarnessError::Malformed {
        path: path.display().to_string(),
        reason,
    };
    match lines.first() {
        Some(&SCHEMA_COMMENT) => {}
        Some(other) => return Err(malformed(format!("expected `{SCHEMA_COMMENT}`, found `{other}`"))),
        None => return Err(malformed("empty file".into())),
    }
    let expected = COLUMNS.join(",");
    match lines.get(1) {
        Some(h) if *h == expected => Ok(()),
        Some(h) => Err(malformed(format!("unexpected header `{h}`"))),
        None => Err(malformed("missing header".into())),
    }
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, HarnessError> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut head = Vec::new();
    for line in BufReader::new(file).lines().take(2) {
        head.push(line.map_err(|e| HarnessError::io(path, e))?);
    }
    let head: Vec<&str> = head.iter().map(|s| s.trim_end_matches('\r')).collect();
    check_header(path, &head)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| HarnessError::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
    reader
        .deserialize()
        .map(|r| {
            r.map_err(|e| HarnessError::Csv {
                path: path.display().to_string(),
                source: e,
            })
        })
        .collect()
}

/// Make `path` resumable: drop a trailing partial row and return the number
/// of complete rows. A file without a full header is treated as empty and
/// removed.
pub fn prepare_resume(path: &Path) -> Result<usize, HarnessError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
        Err(e) => return Err(HarnessError::io(path, e)),
    };
    let complete = text.rfind('\n').map_or(0, |i| i + 1);
    let lines: Vec<&str> = text[..complete].lines().collect();
    if lines.len() < 2 {
        std::fs::remove_file(path).map_err(|e| HarnessError::io(path, e))?;
        return Ok(0);
    }
    check_header(path, &lines)?;
    if complete < text.len() {
        log::warn!(
            "dropping a partial trailing row ({} bytes) from {}",
            text.len() - complete,
            path.display()
        );
        let file = OpenOptions::new()
            .write(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        file.set_len(complete as u64).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(lines.len() - 2)
}
