//! CSV stream files with a TOML metadata sidecar.
//!
//! Numeric values are written in Rust's shortest round-trip form, so a read
//! back reproduces every `f64` exactly. Categorical values are written as
//! their symbol names.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    DriftSchedule, DriftType, FeatureKind, FeatureValue, Generator, Instance, LabeledStream,
    StreamError, StreamSpec,
};

/// Contents of the sidecar file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamMetadata {
    pub generator: Generator,
    pub drift_type: DriftType,
    pub seed: u64,
    pub positions: Vec<usize>,
    pub width: usize,
    pub total_length: usize,
}

impl StreamMetadata {
    pub fn from_spec(spec: &StreamSpec) -> Self {
        Self {
            generator: spec.generator,
            drift_type: spec.drift_type,
            seed: spec.seed,
            positions: spec.schedule.positions.clone(),
            width: spec.schedule.width,
            total_length: spec.schedule.total_length,
        }
    }

    pub fn to_spec(&self) -> StreamSpec {
        StreamSpec {
            generator: self.generator,
            drift_type: self.drift_type,
            seed: self.seed,
            schedule: DriftSchedule {
                positions: self.positions.clone(),
                width: self.width,
                total_length: self.total_length,
            },
        }
    }
}

/// `dir/name.csv` -> `dir/name.meta.toml`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.toml")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StreamError + '_ {
    move |source| StreamError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> StreamError + '_ {
    move |source| StreamError::Csv {
        path: path.display().to_string(),
        source,
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> StreamError {
    StreamError::Malformed {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

/// Write `stream` to `path` and its metadata to [`sidecar_path`].
pub fn write_stream_csv(stream: &LabeledStream, path: &Path) -> Result<(), StreamError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let schema = stream.schema();
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header: Vec<String> = (0..schema.len()).map(|k| format!("f{k}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(csv_err(path))?;

    let mut row: Vec<String> = Vec::with_capacity(schema.len() + 1);
    for inst in &stream.instances {
        row.clear();
        for (v, kind) in inst.features.iter().zip(schema) {
            row.push(match (v, kind) {
                (FeatureValue::Num(x), _) => x.to_string(),
                (FeatureValue::Cat(c), FeatureKind::Categorical(symbols)) => symbols[*c as usize].to_string(),
                (FeatureValue::Cat(c), FeatureKind::Numeric) => c.to_string(),
            });
        }
        row.push(inst.label.to_string());
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;

    let meta_path = sidecar_path(path);
    let meta = toml::to_string(&StreamMetadata::from_spec(&stream.spec))
        .map_err(|e| malformed(&meta_path, e.to_string()))?;
    fs::write(&meta_path, meta).map_err(io_err(&meta_path))
}

/// Read a stream written by [`write_stream_csv`]. The sidecar must exist.
pub fn read_stream_csv(path: &Path) -> Result<LabeledStream, StreamError> {
    let meta_path = sidecar_path(path);
    let text = fs::read_to_string(&meta_path).map_err(io_err(&meta_path))?;
    let meta: StreamMetadata = toml::from_str(&text).map_err(|e| malformed(&meta_path, e.to_string()))?;
    let spec = meta.to_spec();
    let schema = spec.generator.schema();

    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?;
    if header.len() != schema.len() + 1 {
        return Err(malformed(
            path,
            format!("expected {} columns, found {}", schema.len() + 1, header.len()),
        ));
    }

    let mut instances = Vec::with_capacity(spec.schedule.total_length);
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let at = |what: &str| malformed(path, format!("row {}: {what}", line + 1));
        let mut features = Vec::with_capacity(schema.len());
        for (field, kind) in rec.iter().zip(schema) {
            features.push(match kind {
                FeatureKind::Numeric => FeatureValue::Num(field.parse().map_err(|_| at("bad number"))?),
                FeatureKind::Categorical(symbols) => FeatureValue::Cat(
                    symbols.iter().position(|s| *s == field).ok_or_else(|| at("unknown symbol"))? as u8,
                ),
            });
        }
        let label = match rec.get(schema.len()) {
            Some("0") => 0,
            Some("1") => 1,
            _ => return Err(at("label must be 0 or 1")),
        };
        instances.push(Instance { features, label });
    }
    if instances.len() != spec.schedule.total_length {
        return Err(malformed(
            path,
            format!("{} rows but metadata says {}", instances.len(), spec.schedule.total_length),
        ));
    }
    Ok(LabeledStream { spec, instances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamgen::generate_stream;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for g in Generator::ALL {
            let spec = StreamSpec::new(g, DriftType::Gradual, 3);
            let stream = generate_stream(&spec).unwrap();
            let path = dir.path().join(format!("{g}.csv"));
            write_stream_csv(&stream, &path).unwrap();
            let text = fs::read_to_string(&path).unwrap();
            assert_eq!(text.lines().count(), spec.schedule.total_length + 1);
            assert_eq!(read_stream_csv(&path).unwrap(), stream);
        }
    }

    #[test]
    fn sidecar_records_gradual_schedule() {
        let dir = tempfile::tempdir().unwrap();
        let stream = generate_stream(&StreamSpec::new(Generator::Sine, DriftType::Gradual, 1)).unwrap();
        let path = dir.path().join("s.csv");
        write_stream_csv(&stream, &path).unwrap();
        let meta: StreamMetadata = toml::from_str(&fs::read_to_string(sidecar_path(&path)).unwrap()).unwrap();
        assert_eq!(meta.positions, vec![9500, 20000, 30500]);
        assert_eq!(meta.width, 1000);
        assert_eq!(meta.total_length, 41000);
    }

    #[test]
    fn abrupt_sine_has_header_plus_40000_rows() {
        let dir = tempfile::tempdir().unwrap();
        let stream = generate_stream(&StreamSpec::new(Generator::Sine, DriftType::Abrupt, 1)).unwrap();
        let path = dir.path().join("s.csv");
        write_stream_csv(&stream, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 40_001);
        assert_eq!(text.lines().next(), Some("f0,f1,label"));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = read_stream_csv(Path::new("/nonexistent/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.meta.toml"));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let stream = generate_stream(&StreamSpec::new(Generator::Sea, DriftType::Abrupt, 1)).unwrap();
        let path = dir.path().join("s.csv");
        write_stream_csv(&stream, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let cut: Vec<&str> = text.lines().take(100).collect();
        fs::write(&path, cut.join("\n")).unwrap();
        assert!(matches!(read_stream_csv(&path), Err(StreamError::Malformed { .. })));
    }
}
