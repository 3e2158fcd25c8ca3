//! Error-rate concept drift detectors.
//!
//! Every detector is an incremental state machine fed one value per
//! instance, normally the binary error signal (1 = misprediction). After an
//! update that reports [`Status::Drift`], the next update starts from a
//! fresh state, so a detector can be driven through a whole stream and its
//! alarm trace collected.
//!
//! Default parameters and update rules follow the river library (0.23), and
//! traces are checked against river exports in the test suite.

mod adwin;
mod ddm;
mod eddm;
mod hddm_a;
mod hddm_w;
mod kswin;
mod page_hinkley;
pub mod pyrandom;
pub mod running;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use adwin::{Adwin, AdwinParams};
pub use ddm::{Ddm, DdmParams};
pub use eddm::{Eddm, EddmParams};
pub use hddm_a::{HddmA, HddmAParams};
pub use hddm_w::{HddmW, HddmWParams};
pub use kswin::{ks_two_sample, ks_two_sample_pvalue, Kswin, KswinParams};
pub use page_hinkley::{PageHinkley, PageHinkleyParams};

use crate::par::{self, Execution};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DetectorError {
    #[error("invalid detector parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown detector `{0}`")]
    UnknownDetector(String),
}

/// Detector output after one update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Stable,
    Warning,
    Drift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Adwin,
    Ddm,
    Eddm,
    HddmA,
    HddmW,
    Kswin,
    PageHinkley,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 7] = [
        DetectorKind::Adwin,
        DetectorKind::Ddm,
        DetectorKind::Eddm,
        DetectorKind::HddmA,
        DetectorKind::HddmW,
        DetectorKind::Kswin,
        DetectorKind::PageHinkley,
    ];

    /// Identifier used in config files and CSV columns.
    pub fn id(self) -> &'static str {
        match self {
            DetectorKind::Adwin => "adwin",
            DetectorKind::Ddm => "ddm",
            DetectorKind::Eddm => "eddm",
            DetectorKind::HddmA => "hddm_a",
            DetectorKind::HddmW => "hddm_w",
            DetectorKind::Kswin => "kswin",
            DetectorKind::PageHinkley => "page_hinkley",
        }
    }

    /// Conventional display name.
    pub fn label(self) -> &'static str {
        match self {
            DetectorKind::Adwin => "ADWIN",
            DetectorKind::Ddm => "DDM",
            DetectorKind::Eddm => "EDDM",
            DetectorKind::HddmA => "HDDM_A",
            DetectorKind::HddmW => "HDDM_W",
            DetectorKind::Kswin => "KSWIN",
            DetectorKind::PageHinkley => "PageHinkley",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DetectorKind {
    type Err = DetectorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.id() == norm || k.label().to_ascii_lowercase() == norm)
            .ok_or_else(|| DetectorError::UnknownDetector(s.to_string()))
    }
}

/// Common interface of the incremental detectors.
pub trait DriftDetector {
    fn kind(&self) -> DetectorKind;

    /// Feed one observation and return the resulting status.
    fn update(&mut self, x: f64) -> Status;

    /// Restore the freshly constructed state (same parameters).
    fn reset(&mut self);

    /// Updates consumed since construction or the last reset, including
    /// the implicit reset that follows a drift.
    fn updates_seen(&self) -> u64;

    /// Elementary inner-loop steps performed by the most recent update.
    fn last_update_ops(&self) -> usize;
}

/// Any of the seven detectors, dispatched statically.
#[derive(Debug, Clone)]
pub enum Detector {
    Adwin(Adwin),
    Ddm(Ddm),
    Eddm(Eddm),
    HddmA(HddmA),
    HddmW(HddmW),
    Kswin(Kswin),
    PageHinkley(PageHinkley),
}

/// Construction options that are not part of a detector's statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorOptions {
    /// Seed of KSWIN's reference-subsample generator.
    pub kswin_seed: u64,
}

impl Default for DetectorOptions {
    fn default() -> Self {
        Self { kswin_seed: 42 }
    }
}

impl Detector {
    /// Detector with the library default parameters.
    pub fn with_defaults(kind: DetectorKind, opts: DetectorOptions) -> Self {
        match kind {
            DetectorKind::Adwin => Detector::Adwin(Adwin::default()),
            DetectorKind::Ddm => Detector::Ddm(Ddm::default()),
            DetectorKind::Eddm => Detector::Eddm(Eddm::default()),
            DetectorKind::HddmA => Detector::HddmA(HddmA::default()),
            DetectorKind::HddmW => Detector::HddmW(HddmW::default()),
            DetectorKind::Kswin => Detector::Kswin(
                Kswin::new(KswinParams {
                    seed: opts.kswin_seed,
                    ..KswinParams::default()
                })
                .expect("default KSWIN parameters are valid"),
            ),
            DetectorKind::PageHinkley => Detector::PageHinkley(PageHinkley::default()),
        }
    }

    fn inner(&self) -> &dyn DriftDetector {
        match self {
            Detector::Adwin(d) => d,
            Detector::Ddm(d) => d,
            Detector::Eddm(d) => d,
            Detector::HddmA(d) => d,
            Detector::HddmW(d) => d,
            Detector::Kswin(d) => d,
            Detector::PageHinkley(d) => d,
        }
    }
}

impl DriftDetector for Detector {
    fn kind(&self) -> DetectorKind {
        self.inner().kind()
    }

    #[inline]
    fn update(&mut self, x: f64) -> Status {
        match self {
            Detector::Adwin(d) => d.update(x),
            Detector::Ddm(d) => d.update(x),
            Detector::Eddm(d) => d.update(x),
            Detector::HddmA(d) => d.update(x),
            Detector::HddmW(d) => d.update(x),
            Detector::Kswin(d) => d.update(x),
            Detector::PageHinkley(d) => d.update(x),
        }
    }

    fn reset(&mut self) {
        match self {
            Detector::Adwin(d) => d.reset(),
            Detector::Ddm(d) => d.reset(),
            Detector::Eddm(d) => d.reset(),
            Detector::HddmA(d) => d.reset(),
            Detector::HddmW(d) => d.reset(),
            Detector::Kswin(d) => d.reset(),
            Detector::PageHinkley(d) => d.reset(),
        }
    }

    fn updates_seen(&self) -> u64 {
        self.inner().updates_seen()
    }

    fn last_update_ops(&self) -> usize {
        self.inner().last_update_ops()
    }
}

/// Indices at which `detector` reports drift over `signal`.
pub fn alarm_trace<D: DriftDetector + ?Sized>(detector: &mut D, signal: &[f64]) -> Vec<usize> {
    signal
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| (detector.update(x) == Status::Drift).then_some(i))
        .collect()
}

/// Alarm traces of one fresh default detector per stream.
pub fn alarm_traces(
    kind: DetectorKind,
    opts: DetectorOptions,
    streams: &[Vec<f64>],
    exec: Execution,
) -> Vec<Vec<usize>> {
    par::map(exec, streams, |s| {
        let mut d = Detector::with_defaults(kind, opts);
        alarm_trace(&mut d, s)
    })
}

/// Error signal for a (prediction, label) pair.
#[inline]
pub fn error_signal(predicted: u8, actual: u8) -> f64 {
    if predicted == actual {
        0.0
    } else {
        1.0
    }
}
