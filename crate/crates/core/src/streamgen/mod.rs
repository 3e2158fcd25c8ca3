//! Synthetic binary-classification streams with injected concept drift.
//!
//! Each generator has one base concept. Drift reverses the label: at index
//! `i` the label is the base label XOR the parity of the drifts in effect.
//! Abrupt drift switches parity exactly at a schedule position; gradual
//! drift mixes old and new parity over `width` instances with a linear ramp.
//!
//! Feature draws and gradual-drift coin flips use separate streams of the
//! portable generator ([`crate::rng::PortableRng`]), so an abrupt and a
//! gradual stream with the same seed share their features.

pub mod concepts;
mod io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use concepts::RandomTree;
pub use io::{read_stream_csv, sidecar_path, write_stream_csv, StreamMetadata};

use crate::rng::PortableRng;

#[derive(Debug, thiserror::Error)]
pub enum StreamError {
    #[error("invalid drift schedule: {0}")]
    InvalidSchedule(String),
    #[error("unknown {what} `{value}`")]
    Unknown { what: &'static str, value: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("malformed stream file {path}: {reason}")]
    Malformed { path: String, reason: String },
}

/// Kind of one feature position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Numeric,
    /// Categorical with the given symbols; values index into the table.
    Categorical(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FeatureValue {
    Num(f64),
    Cat(u8),
}

impl FeatureValue {
    pub fn as_num(self) -> Option<f64> {
        match self {
            FeatureValue::Num(v) => Some(v),
            FeatureValue::Cat(_) => None,
        }
    }

    pub fn as_cat(self) -> Option<u8> {
        match self {
            FeatureValue::Cat(v) => Some(v),
            FeatureValue::Num(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub features: Vec<FeatureValue>,
    pub label: u8,
}

const BOOLS: [&str; 2] = ["false", "true"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Sine,
    Stagger,
    Mixed,
    Sea,
    Rt,
}

impl Generator {
    pub const ALL: [Generator; 5] = [
        Generator::Sine,
        Generator::Stagger,
        Generator::Mixed,
        Generator::Sea,
        Generator::Rt,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Generator::Sine => "sine",
            Generator::Stagger => "stagger",
            Generator::Mixed => "mixed",
            Generator::Sea => "sea",
            Generator::Rt => "rt",
        }
    }

    pub fn schema(self) -> &'static [FeatureKind] {
        use FeatureKind::*;
        match self {
            Generator::Sine | Generator::Rt => &[Numeric, Numeric],
            Generator::Stagger => &[
                Categorical(&concepts::STAGGER_SIZES),
                Categorical(&concepts::STAGGER_COLORS),
                Categorical(&concepts::STAGGER_SHAPES),
            ],
            Generator::Mixed => &[Numeric, Numeric, Categorical(&BOOLS), Categorical(&BOOLS)],
            Generator::Sea => &[Numeric, Numeric, Numeric],
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Generator {
    type Err = StreamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_lowercase();
        Generator::ALL
            .into_iter()
            .find(|g| g.id() == norm)
            .ok_or_else(|| StreamError::Unknown {
                what: "generator",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftType {
    Abrupt,
    Gradual,
}

impl DriftType {
    pub const ALL: [DriftType; 2] = [DriftType::Abrupt, DriftType::Gradual];

    pub fn id(self) -> &'static str {
        match self {
            DriftType::Abrupt => "abrupt",
            DriftType::Gradual => "gradual",
        }
    }
}

impl fmt::Display for DriftType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DriftType {
    type Err = StreamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "abrupt" => Ok(DriftType::Abrupt),
            "gradual" => Ok(DriftType::Gradual),
            _ => Err(StreamError::Unknown {
                what: "drift type",
                value: s.to_string(),
            }),
        }
    }
}

/// Where drifts happen.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DriftSchedule {
    pub positions: Vec<usize>,
    /// Transition length; 0 for abrupt drift.
    pub width: usize,
    pub total_length: usize,
}

impl DriftSchedule {
    /// Three abrupt drifts in a 40 000-instance stream.
    pub fn abrupt() -> Self {
        Self {
            positions: vec![10_000, 20_000, 30_000],
            width: 0,
            total_length: 40_000,
        }
    }

    /// Three 1 000-wide gradual drifts in a 41 000-instance stream.
    pub fn gradual() -> Self {
        Self {
            positions: vec![9_500, 20_000, 30_500],
            width: 1_000,
            total_length: 41_000,
        }
    }

    pub fn preset(drift_type: DriftType) -> Self {
        match drift_type {
            DriftType::Abrupt => Self::abrupt(),
            DriftType::Gradual => Self::gradual(),
        }
    }

    pub fn validate(&self) -> Result<(), StreamError> {
        for pair in self.positions.windows(2) {
            if pair[0] >= pair[1] {
                return Err(StreamError::InvalidSchedule(format!(
                    "positions must be strictly increasing ({} then {})",
                    pair[0], pair[1]
                )));
            }
            if pair[0] + self.width >= pair[1] {
                return Err(StreamError::InvalidSchedule(format!(
                    "drift at {} with width {} overlaps the drift at {}",
                    pair[0], self.width, pair[1]
                )));
            }
        }
        if let Some(&last) = self.positions.last() {
            if last + self.width >= self.total_length {
                return Err(StreamError::InvalidSchedule(format!(
                    "last drift at {} with width {} does not end before the stream length {}",
                    last, self.width, self.total_length
                )));
            }
        }
        Ok(())
    }

    /// End (exclusive) of the concept that starts at drift `k`: the next
    /// drift position, or the stream length after the last drift.
    pub fn concept_end(&self, k: usize) -> usize {
        self.positions.get(k + 1).copied().unwrap_or(self.total_length)
    }

    /// Number of drifts fully in effect at index `i` (start ≤ i for abrupt,
    /// start + width ≤ i for gradual).
    pub fn settled_parity(&self, i: usize) -> usize {
        self.positions.iter().filter(|&&p| p + self.width <= i).count()
    }

    /// If `i` falls inside a gradual transition, the drift index and the
    /// probability of the post-drift concept there.
    pub fn transition_at(&self, i: usize) -> Option<(usize, f64)> {
        if self.width == 0 {
            return None;
        }
        self.positions
            .iter()
            .position(|&p| p <= i && i < p + self.width)
            .map(|k| (k, (i - self.positions[k]) as f64 / self.width as f64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub generator: Generator,
    pub drift_type: DriftType,
    pub seed: u64,
    pub schedule: DriftSchedule,
}

impl StreamSpec {
    /// Spec with the preset schedule of `drift_type`.
    pub fn new(generator: Generator, drift_type: DriftType, seed: u64) -> Self {
        Self {
            generator,
            drift_type,
            seed,
            schedule: DriftSchedule::preset(drift_type),
        }
    }
}

/// A generated stream together with the spec that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledStream {
    pub spec: StreamSpec,
    pub instances: Vec<Instance>,
}

impl LabeledStream {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn schema(&self) -> &'static [FeatureKind] {
        self.spec.generator.schema()
    }

    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        self.instances.iter().map(|x| x.label)
    }
}

const FEATURE_STREAM: u64 = 0;
const MIXING_STREAM: u64 = 1;

/// Features and base-concept label of one draw.
fn draw(generator: Generator, rng: &mut PortableRng, tree: Option<&RandomTree>) -> (Vec<FeatureValue>, u8) {
    use FeatureValue::{Cat, Num};
    match generator {
        Generator::Sine => {
            let (x1, x2) = (rng.uniform(), rng.uniform());
            (vec![Num(x1), Num(x2)], concepts::sine(x1, x2))
        }
        Generator::Stagger => {
            let size = rng.below(3) as u8;
            let color = rng.below(3) as u8;
            let shape = rng.below(3) as u8;
            (vec![Cat(size), Cat(color), Cat(shape)], concepts::stagger(size, color, shape))
        }
        Generator::Mixed => {
            let (x1, x2) = (rng.uniform(), rng.uniform());
            let x3 = rng.below(2) == 1;
            let x4 = rng.below(2) == 1;
            (
                vec![Num(x1), Num(x2), Cat(x3 as u8), Cat(x4 as u8)],
                concepts::mixed(x1, x2, x3, x4),
            )
        }
        Generator::Sea => {
            let x1 = rng.uniform_in(0.0, 10.0);
            let x2 = rng.uniform_in(0.0, 10.0);
            let x3 = rng.uniform_in(0.0, 10.0);
            (vec![Num(x1), Num(x2), Num(x3)], concepts::sea(x1, x2, x3))
        }
        Generator::Rt => {
            let (x1, x2) = (rng.uniform(), rng.uniform());
            let tree = tree.expect("RT streams carry a tree");
            (vec![Num(x1), Num(x2)], tree.label(x1, x2))
        }
    }
}

/// Generate the full stream described by `spec`.
pub fn generate_stream(spec: &StreamSpec) -> Result<LabeledStream, StreamError> {
    spec.schedule.validate()?;
    let mut features_rng = PortableRng::new(spec.seed, FEATURE_STREAM);
    let mut mixing_rng = PortableRng::new(spec.seed, MIXING_STREAM);
    let tree = (spec.generator == Generator::Rt).then(|| RandomTree::from_seed(spec.seed));
    let sched = &spec.schedule;
    let instances = (0..sched.total_length)
        .map(|i| {
            let (features, base) = draw(spec.generator, &mut features_rng, tree.as_ref());
            let coin = mixing_rng.uniform();
            let mut parity = sched.settled_parity(i);
            if let Some((_, post_prob)) = sched.transition_at(i) {
                if coin < post_prob {
                    parity += 1;
                }
            }
            Instance {
                features,
                label: base ^ (parity % 2) as u8,
            }
        })
        .collect();
    Ok(LabeledStream {
        spec: spec.clone(),
        instances,
    })
}

/// Base-concept label of an instance, ignoring drift.
pub fn base_label(generator: Generator, instance: &Instance, tree: Option<&RandomTree>) -> u8 {
    let num = |k: usize| instance.features[k].as_num().unwrap_or(f64::NAN);
    let cat = |k: usize| instance.features[k].as_cat().unwrap_or(u8::MAX);
    match generator {
        Generator::Sine => concepts::sine(num(0), num(1)),
        Generator::Stagger => concepts::stagger(cat(0), cat(1), cat(2)),
        Generator::Mixed => concepts::mixed(num(0), num(1), cat(2) == 1, cat(3) == 1),
        Generator::Sea => concepts::sea(num(0), num(1), num(2)),
        Generator::Rt => tree.expect("RT needs its tree").label(num(0), num(1)),
    }
}
