//! Experiment configuration, presets and the deterministic combination order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::classifiers::Algorithm;
use crate::detectors::DetectorKind;
use crate::energy::EnergyConfig;
use crate::streamgen::{DriftSchedule, DriftType, Generator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmMode {
    /// Stop at the first drift signal.
    #[default]
    FirstAlarm,
    /// Keep feeding the detector to the end of the stream and record every
    /// alarm; scoring and retraining still use the first one.
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub detectors: Vec<DetectorKind>,
    pub generators: Vec<Generator>,
    pub drift_types: Vec<DriftType>,
    pub classifiers: Vec<Algorithm>,
    pub repetitions: usize,
    pub initial_train_len: usize,
    pub eval_start: usize,
    pub seed: u64,
    /// Reuse the stream of repetition 0 for every repetition.
    pub fixed_data: bool,
    pub alarm_mode: AlarmMode,
    pub kswin_seed: u64,
    pub output_dir: PathBuf,
    pub energy: EnergyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::full()
    }
}

/// One cell of the factorial design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Combo {
    pub detector: DetectorKind,
    pub generator: Generator,
    pub drift_type: DriftType,
    pub classifier: Algorithm,
}

impl ExperimentConfig {
    /// Full design: 7 detectors, 5 generators, 2 drift types, 6 classifiers,
    /// 10 repetitions.
    pub fn full() -> Self {
        Self {
            detectors: DetectorKind::ALL.to_vec(),
            generators: Generator::ALL.to_vec(),
            drift_types: DriftType::ALL.to_vec(),
            classifiers: Algorithm::DEFAULT_SIX.to_vec(),
            repetitions: 10,
            initial_train_len: 8_500,
            eval_start: 10_000,
            seed: 0,
            fixed_data: false,
            alarm_mode: AlarmMode::FirstAlarm,
            kswin_seed: 42,
            output_dir: PathBuf::from("results"),
            energy: EnergyConfig::default(),
        }
    }

    /// All detectors on two generators, two fast classifiers, 3 repetitions.
    pub fn reduced() -> Self {
        Self {
            generators: vec![Generator::Sine, Generator::Mixed],
            classifiers: vec![Algorithm::LinearSvm, Algorithm::HoeffdingTree],
            repetitions: 3,
            ..Self::full()
        }
    }

    /// A single iteration.
    pub fn smoke() -> Self {
        Self {
            detectors: vec![DetectorKind::Kswin],
            generators: vec![Generator::Sine],
            drift_types: vec![DriftType::Abrupt],
            classifiers: vec![Algorithm::NaiveBayes],
            repetitions: 1,
            ..Self::full()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "full" => Some(Self::full()),
            "reduced" => Some(Self::reduced()),
            "smoke" => Some(Self::smoke()),
            _ => None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1".into());
        }
        for (name, empty) in [
            ("detectors", self.detectors.is_empty()),
            ("generators", self.generators.is_empty()),
            ("drift_types", self.drift_types.is_empty()),
            ("classifiers", self.classifiers.is_empty()),
        ] {
            if empty {
                return bad(format!("`{name}` must not be empty"));
            }
        }
        if self.initial_train_len == 0 {
            return bad("initial_train_len must be positive".into());
        }
        for &dt in &self.drift_types {
            let first = DriftSchedule::preset(dt).positions[0];
            if self.initial_train_len >= first {
                return bad(format!(
                    "initial_train_len {} must be below the first {dt} drift at {first}",
                    self.initial_train_len
                ));
            }
            if self.eval_start < self.initial_train_len {
                return bad(format!(
                    "eval_start {} is before the end of initial training {}",
                    self.eval_start, self.initial_train_len
                ));
            }
        }
        for (name, v) in [
            ("energy.proxy_watts", self.energy.proxy_watts),
            ("energy.warmup_s", self.energy.warmup_s),
            ("energy.cooldown_s", self.energy.cooldown_s),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        Ok(())
    }

    /// Every combination in run order: detector, generator, drift type,
    /// classifier (repetitions are the innermost loop, see [`Self::runs`]).
    pub fn combos(&self) -> Vec<Combo> {
        let mut out = Vec::new();
        for &detector in &self.detectors {
            for &generator in &self.generators {
                for &drift_type in &self.drift_types {
                    for &classifier in &self.classifiers {
                        out.push(Combo {
                            detector,
                            generator,
                            drift_type,
                            classifier,
                        });
                    }
                }
            }
        }
        out
    }

    /// Every (combination, repetition) pair in run order.
    pub fn runs(&self) -> Vec<(Combo, usize)> {
        self.combos()
            .into_iter()
            .flat_map(|c| (0..self.repetitions).map(move |r| (c, r)))
            .collect()
    }

    pub fn total_runs(&self) -> usize {
        self.detectors.len() * self.generators.len() * self.drift_types.len() * self.classifiers.len() * self.repetitions
    }

    /// Seed of the stream (and of the classifier) for `repetition`.
    pub fn stream_seed(&self, repetition: usize) -> u64 {
        if self.fixed_data {
            self.seed
        } else {
            self.seed ^ repetition as u64
        }
    }

    /// Whether two configs would produce the same non-energy results.
    /// Output directory and timing settings are ignored.
    pub fn same_design(&self, other: &Self) -> bool {
        let strip = |c: &Self| {
            let mut c = c.clone();
            c.output_dir = PathBuf::new();
            c.energy.warmup_s = 0.0;
            c.energy.cooldown_s = 0.0;
            c
        };
        strip(self) == strip(other)
    }
}
