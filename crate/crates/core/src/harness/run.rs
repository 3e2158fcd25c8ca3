//! The measured iteration and the experiment loop around it.

use std::path::PathBuf;

use super::config::{AlarmMode, Combo, ExperimentConfig};
use super::results::{prepare_resume, ResultRow, ResultsWriter};
use super::HarnessError;
use crate::classifiers::{self, accuracy_of};
use crate::detectors::{error_signal, Detector, DetectorOptions, DriftDetector, Status};
use crate::energy::{cooldown_sleep, EnergyMeter, EnergySample, Provider};
use crate::metrics::{classify_alarm, AlarmOutcome};
use crate::par::Execution;
use crate::streamgen::{generate_stream, StreamSpec};

/// Instances after the alarm used to score the retrained model.
pub const RETRAIN_EVAL_LEN: usize = 1_000;

pub const RESULTS_FILE: &str = "results.csv";
pub const RUN_CONFIG_FILE: &str = "run_config.toml";

#[derive(Debug, Clone, PartialEq)]
pub struct IterationResult {
    pub combo: Combo,
    pub repetition: usize,
    pub train_energy: EnergySample,
    pub train_accuracy: f64,
    pub detection_energy: EnergySample,
    pub outcome: AlarmOutcome,
    pub alarm_indices: Vec<usize>,
    pub pre_retrain_accuracy: Option<f64>,
    pub retrain_energy: Option<EnergySample>,
    pub retrain_accuracy: Option<f64>,
    pub warnings: Vec<String>,
}

impl IterationResult {
    pub fn to_row(&self) -> ResultRow {
        ResultRow {
            detector: self.combo.detector,
            generator: self.combo.generator,
            drift_type: self.combo.drift_type,
            classifier: self.combo.classifier,
            repetition: self.repetition,
            train_energy_j: self.train_energy.joules,
            train_acc: self.train_accuracy,
            detect_energy_j: self.detection_energy.joules,
            alarm_kind: self.outcome.kind,
            detected_index: self.outcome.detected_index,
            closeness: self.outcome.closeness,
            pre_retrain_acc: self.pre_retrain_accuracy,
            retrain_energy_j: self.retrain_energy.map(|s| s.joules),
            retrain_acc: self.retrain_accuracy,
            provider: self.detection_energy.provider,
            alarm_indices: self.alarm_indices.clone(),
        }
    }
}

/// One iteration with the combination's default detector.
pub fn run_iteration(
    combo: Combo,
    repetition: usize,
    config: &ExperimentConfig,
    meter: &EnergyMeter,
) -> Result<IterationResult, HarnessError> {
    let mut detector = Detector::with_defaults(
        combo.detector,
        DetectorOptions {
            kswin_seed: config.kswin_seed,
        },
    );
    run_iteration_with(combo, repetition, config, meter, &mut detector)
}

/// One iteration feeding the error signal to `detector`.
///
/// Predictions for the monitored part of the stream are computed before the
/// detection region starts, so the detection energy covers detector updates
/// only.
pub fn run_iteration_with<D: DriftDetector + ?Sized>(
    combo: Combo,
    repetition: usize,
    config: &ExperimentConfig,
    meter: &EnergyMeter,
    detector: &mut D,
) -> Result<IterationResult, HarnessError> {
    let seed = config.stream_seed(repetition);
    let stream = generate_stream(&StreamSpec::new(combo.generator, combo.drift_type, seed))?;
    let schema = stream.schema();
    let data = &stream.instances;
    let schedule = &stream.spec.schedule;
    let start = config.initial_train_len;
    let mut warnings = Vec::new();

    let (fitted, train_energy) =
        meter.measure(|| classifiers::fit_range(combo.classifier, data, 0..start, schema, seed))?;
    let model = fitted?;
    let train_accuracy = model.accuracy(&data[..start])?;

    let preds = model.predict_batch(&data[start..], Execution::Sequential)?;
    let errors: Vec<f64> = preds
        .iter()
        .zip(&data[start..])
        .map(|(&p, inst)| error_signal(p, inst.label))
        .collect();

    let stop_at_first = config.alarm_mode == AlarmMode::FirstAlarm;
    let (alarm_indices, detection_energy) = meter.measure(|| {
        let mut alarms = Vec::new();
        for (i, &e) in errors.iter().enumerate() {
            if detector.update(e) == Status::Drift {
                alarms.push(start + i);
                if stop_at_first {
                    break;
                }
            }
        }
        alarms
    })?;

    let detected = alarm_indices.first().copied();
    let outcome = classify_alarm(detected, schedule, 0)?;

    let (mut pre_retrain_accuracy, mut retrain_energy, mut retrain_accuracy) = (None, None, None);
    if let Some(at) = detected {
        if at > config.eval_start {
            let lo = config.eval_start - start;
            pre_retrain_accuracy = Some(accuracy_of(&preds[lo..at - start], &data[config.eval_start..at]));
        }
        let (refit, energy) = meter.measure(|| classifiers::fit_range(combo.classifier, data, 0..at, schema, seed))?;
        retrain_energy = Some(energy);
        match refit {
            Ok(m) => {
                let end = (at + RETRAIN_EVAL_LEN).min(data.len());
                retrain_accuracy = Some(m.accuracy(&data[at..end])?);
            }
            Err(e) => warnings.push(format!("retraining on [0, {at}) failed: {e}")),
        }
    }
    for w in &warnings {
        log::warn!("{combo:?} rep {repetition}: {w}");
    }

    Ok(IterationResult {
        combo,
        repetition,
        train_energy,
        train_accuracy,
        detection_energy,
        outcome,
        alarm_indices,
        pre_retrain_accuracy,
        retrain_energy,
        retrain_accuracy,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Continue an existing results file instead of starting over.
    pub resume: bool,
    /// Stop after writing this many new rows.
    pub stop_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub results_path: PathBuf,
    pub total_runs: usize,
    pub skipped: usize,
    pub written: usize,
    pub complete: bool,
    pub provider: Provider,
    pub guard_trips: u64,
    pub warnings: usize,
}

/// Run every (combination, repetition) with a meter built from the config.
pub fn run_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<RunSummary, HarnessError> {
    let meter = EnergyMeter::from_config(&config.energy);
    run_experiment_with_meter(config, opts, &meter)
}

pub fn run_experiment_with_meter(
    config: &ExperimentConfig,
    opts: RunOptions,
    meter: &EnergyMeter,
) -> Result<RunSummary, HarnessError> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let results_path = dir.join(RESULTS_FILE);
    let config_path = dir.join(RUN_CONFIG_FILE);

    let mut done = 0;
    if opts.resume && results_path.exists() {
        let previous = ExperimentConfig::load(&config_path)
            .map_err(|e| HarnessError::Resume(format!("cannot read {}: {e}", config_path.display())))?;
        if !previous.same_design(config) {
            return Err(HarnessError::Resume(format!(
                "{} was produced by a different configuration",
                results_path.display()
            )));
        }
        done = prepare_resume(&results_path)?;
    }
    let runs = config.runs();
    if done > runs.len() {
        return Err(HarnessError::Resume(format!(
            "{} holds {done} rows but the design has only {}",
            results_path.display(),
            runs.len()
        )));
    }
    let mut writer = if done > 0 {
        log::info!("resuming after {done} of {} rows", runs.len());
        ResultsWriter::append(&results_path)?
    } else {
        std::fs::write(&config_path, config.to_toml()).map_err(|e| HarnessError::io(&config_path, e))?;
        ResultsWriter::create(&results_path)?
    };

    meter.warm_up(config.energy.warmup_s);
    let mut written = 0;
    let mut warnings = 0;
    for &(combo, rep) in &runs[done..] {
        if opts.stop_after.is_some_and(|n| written >= n) {
            break;
        }
        let result = run_iteration(combo, rep, config, meter)?;
        warnings += result.warnings.len();
        writer.write(&result.to_row())?;
        written += 1;
        log::info!(
            "[{}/{}] {} {} {} {} rep {}: {}",
            done + written,
            runs.len(),
            combo.detector,
            combo.generator,
            combo.drift_type,
            combo.classifier,
            rep,
            result.outcome.kind.id()
        );
        cooldown_sleep(config.energy.cooldown_s);
    }

    Ok(RunSummary {
        results_path,
        total_runs: runs.len(),
        skipped: done,
        written,
        complete: done + written == runs.len(),
        provider: meter.provider(),
        guard_trips: meter.guard_trips(),
        warnings,
    })
}
