//! DDM: drift detection from the running error rate and its binomial deviation.

use super::running::RunningMean;
use super::{DetectorKind, DriftDetector, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdmParams {
    /// Updates required before any signal.
    pub warm_start: u64,
    pub warning_threshold: f64,
    pub drift_threshold: f64,
}

impl Default for DdmParams {
    fn default() -> Self {
        Self {
            warm_start: 30,
            warning_threshold: 2.0,
            drift_threshold: 3.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ddm {
    params: DdmParams,
    p: RunningMean,
    p_min: f64,
    s_min: f64,
    ps_min: f64,
    warning: bool,
    drift: bool,
    seen: u64,
}

impl Default for Ddm {
    fn default() -> Self {
        Self::new(DdmParams::default())
    }
}

impl Ddm {
    pub fn new(params: DdmParams) -> Self {
        Self {
            params,
            p: RunningMean::new(),
            p_min: f64::NAN,
            s_min: f64::NAN,
            ps_min: f64::INFINITY,
            warning: false,
            drift: false,
            seen: 0,
        }
    }

    pub fn error_rate(&self) -> f64 {
        self.p.get()
    }

    fn clear(&mut self) {
        let seen = self.seen;
        *self = Self::new(self.params);
        self.seen = seen;
    }
}

impl DriftDetector for Ddm {
    fn kind(&self) -> DetectorKind {
        DetectorKind::Ddm
    }

    fn update(&mut self, x: f64) -> Status {
        if self.drift {
            self.clear();
        }
        self.seen += 1;
        self.p.update(x);
        let p_i = self.p.get();
        let n = self.p.count();
        let s_i = (p_i * (1.0 - p_i) / n).sqrt();
        if n > self.params.warm_start as f64 {
            if p_i + s_i <= self.ps_min {
                self.p_min = p_i;
                self.s_min = s_i;
                self.ps_min = self.p_min + self.s_min;
            }
            self.warning = p_i + s_i > self.p_min + self.params.warning_threshold * self.s_min;
            if p_i + s_i > self.p_min + self.params.drift_threshold * self.s_min {
                self.drift = true;
                self.warning = false;
            }
        }
        status_of(self.warning, self.drift)
    }

    fn reset(&mut self) {
        *self = Self::new(self.params);
    }

    fn updates_seen(&self) -> u64 {
        self.seen
    }

    fn last_update_ops(&self) -> usize {
        1
    }
}

pub(super) fn status_of(warning: bool, drift: bool) -> Status {
    if drift {
        Status::Drift
    } else if warning {
        Status::Warning
    } else {
        Status::Stable
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::alarm_trace;
    use crate::detectors::pyrandom::PyRandom;

    #[test]
    fn constant_zero_never_drifts() {
        let mut d = Ddm::default();
        assert!(alarm_trace(&mut d, &[0.0; 5000]).is_empty());
    }

    #[test]
    fn silent_during_warm_start() {
        let mut d = Ddm::default();
        for i in 0..29 {
            let x = if i % 2 == 0 { 1.0 } else { 0.0 };
            assert_eq!(d.update(x), Status::Stable);
        }
        let mut d = Ddm::default();
        for _ in 0..29 {
            assert_eq!(d.update(1.0), Status::Stable);
        }
    }

    #[test]
    fn bernoulli_step_matches_reference() {
        // random.Random(7): 2000 draws at p=0.05 then 1000 at p=0.6.
        let mut rng = PyRandom::new(7);
        let mut signal: Vec<f64> = (0..2000).map(|_| (rng.random() < 0.05) as u8 as f64).collect();
        signal.extend((0..1000).map(|_| (rng.random() < 0.6) as u8 as f64));
        let mut d = Ddm::default();
        let trace = alarm_trace(&mut d, &signal);
        assert_eq!(trace.first(), Some(&2028));
    }

    #[test]
    fn warning_precedes_drift_on_gradual_rise() {
        let mut d = Ddm::default();
        let mut seen_warning = false;
        for i in 0..4000u64 {
            let rate = if i < 1000 { 10 } else { 40 };
            let x = if i.wrapping_mul(2654435761) % 100 < rate { 1.0 } else { 0.0 };
            match d.update(x) {
                Status::Warning => seen_warning = true,
                Status::Drift => break,
                Status::Stable => {}
            }
        }
        assert!(seen_warning);
    }
}
