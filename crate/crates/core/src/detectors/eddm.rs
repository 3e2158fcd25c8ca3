//! EDDM: early drift detection from the distance between consecutive errors.

use super::ddm::status_of;
use super::running::RunningVar;
use super::{DetectorError, DetectorKind, DriftDetector, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EddmParams {
    pub warm_start: u64,
    /// Warning level.
    pub alpha: f64,
    /// Drift level.
    pub beta: f64,
}

impl Default for EddmParams {
    fn default() -> Self {
        Self {
            warm_start: 30,
            alpha: 0.95,
            beta: 0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eddm {
    params: EddmParams,
    distances: RunningVar,
    n: u64,
    last_error: u64,
    n_errors: u64,
    p2s_max: f64,
    warning: bool,
    drift: bool,
    seen: u64,
}

impl Default for Eddm {
    fn default() -> Self {
        Self::new(EddmParams::default()).expect("default EDDM parameters are valid")
    }
}

impl Eddm {
    pub fn new(params: EddmParams) -> Result<Self, DetectorError> {
        if params.alpha < params.beta {
            return Err(DetectorError::InvalidParameter(
                "EDDM alpha must be greater than or equal to beta".into(),
            ));
        }
        Ok(Self::fresh(params))
    }

    fn fresh(params: EddmParams) -> Self {
        Self {
            params,
            distances: RunningVar::new(),
            n: 0,
            last_error: 0,
            n_errors: 0,
            p2s_max: -1.0,
            warning: false,
            drift: false,
            seen: 0,
        }
    }

    fn clear(&mut self) {
        let seen = self.seen;
        *self = Self::fresh(self.params);
        self.seen = seen;
    }
}

impl DriftDetector for Eddm {
    fn kind(&self) -> DetectorKind {
        DetectorKind::Eddm
    }

    fn update(&mut self, x: f64) -> Status {
        if self.drift {
            self.clear();
        }
        self.seen += 1;
        self.n += 1;
        if x == 1.0 {
            self.n_errors += 1;
            self.distances.update((self.n - self.last_error) as f64);
            if self.n > self.params.warm_start {
                let mean = self.distances.mean();
                let std = self.distances.get().sqrt();
                let p2s = mean + 2.0 * std;
                if p2s > self.p2s_max {
                    self.p2s_max = p2s;
                } else if self.n_errors > self.params.warm_start {
                    let level = p2s / self.p2s_max;
                    if level < self.params.beta {
                        self.drift = true;
                    } else {
                        self.warning = level < self.params.alpha;
                    }
                }
            }
            self.last_error = self.n;
        }
        status_of(self.warning, self.drift)
    }

    fn reset(&mut self) {
        *self = Self::fresh(self.params);
    }

    fn updates_seen(&self) -> u64 {
        self.seen
    }

    fn last_update_ops(&self) -> usize {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::alarm_trace;

    #[test]
    fn single_error_is_not_enough() {
        let mut signal = vec![0.0; 50];
        signal.push(1.0);
        signal.extend(std::iter::repeat_n(0.0, 1000));
        let mut d = Eddm::default();
        assert!(alarm_trace(&mut d, &signal).is_empty());
    }

    #[test]
    fn shrinking_error_distance_drifts() {
        // river 0.23 fires at index 3000, the first error of the dense phase
        // that lowers the distance statistic below beta.
        let mut signal: Vec<f64> = (0..3000).map(|i| (i % 100 == 0) as u8 as f64).collect();
        signal.extend((0..1000).map(|i| (i % 2 == 0) as u8 as f64));
        let mut d = Eddm::default();
        assert_eq!(alarm_trace(&mut d, &signal).first(), Some(&3000));
    }

    #[test]
    fn rejects_alpha_below_beta() {
        let p = EddmParams {
            alpha: 0.8,
            beta: 0.9,
            ..EddmParams::default()
        };
        assert!(Eddm::new(p).is_err());
    }
}
