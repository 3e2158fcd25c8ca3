//! HDDM_A: Hoeffding-bound test on the running mean against its recorded minimum.

use super::running::RunningMean;
use super::{DetectorKind, DriftDetector, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HddmAParams {
    pub drift_confidence: f64,
    pub warning_confidence: f64,
    /// Also signal significant decreases of the mean.
    pub two_sided: bool,
}

impl Default for HddmAParams {
    fn default() -> Self {
        Self {
            drift_confidence: 0.001,
            warning_confidence: 0.005,
            two_sided: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HddmA {
    params: HddmAParams,
    x_min: RunningMean,
    x_max: RunningMean,
    z: RunningMean,
    warning: bool,
    drift: bool,
    seen: u64,
}

impl Default for HddmA {
    fn default() -> Self {
        Self::new(HddmAParams::default())
    }
}

impl HddmA {
    pub fn new(params: HddmAParams) -> Self {
        Self {
            params,
            x_min: RunningMean::new(),
            x_max: RunningMean::new(),
            z: RunningMean::new(),
            warning: false,
            drift: false,
            seen: 0,
        }
    }

    fn clear(&mut self) {
        let seen = self.seen;
        *self = Self::new(self.params);
        self.seen = seen;
    }

    fn hoeffding_bound(&self, n: f64) -> f64 {
        (1.0 / (2.0 * n) * (1.0 / self.params.drift_confidence).ln()).sqrt()
    }

    fn mean_increased(&self, confidence: f64) -> bool {
        if self.x_min.count() == self.z.count() {
            return false;
        }
        let m = (self.z.count() - self.x_min.count()) / self.x_min.count() * (1.0 / self.z.count());
        let eps = (m / 2.0 * (2.0 / confidence).ln()).sqrt();
        self.z.get() - self.x_min.get() >= eps
    }

    fn mean_decreased(&self, confidence: f64) -> bool {
        if self.x_max.count() == self.z.count() {
            return false;
        }
        let m = (self.z.count() - self.x_max.count()) / self.x_max.count() * (1.0 / self.z.count());
        let eps = (m / 2.0 * (2.0 / confidence).ln()).sqrt();
        self.x_max.get() - self.z.get() >= eps
    }
}

impl DriftDetector for HddmA {
    fn kind(&self) -> DetectorKind {
        DetectorKind::HddmA
    }

    fn update(&mut self, x: f64) -> Status {
        if self.drift {
            self.clear();
        }
        self.seen += 1;
        self.z.update(x);
        if self.x_min.count() == 0.0 {
            self.x_min = self.z;
        }
        if self.x_max.count() == 0.0 {
            self.x_max = self.z;
        }
        let eps_z = self.hoeffding_bound(self.z.count());
        let eps_x = self.hoeffding_bound(self.x_min.count());
        if self.x_min.get() + eps_x >= self.z.get() + eps_z {
            self.x_min = self.z;
        }
        let eps_x = self.hoeffding_bound(self.x_max.count());
        if self.x_max.get() - eps_x <= self.z.get() - eps_z {
            self.x_max = self.z;
        }

        if self.mean_increased(self.params.drift_confidence) {
            self.warning = false;
            self.drift = true;
        } else if self.mean_increased(self.params.warning_confidence) {
            self.warning = true;
            self.drift = false;
        } else {
            self.warning = false;
            self.drift = false;
        }
        if self.params.two_sided {
            if self.mean_decreased(self.params.drift_confidence) {
                self.drift = true;
            } else if self.mean_decreased(self.params.warning_confidence) {
                self.warning = true;
            }
        }
        super::ddm::status_of(self.warning, self.drift)
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
