//! Page-Hinkley test on the cumulative deviation from the running mean.

use super::running::RunningMean;
use super::{DetectorKind, DriftDetector, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhMode {
    Up,
    Down,
    #[default]
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PageHinkleyParams {
    pub min_instances: u64,
    /// Tolerated magnitude of change.
    pub delta: f64,
    pub threshold: f64,
    /// Forgetting factor applied to the cumulative sums.
    pub alpha: f64,
    pub mode: PhMode,
}

impl Default for PageHinkleyParams {
    fn default() -> Self {
        Self {
            min_instances: 30,
            delta: 0.005,
            threshold: 50.0,
            alpha: 1.0 - 0.0001,
            mode: PhMode::Both,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PageHinkley {
    params: PageHinkleyParams,
    mean: RunningMean,
    sum_increase: f64,
    sum_decrease: f64,
    min_increase: f64,
    max_decrease: f64,
    drift: bool,
    seen: u64,
}

impl Default for PageHinkley {
    fn default() -> Self {
        Self::new(PageHinkleyParams::default())
    }
}

impl PageHinkley {
    pub fn new(params: PageHinkleyParams) -> Self {
        Self {
            params,
            mean: RunningMean::new(),
            sum_increase: 0.0,
            sum_decrease: 0.0,
            min_increase: f64::INFINITY,
            max_decrease: -1.0,
            drift: false,
            seen: 0,
        }
    }

    /// Cumulative statistic for upward shifts.
    pub fn sum_increase(&self) -> f64 {
        self.sum_increase
    }

    pub fn sum_decrease(&self) -> f64 {
        self.sum_decrease
    }

    fn clear(&mut self) {
        let seen = self.seen;
        *self = Self::new(self.params);
        self.seen = seen;
    }
}

impl DriftDetector for PageHinkley {
    fn kind(&self) -> DetectorKind {
        DetectorKind::PageHinkley
    }

    fn update(&mut self, x: f64) -> Status {
        if self.drift {
            self.clear();
        }
        self.seen += 1;
        self.mean.update(x);
        let dev = x - self.mean.get();
        let p = self.params;
        self.sum_increase = p.alpha * self.sum_increase + dev - p.delta;
        self.sum_decrease = p.alpha * self.sum_decrease + dev + p.delta;
        if self.sum_increase < self.min_increase {
            self.min_increase = self.sum_increase;
        }
        if self.sum_decrease > self.max_decrease {
            self.max_decrease = self.sum_decrease;
        }
        if self.mean.count() >= p.min_instances as f64 {
            let up = self.sum_increase - self.min_increase;
            let down = self.max_decrease - self.sum_decrease;
            self.drift = match p.mode {
                PhMode::Up => up > p.threshold,
                PhMode::Down => down > p.threshold,
                PhMode::Both => up > p.threshold || down > p.threshold,
            };
        }
        if self.drift {
            Status::Drift
        } else {
            Status::Stable
        }
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
