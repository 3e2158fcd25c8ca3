//! HDDM_W: McDiarmid-bound test on exponentially weighted means.

use super::running::EwMean;
use super::{DetectorKind, DriftDetector, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HddmWParams {
    pub drift_confidence: f64,
    pub warning_confidence: f64,
    /// Weight of the newest observation in the moving average.
    pub lambda: f64,
    pub two_sided: bool,
}

impl Default for HddmWParams {
    fn default() -> Self {
        Self {
            drift_confidence: 0.001,
            warning_confidence: 0.005,
            lambda: 0.05,
            two_sided: false,
        }
    }
}

/// Weighted mean plus its independent bounded-conditions sum.
#[derive(Debug, Clone, Copy)]
struct SampleInfo {
    ewma: EwMean,
    is_init: bool,
    ibc: f64,
    lambda_sq: f64,
    c_lambda_sq: f64,
}

impl SampleInfo {
    fn new(lambda: f64) -> Self {
        Self {
            ewma: EwMean::new(lambda),
            is_init: false,
            ibc: 1.0,
            lambda_sq: lambda * lambda,
            c_lambda_sq: (1.0 - lambda) * (1.0 - lambda),
        }
    }

    fn update(&mut self, x: f64) {
        self.ewma.update(x);
        self.is_init = true;
        self.ibc = self.lambda_sq + self.c_lambda_sq * self.ibc;
    }
}

#[derive(Debug, Clone)]
pub struct HddmW {
    params: HddmWParams,
    total: SampleInfo,
    s1_decr: SampleInfo,
    s1_incr: SampleInfo,
    s2_decr: SampleInfo,
    s2_incr: SampleInfo,
    incr_cutpoint: f64,
    decr_cutpoint: f64,
    warning: bool,
    drift: bool,
    seen: u64,
}

impl Default for HddmW {
    fn default() -> Self {
        Self::new(HddmWParams::default())
    }
}

fn mcdiarmid_bound(ibc: f64, confidence: f64) -> f64 {
    (ibc * (1.0 / confidence).ln() / 2.0).sqrt()
}

fn mean_changed(s1: &SampleInfo, s2: &SampleInfo, confidence: f64) -> bool {
    if !(s1.is_init && s2.is_init) {
        return false;
    }
    let bound = mcdiarmid_bound(s1.ibc + s2.ibc, confidence);
    s2.ewma.get() - s1.ewma.get() > bound
}

impl HddmW {
    pub fn new(params: HddmWParams) -> Self {
        let fresh = SampleInfo::new(params.lambda);
        Self {
            params,
            total: fresh,
            s1_decr: fresh,
            s1_incr: fresh,
            s2_decr: fresh,
            s2_incr: fresh,
            incr_cutpoint: f64::INFINITY,
            decr_cutpoint: f64::NEG_INFINITY,
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

    fn update_incr_stats(&mut self, x: f64) {
        let eps = mcdiarmid_bound(self.total.ibc, self.params.drift_confidence);
        if self.total.ewma.get() + eps < self.incr_cutpoint {
            self.incr_cutpoint = self.total.ewma.get() + eps;
            self.s1_incr = self.total;
            self.s2_incr = SampleInfo::new(self.params.lambda);
        } else {
            self.s2_incr.update(x);
        }
    }

    fn update_decr_stats(&mut self, x: f64) {
        let eps = mcdiarmid_bound(self.total.ibc, self.params.drift_confidence);
        if self.total.ewma.get() - eps > self.decr_cutpoint {
            self.decr_cutpoint = self.total.ewma.get() - eps;
            self.s1_decr = self.total;
            self.s2_decr = SampleInfo::new(self.params.lambda);
        } else {
            self.s2_decr.update(x);
        }
    }
}

impl DriftDetector for HddmW {
    fn kind(&self) -> DetectorKind {
        DetectorKind::HddmW
    }

    fn update(&mut self, x: f64) -> Status {
        if self.drift {
            self.clear();
        }
        self.seen += 1;
        self.total.update(x);
        self.update_incr_stats(x);
        let (drift_c, warn_c) = (self.params.drift_confidence, self.params.warning_confidence);
        if mean_changed(&self.s1_incr, &self.s2_incr, drift_c) {
            self.warning = false;
            self.drift = true;
        } else if mean_changed(&self.s1_incr, &self.s2_incr, warn_c) {
            self.warning = true;
            self.drift = false;
        } else {
            self.warning = false;
            self.drift = false;
        }
        self.update_decr_stats(x);
        if self.params.two_sided {
            if mean_changed(&self.s2_decr, &self.s1_decr, drift_c) {
                self.drift = true;
            } else if mean_changed(&self.s2_decr, &self.s1_decr, warn_c) {
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
