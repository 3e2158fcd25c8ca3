//! Incremental moment estimators shared by the error-rate detectors.
//!
//! The update formulas are written in the exact floating-point order used by
//! the reference library so that alarm traces agree bit for bit.

/// Running arithmetic mean.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMean {
    n: f64,
    mean: f64,
}

impl RunningMean {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: f64) {
        self.n += 1.0;
        self.mean += (1.0 / self.n) * (x - self.mean);
    }

    pub fn get(&self) -> f64 {
        self.mean
    }

    pub fn count(&self) -> f64 {
        self.n
    }
}

/// Welford variance with one degree of freedom removed.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningVar {
    mean: RunningMean,
    sum_sq: f64,
}

impl RunningVar {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: f64) {
        let old = self.mean.get();
        self.mean.update(x);
        let new = self.mean.get();
        self.sum_sq += (x - old) * (x - new);
    }

    pub fn mean(&self) -> f64 {
        self.mean.get()
    }

    pub fn get(&self) -> f64 {
        let n = self.mean.count();
        if n > 1.0 {
            self.sum_sq / (n - 1.0)
        } else {
            0.0
        }
    }
}

/// Exponentially weighted mean.
///
/// Whenever the current estimate is exactly zero the next observation
/// replaces it outright. This is the reference library's rule, and it is
/// not the same as seeding only on the first observation: a run of zeros
/// followed by a one jumps straight to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwMean {
    fading: f64,
    mean: f64,
}

impl EwMean {
    pub fn new(fading: f64) -> Self {
        Self { fading, mean: 0.0 }
    }

    pub fn update(&mut self, x: f64) {
        if self.mean == 0.0 {
            self.mean = x;
        } else {
            self.mean = self.fading * x + (1.0 - self.fading) * self.mean;
        }
    }

    pub fn get(&self) -> f64 {
        self.mean
    }
}
