//! ADWIN: adaptive windowing over an exponential histogram of buckets.

use std::collections::VecDeque;

use super::{DetectorKind, DriftDetector, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdwinParams {
    pub delta: f64,
    /// Cuts are evaluated every `clock` updates.
    pub clock: u64,
    pub max_buckets: usize,
    pub min_window_length: usize,
    pub grace_period: usize,
}

impl Default for AdwinParams {
    fn default() -> Self {
        Self {
            delta: 0.002,
            clock: 32,
            max_buckets: 5,
            min_window_length: 5,
            grace_period: 10,
        }
    }
}

/// One row of the histogram: up to `max_buckets + 1` buckets of size 2^row.
#[derive(Debug, Clone)]
struct BucketRow {
    totals: Vec<f64>,
    variances: Vec<f64>,
    len: usize,
}

impl BucketRow {
    fn new(max_buckets: usize) -> Self {
        Self {
            totals: vec![0.0; max_buckets + 1],
            variances: vec![0.0; max_buckets + 1],
            len: 0,
        }
    }

    fn push(&mut self, total: f64, variance: f64) {
        self.totals[self.len] = total;
        self.variances[self.len] = variance;
        self.len += 1;
    }

    /// Drop the `k` oldest buckets, shifting the rest down.
    fn drop_front(&mut self, k: usize) {
        let cap = self.totals.len();
        self.totals.copy_within(k.., 0);
        self.variances.copy_within(k.., 0);
        for i in cap - k..cap {
            self.totals[i] = 0.0;
            self.variances[i] = 0.0;
        }
        self.len -= k;
    }
}

#[derive(Debug, Clone)]
pub struct Adwin {
    params: AdwinParams,
    rows: VecDeque<BucketRow>,
    total: f64,
    variance: f64,
    width: f64,
    tick: u64,
    n_detections: u64,
    drift: bool,
    seen: u64,
    last_ops: usize,
}

impl Default for Adwin {
    fn default() -> Self {
        Self::new(AdwinParams::default())
    }
}

fn bucket_size(row: usize) -> f64 {
    2f64.powi(row as i32)
}

impl Adwin {
    pub fn new(params: AdwinParams) -> Self {
        let mut rows = VecDeque::new();
        rows.push_back(BucketRow::new(params.max_buckets));
        Self {
            params,
            rows,
            total: 0.0,
            variance: 0.0,
            width: 0.0,
            tick: 0,
            n_detections: 0,
            drift: false,
            seen: 0,
            last_ops: 0,
        }
    }

    pub fn params(&self) -> AdwinParams {
        self.params
    }

    /// Number of elements currently summarised by the window.
    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn estimation(&self) -> f64 {
        if self.width == 0.0 {
            0.0
        } else {
            self.total / self.width
        }
    }

    pub fn n_detections(&self) -> u64 {
        self.n_detections
    }

    fn clear_window(&mut self) {
        let seen = self.seen;
        *self = Self::new(self.params);
        self.seen = seen;
    }

    fn insert_element(&mut self, value: f64) {
        self.rows[0].push(value, 0.0);
        self.width += 1.0;
        let mut incremental = 0.0;
        if self.width > 1.0 {
            let prev_mean = self.total / (self.width - 1.0);
            incremental = (self.width - 1.0) * (value - prev_mean) * (value - prev_mean) / self.width;
        }
        self.variance += incremental;
        self.total += value;
        self.compress_buckets();
    }

    fn compress_buckets(&mut self) {
        let max = self.params.max_buckets;
        let mut idx = 0;
        while idx < self.rows.len() {
            if self.rows[idx].len != max + 1 {
                break;
            }
            if idx + 1 == self.rows.len() {
                self.rows.push_back(BucketRow::new(max));
            }
            let n = bucket_size(idx);
            let row = &self.rows[idx];
            let (t0, t1) = (row.totals[0], row.totals[1]);
            let mu1 = t0 / n;
            let mu2 = t1 / n;
            let total12 = t0 + t1;
            let temp = n * n * (mu1 - mu2) * (mu1 - mu2) / (n + n);
            let v12 = row.variances[0] + row.variances[1] + temp;
            self.rows[idx + 1].push(total12, v12);
            self.rows[idx].drop_front(2);
            self.last_ops += 1;
            if self.rows[idx + 1].len <= max {
                break;
            }
            idx += 1;
        }
    }

    /// Remove the oldest bucket; returns its size.
    fn delete_element(&mut self) -> f64 {
        let last = self.rows.len() - 1;
        let n = bucket_size(last);
        let (u, v) = {
            let row = &self.rows[last];
            (row.totals[0], row.variances[0])
        };
        let mu = u / n;
        self.width -= n;
        self.total -= u;
        let mu_window = self.total / self.width;
        let incremental = v + n * self.width * (mu - mu_window) * (mu - mu_window) / (n + self.width);
        self.variance -= incremental;
        let row = &mut self.rows[last];
        row.drop_front(1);
        if row.len == 0 {
            self.rows.pop_back();
        }
        n
    }

    fn evaluate_cut(&self, n0: f64, n1: f64, delta_mean: f64) -> bool {
        let min_len = self.params.min_window_length as f64;
        let delta_prime = (2.0 * self.width.ln() / self.params.delta).ln();
        let m_recip = 1.0 / (n0 - min_len + 1.0) + 1.0 / (n1 - min_len + 1.0);
        let variance_in_window = self.variance / self.width;
        let epsilon = (2.0 * m_recip * variance_in_window * delta_prime).sqrt()
            + 2.0 / 3.0 * delta_prime * m_recip;
        delta_mean.abs() > epsilon
    }

    fn detect_change(&mut self) -> bool {
        let mut change = false;
        self.tick += 1;
        if self.tick.is_multiple_of(self.params.clock) && self.width > self.params.grace_period as f64 {
            let min_len = self.params.min_window_length as f64;
            let mut reduce = true;
            while reduce {
                reduce = false;
                let mut exit = false;
                let mut n0 = 0.0;
                let mut n1 = self.width;
                let mut u0 = 0.0;
                let mut u1 = self.total;
                let mut idx = self.rows.len();
                while idx > 0 && !exit {
                    idx -= 1;
                    let n2 = bucket_size(idx);
                    let len = self.rows[idx].len;
                    for k in 0..len {
                        self.last_ops += 1;
                        let u2 = self.rows[idx].totals[k];
                        n0 += n2;
                        n1 -= n2;
                        u0 += u2;
                        u1 -= u2;
                        if idx == 0 && k == len - 1 {
                            exit = true;
                            break;
                        }
                        let delta_mean = u0 / n0 - u1 / n1;
                        if n1 >= min_len && n0 >= min_len && self.evaluate_cut(n0, n1, delta_mean) {
                            reduce = true;
                            change = true;
                            if self.width > 0.0 {
                                self.delete_element();
                                exit = true;
                                break;
                            }
                        }
                    }
                }
            }
        }
        if change {
            self.n_detections += 1;
        }
        change
    }
}

impl DriftDetector for Adwin {
    fn kind(&self) -> DetectorKind {
        DetectorKind::Adwin
    }

    fn update(&mut self, x: f64) -> Status {
        self.last_ops = 0;
        if self.drift {
            self.clear_window();
        }
        self.seen += 1;
        self.insert_element(x);
        self.drift = self.detect_change();
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
        self.last_ops
    }
}
