//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use super::Data;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    log_prior: [f64; 2],
    mean: [Vec<f64>; 2],
    var: [Vec<f64>; 2],
}

/// Variance floor as a fraction of the largest feature variance.
const VAR_SMOOTHING: f64 = 1e-9;

impl GaussianNb {
    pub fn fit(data: &Data) -> Self {
        let d = data.d;
        let mut count = [0usize; 2];
        let mut mean = [vec![0.0; d], vec![0.0; d]];
        let mut var = [vec![0.0; d], vec![0.0; d]];
        for i in 0..data.len() {
            let c = data.y[i] as usize;
            count[c] += 1;
            for (m, x) in mean[c].iter_mut().zip(data.row(i)) {
                *m += x;
            }
        }
        for c in 0..2 {
            mean[c].iter_mut().for_each(|m| *m /= count[c].max(1) as f64);
        }
        for i in 0..data.len() {
            let c = data.y[i] as usize;
            for ((v, m), x) in var[c].iter_mut().zip(&mean[c]).zip(data.row(i)) {
                *v += (x - m) * (x - m);
            }
        }
        for c in 0..2 {
            var[c].iter_mut().for_each(|v| *v /= count[c].max(1) as f64);
        }

        // floor relative to the largest overall feature variance
        let n = data.len() as f64;
        let mut max_var = 0.0f64;
        for f in 0..d {
            let mu = (0..data.len()).map(|i| data.row(i)[f]).sum::<f64>() / n;
            let v = (0..data.len()).map(|i| (data.row(i)[f] - mu).powi(2)).sum::<f64>() / n;
            max_var = max_var.max(v);
        }
        let eps = (VAR_SMOOTHING * max_var).max(f64::MIN_POSITIVE);
        for v in var.iter_mut().flatten() {
            *v += eps;
        }
        let log_prior = [0, 1].map(|c| (count[c] as f64 / n).ln());
        Self { log_prior, mean, var }
    }

    pub fn joint_log_likelihood(&self, x: &[f64]) -> [f64; 2] {
        [0, 1].map(|c| {
            let mut ll = self.log_prior[c];
            for ((xi, m), v) in x.iter().zip(&self.mean[c]).zip(&self.var[c]) {
                ll -= 0.5 * (2.0 * std::f64::consts::PI * v).ln();
                ll -= 0.5 * (xi - m) * (xi - m) / v;
            }
            ll
        })
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        let [l0, l1] = self.joint_log_likelihood(x);
        (l1 > l0) as u8
    }
}
