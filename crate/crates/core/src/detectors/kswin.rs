//! KSWIN: two-sample Kolmogorov-Smirnov test inside a sliding window.
//!
//! The newest `stat_size` observations are compared against a uniform
//! subsample of the older part of the window. Drift is reported when the
//! exact two-sided p-value is at most `alpha` and the statistic exceeds 0.1.

use std::collections::VecDeque;

use super::pyrandom::PyRandom;
use super::{DetectorError, DetectorKind, DriftDetector, Status};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KswinParams {
    pub alpha: f64,
    pub window_size: usize,
    pub stat_size: usize,
    pub seed: u64,
}

impl Default for KswinParams {
    fn default() -> Self {
        Self {
            alpha: 0.005,
            window_size: 100,
            stat_size: 30,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Kswin {
    params: KswinParams,
    window: VecDeque<f64>,
    rng: PyRandom,
    p_value: f64,
    statistic: f64,
    drift: bool,
    seen: u64,
    last_ops: usize,
}

impl Default for Kswin {
    fn default() -> Self {
        Self::new(KswinParams::default()).expect("default KSWIN parameters are valid")
    }
}

impl Kswin {
    pub fn new(params: KswinParams) -> Result<Self, DetectorError> {
        if !(0.0..=1.0).contains(&params.alpha) {
            return Err(DetectorError::InvalidParameter(
                "KSWIN alpha must lie in [0, 1]".into(),
            ));
        }
        if params.window_size <= params.stat_size {
            return Err(DetectorError::InvalidParameter(format!(
                "KSWIN window_size ({}) must exceed stat_size ({})",
                params.window_size, params.stat_size
            )));
        }
        if params.stat_size == 0 {
            return Err(DetectorError::InvalidParameter(
                "KSWIN stat_size must be positive".into(),
            ));
        }
        Ok(Self::fresh(params))
    }

    fn fresh(params: KswinParams) -> Self {
        Self {
            params,
            window: VecDeque::with_capacity(params.window_size),
            rng: PyRandom::new(params.seed),
            p_value: 0.0,
            statistic: 0.0,
            drift: false,
            seen: 0,
            last_ops: 0,
        }
    }

    /// p-value of the most recent test (0 before the window first fills).
    pub fn p_value(&self) -> f64 {
        self.p_value
    }

    /// KS statistic of the most recent test.
    pub fn statistic(&self) -> f64 {
        self.statistic
    }

    pub fn window(&self) -> &VecDeque<f64> {
        &self.window
    }

    fn clear(&mut self) {
        let seen = self.seen;
        *self = Self::fresh(self.params);
        self.seen = seen;
    }
}

impl DriftDetector for Kswin {
    fn kind(&self) -> DetectorKind {
        DetectorKind::Kswin
    }

    fn update(&mut self, x: f64) -> Status {
        self.last_ops = 1;
        if self.drift {
            self.clear();
        }
        self.seen += 1;
        let ws = self.params.window_size;
        let ss = self.params.stat_size;
        if self.window.len() == ws {
            self.window.pop_front();
        }
        self.window.push_back(x);
        self.drift = false;
        if self.window.len() >= ws {
            let picks = self.rng.sample_indices(ws - ss, ss);
            let reference: Vec<f64> = picks.iter().map(|&r| self.window[r]).collect();
            let recent: Vec<f64> = self.window.range(ws - ss..).copied().collect();
            let (st, p) = ks_two_sample_pvalue(&reference, &recent);
            self.last_ops += ws;
            self.statistic = st;
            self.p_value = p;
            if p <= self.params.alpha && st > 0.1 {
                self.drift = true;
                self.window = recent.into_iter().collect();
            }
        }
        if self.drift {
            Status::Drift
        } else {
            Status::Stable
        }
    }

    fn reset(&mut self) {
        *self = Self::fresh(self.params);
    }

    fn updates_seen(&self) -> u64 {
        self.seen
    }

    fn last_update_ops(&self) -> usize {
        self.last_ops
    }
}

/// Two-sample KS statistic: largest gap between the empirical CDFs.
///
/// Ties across samples are handled by evaluating both CDFs at every pooled
/// value with right-continuous steps.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let v = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// KS statistic and exact two-sided p-value for two samples.
///
/// The statistic is snapped to the lattice `h / lcm(n, m)`. Equal sample
/// sizes use the closed-form path count outside the square band; unequal
/// sizes count lattice paths directly.
pub fn ks_two_sample_pvalue(a: &[f64], b: &[f64]) -> (f64, f64) {
    let (n1, n2) = (a.len(), b.len());
    let d_raw = ks_two_sample(a, b);
    let g = gcd(n1, n2);
    let lcm = (n1 / g) * n2;
    let h = (d_raw * lcm as f64).round_ties_even() as usize;
    let d = h as f64 / lcm as f64;
    if h == 0 {
        return (d, 1.0);
    }
    let p = if n1 == n2 {
        prob_outside_square(n1, h)
    } else {
        prob_outside_band(n1, n2, h * g)
    };
    (d, p.clamp(0.0, 1.0))
}

fn prob_outside_square(n: usize, h: usize) -> f64 {
    let mut p = 0.0;
    let mut k = (n / h) as i64;
    while k >= 0 {
        let kh = k as usize * h;
        let mut p1 = 1.0;
        for j in 0..h {
            // n - kh - j can go negative in the last terms; keep it signed.
            let num = n as f64 - kh as f64 - j as f64;
            p1 = num * p1 / (n + kh + j + 1) as f64;
        }
        p = p1 * (1.0 - p);
        k -= 1;
    }
    2.0 * p
}

/// Probability that the KS distance between samples of sizes n1, n2 reaches
/// `scaled / (n1 * n2)`, from the share of monotone lattice paths that stay
/// strictly inside the band |i * n2 - j * n1| < scaled.
fn prob_outside_band(n1: usize, n2: usize, scaled: usize) -> f64 {
    let inside = |i: usize, j: usize| (i * n2).abs_diff(j * n1) < scaled;
    // Path probabilities under uniform random interleaving, computed as
    // fractions of paths to avoid huge counts.
    let mut prev = vec![0.0f64; n2 + 1];
    for i in 0..=n1 {
        let mut cur = vec![0.0f64; n2 + 1];
        for j in 0..=n2 {
            if i == 0 && j == 0 {
                cur[0] = 1.0;
                continue;
            }
            if !inside(i, j) {
                cur[j] = 0.0;
                continue;
            }
            // step weights: probability the next element comes from a or b
            let mut v = 0.0;
            if i > 0 {
                let left = n1 - (i - 1) + n2 - j;
                v += prev[j] * (n1 - (i - 1)) as f64 / left as f64;
            }
            if j > 0 {
                let left = n1 - i + n2 - (j - 1);
                v += cur[j - 1] * (n2 - (j - 1)) as f64 / left as f64;
            }
            cur[j] = v;
        }
        prev = cur;
    }
    1.0 - prev[n2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::alarm_trace;

    /// Brute force: evaluate both ECDFs at every pooled point.
    fn ks_brute(a: &[f64], b: &[f64]) -> f64 {
        let ecdf = |s: &[f64], v: f64| s.iter().filter(|&&x| x <= v).count() as f64 / s.len() as f64;
        a.iter()
            .chain(b)
            .map(|&v| (ecdf(a, v) - ecdf(b, v)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn constant_input_is_stable() {
        let mut d = Kswin::default();
        assert!(alarm_trace(&mut d, &[0.0; 1000]).is_empty());
        assert_eq!(d.statistic(), 0.0);
    }

    #[test]
    fn rejects_window_not_larger_than_stat() {
        let p = KswinParams {
            window_size: 30,
            stat_size: 30,
            ..KswinParams::default()
        };
        assert!(Kswin::new(p).is_err());
    }

    #[test]
    fn step_matches_reference() {
        let mut rng = PyRandom::new(11);
        let mut s: Vec<f64> = (0..1000).map(|_| (rng.random() < 0.05) as u8 as f64).collect();
        s.extend((0..1000).map(|_| (rng.random() < 0.7) as u8 as f64));
        let mut d = Kswin::default();
        assert_eq!(alarm_trace(&mut d, &s).first(), Some(&1025));
    }

    #[test]
    fn internal_statistic_matches_brute_force_on_snapshot() {
        let mut rng = PyRandom::new(3);
        let mut d = Kswin::default();
        for i in 0..400 {
            let p = if i < 250 { 0.1 } else { 0.5 };
            let x = (rng.random() < p) as u8 as f64;
            // replicate the subsample the detector is about to draw
            let mut shadow = d.rng.clone();
            let mut window = d.window.clone();
            if window.len() == 100 {
                window.pop_front();
            }
            window.push_back(x);
            let before_drift = d.drift;
            d.update(x);
            if window.len() == 100 && !before_drift {
                let picks = shadow.sample_indices(70, 30);
                let reference: Vec<f64> = picks.iter().map(|&r| window[r]).collect();
                let recent: Vec<f64> = window.range(70..).copied().collect();
                let brute = ks_brute(&reference, &recent);
                let snapped = (brute * 30.0).round() / 30.0;
                assert!((d.statistic() - snapped).abs() < 1e-12, "step {i}");
            }
        }
    }

    #[test]
    fn statistic_matches_brute_force_with_ties() {
        let a = [0.0, 0.0, 1.0, 1.0, 1.0, 2.0];
        let b = [0.0, 1.0, 2.0, 2.0, 2.0, 3.0];
        assert!((ks_two_sample(&a, &b) - ks_brute(&a, &b)).abs() < 1e-15);
    }

    #[test]
    fn exact_pvalues_match_scipy() {
        // scipy.stats.ks_2samp(method="exact") on samples of size 30
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let shift = |s: f64| a.iter().map(|x| x + s).collect::<Vec<_>>();
        let (d, p) = ks_two_sample_pvalue(&a, &shift(3.0));
        assert!((d - 0.1).abs() < 1e-15);
        assert!((p - 0.9988393756362763).abs() < 1e-12, "{p}");
        let (d, p) = ks_two_sample_pvalue(&a, &shift(12.0));
        assert!((d - 0.4).abs() < 1e-15);
        assert!((p - 0.015643390496754332).abs() < 1e-12, "{p}");
    }

    #[test]
    fn unequal_sizes_match_scipy() {
        let a: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 * 0.5 + 8.0).collect();
        let (d, p) = ks_two_sample_pvalue(&a, &b);
        assert!((d - 0.4166666666666667).abs() < 1e-12, "{d}");
        assert!((p - P_UNEQUAL).abs() < 1e-9, "{p}");
    }

    const P_UNEQUAL: f64 = 0.024351206903677477;
}
