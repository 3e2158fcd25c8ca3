//! Hypothesis tests and effect sizes used by the analysis.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("sample too large: {0} > 5000")]
    TooMany(usize),
    #[error("sample has zero range")]
    Degenerate,
    #[error("samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("p-value {0} is outside [0, 1]")]
    InvalidP(f64),
    #[error("value must be positive, got {0}")]
    NonPositive(f64),
    #[error("pooled standard deviation is zero")]
    ZeroSpread,
    #[error("non-finite value in sample")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ShapiroWilk,
    MannWhitneyU,
    Spearman,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Average ranks (1-based) with ties sharing the mean rank.
pub fn rank_average(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

// Horner evaluation, constant term first.
fn poly(c: &[f64], x: f64) -> f64 {
    let mut r = c[0];
    if c.len() > 1 {
        let mut p = x * c[c.len() - 1];
        for &cj in c[1..c.len() - 1].iter().rev() {
            p = (p + cj) * x;
        }
        r += p;
    }
    r
}

/// Shapiro-Wilk W test (Royston's AS R94 approximation), 3 <= n <= 5000.
pub fn shapiro_wilk(sample: &[f64]) -> Result<TestResult, StatsError> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
    const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    const G: [f64; 2] = [-2.273, 0.459];

    let n = sample.len();
    if n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    if n > 5000 {
        return Err(StatsError::TooMany(n));
    }
    check_finite(sample)?;
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 {
        return Err(StatsError::Degenerate);
    }

    // a[i] for i in 0..n/2 weights the i-th order statistic from the top
    let nn2 = n / 2;
    let an = n as f64;
    let mut a = vec![0.0; nn2];
    if n == 3 {
        a[0] = 0.5f64.sqrt();
    } else {
        let norm = std_normal();
        let m: Vec<f64> = (1..=nn2)
            .map(|i| norm.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        let a1 = poly(&C1, rsn) - m[0] / ssumm2;
        let (first, fac) = if n > 5 {
            let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
            a[1] = a2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
            (2, fac)
        } else {
            (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
        };
        a[0] = a1;
        for i in first..nn2 {
            a[i] = -m[i] / fac;
        }
    }

    // W as the squared correlation between the data and the coefficients
    let coef = |i: usize| -> f64 {
        let j = n - 1 - i;
        if i < j {
            -a[i]
        } else if i > j {
            a[j]
        } else {
            0.0
        }
    };
    let sa = (0..n).map(coef).sum::<f64>() / an;
    let sx = x.iter().map(|v| v / range).sum::<f64>() / an;
    let (mut ssa, mut ssx, mut sax) = (0.0, 0.0, 0.0);
    for (i, xi) in x.iter().enumerate() {
        let asa = coef(i) - sa;
        let xsx = xi / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    let ssassx = (ssa * ssx).sqrt();
    let w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    let w = 1.0 - w1;

    let p_value = if n == 3 {
        let pi6 = 6.0 / std::f64::consts::PI;
        (pi6 * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3)).clamp(0.0, 1.0)
    } else {
        let mut y = w1.ln();
        let (m, s) = if n <= 11 {
            let gamma = poly(&G, an);
            if y >= gamma {
                return Ok(TestResult {
                    statistic: w,
                    p_value: 1e-99,
                    method: Method::ShapiroWilk,
                });
            }
            y = -(gamma - y).ln();
            // small samples use polynomials in n, larger ones in ln n
            (poly(&C3, an), poly(&C4, an).exp())
        } else {
            let ln_n = an.ln();
            (poly(&C5, ln_n), poly(&C6, ln_n).exp())
        };
        Normal::new(m, s).expect("finite parameters").sf(y)
    };
    Ok(TestResult {
        statistic: w,
        p_value: p_value.clamp(0.0, 1.0),
        method: Method::ShapiroWilk,
    })
}

/// Samples no larger than this in total, with no ties, get an exact p-value.
pub const MWU_EXACT_MAX: usize = 12;

/// Two-sided Mann-Whitney U test. The statistic is U for `a`.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    for s in [a, b] {
        if s.is_empty() {
            return Err(StatsError::TooFew { need: 1, got: 0 });
        }
        check_finite(s)?;
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = rank_average(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u1 = r1 - (n1 * (n1 + 1)) as f64 / 2.0;

    let mut sorted = pooled.clone();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&v| v == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }

    let p_value = if n1 + n2 <= MWU_EXACT_MAX && tie_term == 0.0 {
        mwu_exact_p(u1.round() as usize, n1, n2)
    } else {
        let n = (n1 + n2) as f64;
        let mu = (n1 * n2) as f64 / 2.0;
        let var = (n1 * n2) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let u = u1.max((n1 * n2) as f64 - u1);
            let z = (u - mu - 0.5) / var.sqrt();
            2.0 * std_normal().sf(z)
        }
    };
    Ok(TestResult {
        statistic: u1,
        p_value: p_value.clamp(0.0, 1.0),
        method: Method::MannWhitneyU,
    })
}

// Null distribution of U by counting rank assignments.
fn mwu_exact_p(u: usize, n1: usize, n2: usize) -> f64 {
    // counts[k][s]: ways for k of the first m ranks to go to sample a with U = s
    let max_u = n1 * n2;
    let mut counts = vec![vec![0f64; max_u + 1]; n1 + 1];
    counts[0][0] = 1.0;
    for m in 0..n1 + n2 {
        let mut next = vec![vec![0f64; max_u + 1]; n1 + 1];
        for k in 0..=n1.min(m) {
            let placed_b = m - k;
            if placed_b > n2 {
                continue;
            }
            for s in 0..=max_u {
                let c = counts[k][s];
                if c == 0.0 {
                    continue;
                }
                // the next-smallest value goes to a: it beats every b already placed
                if k < n1 && s + placed_b <= max_u {
                    next[k + 1][s + placed_b] += c;
                }
                if placed_b < n2 {
                    next[k][s] += c;
                }
            }
        }
        counts = next;
    }
    let dist = &counts[n1];
    let total: f64 = dist.iter().sum();
    let cdf: f64 = dist[..=u].iter().sum::<f64>() / total;
    let sf: f64 = dist[u..].iter().sum::<f64>() / total;
    (2.0 * cdf.min(sf)).min(1.0)
}

/// Holm step-down adjustment; output is in input order.
pub fn holm_bonferroni(p_values: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(&bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(StatsError::InvalidP(bad));
    }
    let m = p_values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_values[i].total_cmp(&p_values[j]));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p_values[i]).min(1.0));
        adjusted[i] = running;
    }
    Ok(adjusted)
}

/// Standardized mean difference with the pooled standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    for s in [a, b] {
        if s.len() < 2 {
            return Err(StatsError::TooFew { need: 2, got: s.len() });
        }
        check_finite(s)?;
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled = (((na - 1.0) * sample_var(a) + (nb - 1.0) * sample_var(b)) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(StatsError::ZeroSpread);
    }
    Ok((mean(a) - mean(b)) / pooled)
}

/// Absolute difference as a percentage of the larger value.
pub fn pct_difference(m1: f64, m2: f64) -> Result<f64, StatsError> {
    for m in [m1, m2] {
        if m.is_nan() || m <= 0.0 || m.is_infinite() {
            return Err(StatsError::NonPositive(m));
        }
    }
    Ok(100.0 * (m1 - m2).abs() / m1.max(m2))
}

/// Spearman rank correlation with a Student-t p-value.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 3 {
        return Err(StatsError::TooFew { need: 3, got: a.len() });
    }
    check_finite(a)?;
    check_finite(b)?;
    let (ra, rb) = (rank_average(a), rank_average(b));
    let (ma, mb) = (mean(&ra), mean(&rb));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(StatsError::Degenerate);
    }
    let rho = (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0);
    let df = (a.len() - 2) as f64;
    let p_value = if rho.abs() == 1.0 {
        0.0
    } else {
        let t = rho * (df / ((1.0 + rho) * (1.0 - rho))).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
        2.0 * dist.sf(t.abs())
    };
    Ok(TestResult {
        statistic: rho,
        p_value: p_value.clamp(0.0, 1.0),
        method: Method::Spearman,
    })
}
