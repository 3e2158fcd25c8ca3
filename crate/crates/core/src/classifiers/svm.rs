//! Linear SVM trained by stochastic gradient descent on the hinge loss.
//!
//! Features are standardized with the training mean and deviation. The step
//! size follows the `1 / (alpha * (t0 + t))` schedule with the usual
//! heuristic for `t0`.

use serde::{Deserialize, Serialize};

use super::Data;
use crate::rng::PortableRng;

pub const ALPHA: f64 = 1e-4;
pub const EPOCHS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    center: Vec<f64>,
    scale: Vec<f64>,
    w: Vec<f64>,
    b: f64,
}

impl LinearSvm {
    pub fn fit(data: &Data, seed: u64, stream: u64) -> Self {
        let (n, d) = (data.len(), data.d);
        let mut center = vec![0.0; d];
        for i in 0..n {
            for (c, x) in center.iter_mut().zip(data.row(i)) {
                *c += x;
            }
        }
        center.iter_mut().for_each(|c| *c /= n as f64);
        let mut scale = vec![0.0; d];
        for i in 0..n {
            for ((s, x), c) in scale.iter_mut().zip(data.row(i)).zip(&center) {
                *s += (x - c) * (x - c);
            }
        }
        for s in scale.iter_mut() {
            *s = (*s / n as f64).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }

        let mut model = Self {
            center,
            scale,
            w: vec![0.0; d],
            b: 0.0,
        };
        let typw = (1.0 / ALPHA.sqrt()).sqrt();
        let t0 = 1.0 / (ALPHA * typw);
        let mut rng = PortableRng::new(seed, stream);
        let mut order: Vec<usize> = (0..n).collect();
        let mut z = vec![0.0; d];
        let mut t = 0.0;
        for _ in 0..EPOCHS {
            rng.shuffle(&mut order);
            for &i in &order {
                model.standardize_into(data.row(i), &mut z);
                let y = if data.y[i] == 1 { 1.0 } else { -1.0 };
                let eta = 1.0 / (ALPHA * (t0 + t));
                let margin = y * model.raw(&z);
                model.w.iter_mut().for_each(|w| *w *= 1.0 - eta * ALPHA);
                if margin < 1.0 {
                    for (w, zi) in model.w.iter_mut().zip(&z) {
                        *w += eta * y * zi;
                    }
                    model.b += eta * y;
                }
                t += 1.0;
            }
        }
        model
    }

    fn standardize_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, x), c), s) in out.iter_mut().zip(x).zip(&self.center).zip(&self.scale) {
            *o = (x - c) / s;
        }
    }

    fn raw(&self, z: &[f64]) -> f64 {
        self.w.iter().zip(z).map(|(w, z)| w * z).sum::<f64>() + self.b
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut z = vec![0.0; x.len()];
        self.standardize_into(x, &mut z);
        self.raw(&z)
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.decision(x) > 0.0) as u8
    }
}
