//! Brute-force k-nearest neighbours with Euclidean distance.

use serde::{Deserialize, Serialize};

use super::Data;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    k: usize,
    d: usize,
    x: Vec<f64>,
    y: Vec<u8>,
}

impl Knn {
    pub fn fit(data: &Data, k: usize) -> Self {
        Self {
            k: k.min(data.len()),
            d: data.d,
            x: data.x.to_vec(),
            y: data.y.to_vec(),
        }
    }

    /// Indices of the k nearest training rows, nearest first. Equal
    /// distances go to the lower index.
    pub fn neighbours(&self, q: &[f64]) -> Vec<usize> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(self.k + 1);
        for (i, row) in self.x.chunks_exact(self.d).enumerate() {
            let dist: f64 = row.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() == self.k && dist >= best[self.k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bd, _)| bd <= dist);
            best.insert(pos, (dist, i));
            best.truncate(self.k);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }

    pub fn predict(&self, q: &[f64]) -> u8 {
        let nn = self.neighbours(q);
        let ones = nn.iter().filter(|&&i| self.y[i] == 1).count();
        (2 * ones > nn.len()) as u8
    }
}
