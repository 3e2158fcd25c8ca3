//! CART with weighted Gini impurity, and the ensembles built on it.

use serde::{Deserialize, Serialize};

use super::Data;
use crate::rng::PortableRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        p1: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features examined per node; all when `None`.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

struct Builder<'a, 'r> {
    data: &'a Data<'a>,
    weights: &'a [f64],
    params: TreeParams,
    rng: Option<&'r mut PortableRng>,
    nodes: Vec<Node>,
    features: Vec<usize>,
    scratch: Vec<(f64, u8, f64)>,
}

struct Best {
    feature: usize,
    threshold: f64,
    proxy: f64,
}

impl Builder<'_, '_> {
    fn class_weights(&self, idx: &[usize]) -> (f64, f64) {
        idx.iter().fold((0.0, 0.0), |(w0, w1), &i| {
            let w = self.weights[i];
            if self.data.y[i] == 1 {
                (w0, w1 + w)
            } else {
                (w0 + w, w1)
            }
        })
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> u32 {
        let (w0, w1) = self.class_weights(idx);
        let at = self.nodes.len() as u32;
        self.nodes.push(Node::Leaf { p1: w1 / (w0 + w1) });
        let stop = w0 == 0.0 || w1 == 0.0 || idx.len() < 2 || self.params.max_depth.is_some_and(|m| depth >= m);
        if stop {
            return at;
        }
        let Some(best) = self.best_split(idx) else {
            return at;
        };
        let mut split = 0;
        for k in 0..idx.len() {
            if self.data.row(idx[k])[best.feature] <= best.threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1);
        let right = self.build(r, depth + 1);
        self.nodes[at as usize] = Node::Split {
            feature: best.feature as u32,
            threshold: best.threshold,
            left,
            right,
        };
        at
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Best> {
        let d = self.data.d;
        let wanted = self.params.max_features.unwrap_or(d).clamp(1, d);
        if let Some(rng) = self.rng.as_deref_mut() {
            rng.shuffle(&mut self.features);
        }
        let features = std::mem::take(&mut self.features);
        let mut best: Option<Best> = None;
        let mut examined = 0;
        for &f in &features {
            if examined == wanted {
                break;
            }
            if let Some(b) = self.best_on_feature(idx, f) {
                examined += 1;
                if best.as_ref().is_none_or(|cur| b.proxy > cur.proxy) {
                    best = Some(b);
                }
            }
        }
        self.features = features;
        best
    }

    // Maximizes sum over children of (w0^2 + w1^2) / w, which minimizes the
    // weighted child Gini impurity. `None` when the feature is constant here.
    fn best_on_feature(&mut self, idx: &[usize], f: usize) -> Option<Best> {
        self.scratch.clear();
        self.scratch
            .extend(idx.iter().map(|&i| (self.data.row(i)[f], self.data.y[i], self.weights[i])));
        self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        let s = &self.scratch;
        if s[0].0 == s[s.len() - 1].0 {
            return None;
        }
        let (t0, t1) = s.iter().fold((0.0, 0.0), |(a, b), &(_, y, w)| if y == 1 { (a, b + w) } else { (a + w, b) });
        let (mut l0, mut l1) = (0.0, 0.0);
        let mut best: Option<Best> = None;
        for k in 0..s.len() - 1 {
            let (x, y, w) = s[k];
            if y == 1 {
                l1 += w;
            } else {
                l0 += w;
            }
            let next = s[k + 1].0;
            if next <= x {
                continue;
            }
            let (r0, r1) = (t0 - l0, t1 - l1);
            let (lw, rw) = (l0 + l1, r0 + r1);
            if lw <= 0.0 || rw <= 0.0 {
                continue;
            }
            let proxy = (l0 * l0 + l1 * l1) / lw + (r0 * r0 + r1 * r1) / rw;
            if best.as_ref().is_none_or(|b| proxy > b.proxy) {
                let mid = x / 2.0 + next / 2.0;
                let threshold = if mid >= next || mid < x { x } else { mid };
                best = Some(Best {
                    feature: f,
                    threshold,
                    proxy,
                });
            }
        }
        best
    }
}

impl Tree {
    /// Fit on the rows of `data` with positive weight.
    pub fn fit(data: &Data, weights: &[f64], params: TreeParams, rng: Option<&mut PortableRng>) -> Self {
        let mut idx: Vec<usize> = (0..data.len()).filter(|&i| weights[i] > 0.0).collect();
        let mut b = Builder {
            data,
            weights,
            params,
            rng,
            nodes: Vec::new(),
            features: (0..data.d).collect(),
            scratch: Vec::with_capacity(idx.len()),
        };
        b.build(&mut idx, 0);
        Self { nodes: b.nodes }
    }

    pub fn prob1(&self, x: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { p1 } => return *p1,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    }
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.prob1(x) > 0.5) as u8
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// Bootstrap sample expressed as per-row multiplicities.
fn bootstrap_weights(n: usize, rng: &mut PortableRng) -> Vec<f64> {
    let mut w = vec![0.0; n];
    for _ in 0..n {
        w[rng.below(n as u64) as usize] += 1.0;
    }
    w
}

/// Trees voting by averaged leaf probability. Used for both the random
/// forest (bootstrap plus per-node feature sampling) and bagging.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    trees: Vec<Tree>,
}

#[derive(Debug, Clone, Copy)]
pub struct EnsembleParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: Option<usize>,
    /// First RNG stream; tree `t` uses `stream_base + t`.
    pub stream_base: u64,
}

impl TreeEnsemble {
    pub fn fit(data: &Data, params: EnsembleParams, seed: u64) -> Self {
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut rng = PortableRng::new(seed, params.stream_base + t as u64);
                let weights = if params.bootstrap {
                    bootstrap_weights(data.len(), &mut rng)
                } else {
                    vec![1.0; data.len()]
                };
                let tp = TreeParams {
                    max_depth: None,
                    max_features: params.max_features,
                };
                let sample_features = params.max_features.is_some_and(|m| m < data.d);
                Tree::fit(data, &weights, tp, sample_features.then_some(&mut rng))
            })
            .collect();
        Self { trees }
    }

    pub fn from_trees(trees: Vec<Tree>) -> Self {
        Self { trees }
    }

    pub fn prob1(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.prob1(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.prob1(x) > 0.5) as u8
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }
}

/// Discrete AdaBoost (SAMME) over depth-1 trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoost {
    stumps: Vec<(Tree, f64)>,
}

impl AdaBoost {
    /// `None` when not even the first stump beats chance.
    pub fn fit(data: &Data, rounds: usize) -> Option<Self> {
        let n = data.len();
        let mut w = vec![1.0 / n as f64; n];
        let mut stumps = Vec::new();
        let params = TreeParams {
            max_depth: Some(1),
            max_features: None,
        };
        for _ in 0..rounds {
            let stump = Tree::fit(data, &w, params, None);
            let wrong: Vec<bool> = (0..n).map(|i| stump.predict(data.row(i)) != data.y[i]).collect();
            let total: f64 = w.iter().sum();
            let err = wrong.iter().zip(&w).filter(|(b, _)| **b).map(|(_, w)| w).sum::<f64>() / total;
            if err <= 0.0 {
                stumps.push((stump, 1.0));
                break;
            }
            if err >= 0.5 {
                break;
            }
            let alpha = ((1.0 - err) / err).ln();
            for (wi, bad) in w.iter_mut().zip(&wrong) {
                if *bad && *wi > 0.0 {
                    *wi *= alpha.exp();
                }
            }
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|wi| *wi /= s);
            stumps.push((stump, alpha));
        }
        (!stumps.is_empty()).then_some(Self { stumps })
    }

    /// Weighted vote: positive favours class 1.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.stumps
            .iter()
            .map(|(t, a)| if t.predict(x) == 1 { *a } else { -*a })
            .sum()
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        (self.score(x) > 0.0) as u8
    }

    pub fn stumps(&self) -> &[(Tree, f64)] {
        &self.stumps
    }
}
