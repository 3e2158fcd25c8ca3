//! Hoeffding tree (VFDT) with Gaussian numeric observers and
//! naive-Bayes-adaptive leaves. Fitted by one sequential pass.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use super::Data;

pub const GRACE_PERIOD: f64 = 200.0;
pub const SPLIT_CONFIDENCE: f64 = 1e-7;
pub const TIE_THRESHOLD: f64 = 0.05;
const SPLIT_POINTS: usize = 10;
const MIN_BRANCH_FRACTION: f64 = 0.01;

/// Weighted running normal estimate with observed range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Gaussian {
    weight: f64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl Default for Gaussian {
    fn default() -> Self {
        Self {
            weight: 0.0,
            mean: 0.0,
            m2: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Gaussian {
    fn update(&mut self, x: f64) {
        self.weight += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.weight;
        self.m2 += delta * (x - self.mean);
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    fn var(&self) -> f64 {
        if self.weight > 1.0 {
            self.m2 / (self.weight - 1.0)
        } else {
            0.0
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let sd = self.var().sqrt();
        if sd == 0.0 {
            return if x >= self.mean { 1.0 } else { 0.0 };
        }
        0.5 * (1.0 + erf((x - self.mean) / (sd * std::f64::consts::SQRT_2)))
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        let var = self.var();
        if var == 0.0 {
            return if x == self.mean { 0.0 } else { f64::NEG_INFINITY };
        }
        -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - self.mean) * (x - self.mean) / (2.0 * var)
    }

    /// Weight of this class expected at or below `t`.
    fn weight_below(&self, t: f64) -> f64 {
        if self.weight == 0.0 || t < self.min {
            0.0
        } else if t >= self.max {
            self.weight
        } else {
            self.weight * self.cdf(t)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Leaf {
    class_w: [f64; 2],
    observers: Vec<[Gaussian; 2]>,
    weight_at_eval: f64,
    mc_correct: f64,
    nb_correct: f64,
}

impl Leaf {
    fn new(d: usize, class_w: [f64; 2]) -> Self {
        Self {
            class_w,
            observers: vec![[Gaussian::default(); 2]; d],
            weight_at_eval: class_w[0] + class_w[1],
            mc_correct: 0.0,
            nb_correct: 0.0,
        }
    }

    fn total(&self) -> f64 {
        self.class_w[0] + self.class_w[1]
    }

    fn majority(&self) -> u8 {
        (self.class_w[1] > self.class_w[0]) as u8
    }

    fn naive_bayes(&self, x: &[f64]) -> u8 {
        let total = self.total();
        let score = |c: usize| {
            if self.class_w[c] == 0.0 {
                return f64::NEG_INFINITY;
            }
            let mut s = (self.class_w[c] / total).ln();
            for (obs, xi) in self.observers.iter().zip(x) {
                if obs[c].weight > 0.0 {
                    s += obs[c].ln_pdf(*xi);
                }
            }
            s
        };
        let (s0, s1) = (score(0), score(1));
        if s0 == f64::NEG_INFINITY && s1 == f64::NEG_INFINITY {
            self.majority()
        } else {
            (s1 > s0) as u8
        }
    }

    fn predict(&self, x: &[f64]) -> u8 {
        if self.mc_correct > self.nb_correct {
            self.majority()
        } else {
            self.naive_bayes(x)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(Leaf),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoeffdingTree {
    d: usize,
    nodes: Vec<Node>,
}

fn entropy(w: [f64; 2]) -> f64 {
    let t = w[0] + w[1];
    if t <= 0.0 {
        return 0.0;
    }
    w.iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / t;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    merit: f64,
    feature: usize,
    threshold: f64,
    left: [f64; 2],
    right: [f64; 2],
}

impl HoeffdingTree {
    pub fn fit(data: &Data) -> Self {
        let mut tree = Self {
            d: data.d,
            nodes: vec![Node::Leaf(Leaf::new(data.d, [0.0; 2]))],
        };
        for i in 0..data.len() {
            tree.learn_one(data.row(i), data.y[i]);
        }
        tree
    }

    fn leaf_for(&self, x: &[f64]) -> usize {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf(_) => return at,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn learn_one(&mut self, x: &[f64], y: u8) {
        let at = self.leaf_for(x);
        let Node::Leaf(leaf) = &mut self.nodes[at] else {
            unreachable!()
        };
        if leaf.total() > 0.0 {
            if leaf.majority() == y {
                leaf.mc_correct += 1.0;
            }
            if leaf.naive_bayes(x) == y {
                leaf.nb_correct += 1.0;
            }
        }
        leaf.class_w[y as usize] += 1.0;
        for (obs, xi) in leaf.observers.iter_mut().zip(x) {
            obs[y as usize].update(*xi);
        }
        if leaf.total() - leaf.weight_at_eval >= GRACE_PERIOD {
            leaf.weight_at_eval = leaf.total();
            self.attempt_split(at);
        }
    }

    fn attempt_split(&mut self, at: usize) {
        let Node::Leaf(leaf) = &self.nodes[at] else {
            return;
        };
        if leaf.class_w[0] == 0.0 || leaf.class_w[1] == 0.0 {
            return;
        }
        let total = leaf.total();
        let parent_h = entropy(leaf.class_w);
        let mut best_per_feature: Vec<Candidate> = Vec::new();
        for (f, obs) in leaf.observers.iter().enumerate() {
            let present = obs.iter().filter(|g| g.weight > 0.0);
            let lo = present.clone().map(|g| g.min).fold(f64::INFINITY, f64::min);
            let hi = present.map(|g| g.max).fold(f64::NEG_INFINITY, f64::max);
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                continue;
            }
            let step = (hi - lo) / (SPLIT_POINTS + 1) as f64;
            let mut best: Option<Candidate> = None;
            for k in 1..=SPLIT_POINTS {
                let t = lo + step * k as f64;
                let left = [obs[0].weight_below(t), obs[1].weight_below(t)];
                let right = [leaf.class_w[0] - left[0], leaf.class_w[1] - left[1]];
                let (lw, rw) = (left[0] + left[1], right[0] + right[1]);
                if lw < MIN_BRANCH_FRACTION * total || rw < MIN_BRANCH_FRACTION * total {
                    continue;
                }
                let merit = parent_h - (lw * entropy(left) + rw * entropy(right)) / total;
                if best.as_ref().is_none_or(|b| merit > b.merit) {
                    best = Some(Candidate {
                        merit,
                        feature: f,
                        threshold: t,
                        left,
                        right,
                    });
                }
            }
            best_per_feature.extend(best);
        }
        best_per_feature.sort_by(|a, b| b.merit.total_cmp(&a.merit));
        let Some(best) = best_per_feature.first() else {
            return;
        };
        // a "do not split" option always competes with merit 0
        let second = best_per_feature.get(1).map_or(0.0, |c| c.merit.max(0.0));
        let bound = (SPLIT_CONFIDENCE.recip().ln() / (2.0 * total)).sqrt();
        if best.merit > 0.0 && (best.merit - second > bound || bound < TIE_THRESHOLD) {
            let (feature, threshold) = (best.feature, best.threshold);
            let left = self.nodes.len();
            self.nodes.push(Node::Leaf(Leaf::new(self.d, best.left)));
            self.nodes.push(Node::Leaf(Leaf::new(self.d, best.right)));
            self.nodes[at] = Node::Split {
                feature,
                threshold,
                left,
                right: left + 1,
            };
        }
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        match &self.nodes[self.leaf_for(x)] {
            Node::Leaf(leaf) => leaf.predict(x),
            Node::Split { .. } => unreachable!(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}
