//! Base concepts of the five generators. Drift never changes these
//! functions; it only reverses their output.

use crate::rng::PortableRng;

/// SINE: positive below the sine curve.
pub fn sine(x1: f64, x2: f64) -> u8 {
    (x2 < x1.sin()) as u8
}

pub const STAGGER_SIZES: [&str; 3] = ["small", "medium", "large"];
pub const STAGGER_COLORS: [&str; 3] = ["red", "green", "blue"];
pub const STAGGER_SHAPES: [&str; 3] = ["circle", "square", "triangle"];

/// STAGGER, first concept: small and red. Arguments index the symbol tables.
pub fn stagger(size: u8, color: u8, _shape: u8) -> u8 {
    (size == 0 && color == 0) as u8
}

/// MIXED: at least two of the two booleans and the sine-band condition.
pub fn mixed(x1: f64, x2: f64, x3: bool, x4: bool) -> u8 {
    let band = x2 < 0.5 + 0.3 * (3.0 * std::f64::consts::PI * x1).sin();
    ((x3 as u8 + x4 as u8 + band as u8) >= 2) as u8
}

pub const SEA_THRESHOLD: f64 = 8.0;

/// SEA with threshold 8; the third attribute is noise.
pub fn sea(x1: f64, x2: f64, _x3: f64) -> u8 {
    (x1 + x2 <= SEA_THRESHOLD) as u8
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(u8),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn label(&self, x: [f64; 2]) -> u8 {
        match self {
            Node::Leaf(l) => *l,
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.label(x)
                } else {
                    right.label(x)
                }
            }
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// Random axis-aligned tree over two features in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RandomTree {
    root: Node,
}

impl RandomTree {
    pub const MAX_DEPTH: usize = 5;
    /// Below this depth every node splits.
    const FIRST_LEAF_DEPTH: usize = 2;
    const LEAF_FRACTION: f64 = 0.15;
    const PROBE_POINTS: usize = 1000;
    /// Trees whose minority class covers less than this share of the probe
    /// set are rejected and redrawn.
    const MIN_MINORITY: f64 = 0.1;

    /// The tree determined by `tree_seed`. Degenerate draws are replaced by
    /// the next draw from the same generator.
    pub fn from_seed(tree_seed: u64) -> Self {
        let mut rng = PortableRng::new(tree_seed, 2);
        let mut probe_rng = PortableRng::new(tree_seed, 3);
        let probe: Vec<[f64; 2]> = (0..Self::PROBE_POINTS)
            .map(|_| [probe_rng.uniform(), probe_rng.uniform()])
            .collect();
        loop {
            let root = Self::grow(&mut rng, 0, [(0.0, 1.0), (0.0, 1.0)]);
            let tree = Self { root };
            let ones = probe.iter().filter(|&&x| tree.label(x[0], x[1]) == 1).count();
            let share = ones as f64 / probe.len() as f64;
            if share.min(1.0 - share) >= Self::MIN_MINORITY {
                return tree;
            }
        }
    }

    /// Single split on `feature` at `threshold` with the given leaf labels.
    pub fn stump(feature: usize, threshold: f64, left: u8, right: u8) -> Self {
        Self {
            root: Node::Split {
                feature,
                threshold,
                left: Box::new(Node::Leaf(left)),
                right: Box::new(Node::Leaf(right)),
            },
        }
    }

    fn grow(rng: &mut PortableRng, depth: usize, bounds: [(f64, f64); 2]) -> Node {
        let leaf = depth == Self::MAX_DEPTH
            || (depth >= Self::FIRST_LEAF_DEPTH && rng.coin(Self::LEAF_FRACTION));
        if leaf {
            return Node::Leaf(rng.below(2) as u8);
        }
        let feature = rng.below(2) as usize;
        let (lo, hi) = bounds[feature];
        let threshold = rng.uniform_in(lo, hi);
        let mut lb = bounds;
        lb[feature] = (lo, threshold);
        let mut rb = bounds;
        rb[feature] = (threshold, hi);
        Node::Split {
            feature,
            threshold,
            left: Box::new(Self::grow(rng, depth + 1, lb)),
            right: Box::new(Self::grow(rng, depth + 1, rb)),
        }
    }

    pub fn label(&self, x1: f64, x2: f64) -> u8 {
        self.root.label([x1, x2])
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// RT concept for a tree drawn from `tree_seed`.
pub fn rt(x1: f64, x2: f64, tree_seed: u64) -> u8 {
    RandomTree::from_seed(tree_seed).label(x1, x2)
}
