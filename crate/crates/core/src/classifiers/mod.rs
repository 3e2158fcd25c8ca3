//! Binary base classifiers fitted on stream prefixes.
//!
//! Every algorithm sees the same numeric encoding: numeric features pass
//! through and categorical features are one-hot encoded. Fitting is always
//! single-threaded; batch prediction may run in parallel.

mod hoeffding;
mod knn;
mod naive_bayes;
mod svm;
mod tree;

use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use hoeffding::HoeffdingTree;
pub use knn::Knn;
pub use naive_bayes::GaussianNb;
pub use svm::LinearSvm;
pub use tree::{AdaBoost, EnsembleParams, Tree, TreeEnsemble, TreeParams};

use crate::par::{self, Execution};
use crate::streamgen::{FeatureKind, FeatureValue, Instance};

pub const KNN_K: usize = 5;
pub const FOREST_TREES: usize = 100;
pub const ADABOOST_ROUNDS: usize = 50;
pub const BAGGING_TREES: usize = 10;

const FORMAT_NAME: &str = "driftbench-model";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("training data is empty")]
    Empty,
    #[error("training data contains only class {0}")]
    SingleClass(u8),
    #[error("instance does not match the training schema: {0}")]
    SchemaMismatch(String),
    #[error("label {0} is not binary")]
    BadLabel(u8),
    #[error("unknown classifier `{0}`")]
    Unknown(String),
    #[error("{0} could not find a better-than-chance stump")]
    Degenerate(Algorithm),
    #[error("model file {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    NaiveBayes,
    DecisionTree,
    HoeffdingTree,
    Knn,
    RandomForest,
    #[serde(rename = "adaboost")]
    AdaBoost,
    Bagging,
    LinearSvm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::NaiveBayes,
        Algorithm::DecisionTree,
        Algorithm::HoeffdingTree,
        Algorithm::Knn,
        Algorithm::RandomForest,
        Algorithm::AdaBoost,
        Algorithm::Bagging,
        Algorithm::LinearSvm,
    ];

    /// The six classifiers of the default experiment.
    pub const DEFAULT_SIX: [Algorithm; 6] = [
        Algorithm::LinearSvm,
        Algorithm::HoeffdingTree,
        Algorithm::Knn,
        Algorithm::RandomForest,
        Algorithm::AdaBoost,
        Algorithm::Bagging,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::NaiveBayes => "naive_bayes",
            Algorithm::DecisionTree => "decision_tree",
            Algorithm::HoeffdingTree => "hoeffding_tree",
            Algorithm::Knn => "knn",
            Algorithm::RandomForest => "random_forest",
            Algorithm::AdaBoost => "adaboost",
            Algorithm::Bagging => "bagging",
            Algorithm::LinearSvm => "linear_svm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = ClassifierError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or(ClassifierError::Unknown(s))
    }
}

/// Column layout the model was trained on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Column {
    Numeric,
    Categorical(usize),
}

impl Column {
    fn width(self) -> usize {
        match self {
            Column::Numeric => 1,
            Column::Categorical(k) => k,
        }
    }
}

pub fn columns_of(schema: &[FeatureKind]) -> Vec<Column> {
    schema
        .iter()
        .map(|k| match k {
            FeatureKind::Numeric => Column::Numeric,
            FeatureKind::Categorical(symbols) => Column::Categorical(symbols.len()),
        })
        .collect()
}

/// Infer the layout from an instance (categorical cardinality is unknown,
/// so the caller's schema is preferred when available).
fn encoded_width(columns: &[Column]) -> usize {
    columns.iter().map(|c| c.width()).sum()
}

/// Append the encoding of `inst` to `out`.
pub fn encode_into(columns: &[Column], inst: &Instance, out: &mut Vec<f64>) -> Result<(), ClassifierError> {
    if inst.features.len() != columns.len() {
        return Err(ClassifierError::SchemaMismatch(format!(
            "expected {} features, got {}",
            columns.len(),
            inst.features.len()
        )));
    }
    for (k, (v, c)) in inst.features.iter().zip(columns).enumerate() {
        match (v, c) {
            (FeatureValue::Num(x), Column::Numeric) => out.push(*x),
            (FeatureValue::Cat(j), Column::Categorical(n)) if (*j as usize) < *n => {
                out.extend((0..*n).map(|i| (i == *j as usize) as u8 as f64));
            }
            _ => {
                return Err(ClassifierError::SchemaMismatch(format!(
                    "feature {k} is {v:?}, expected {c:?}"
                )))
            }
        }
    }
    Ok(())
}

/// Row-major numeric training matrix with binary labels.
#[derive(Debug, Clone, Copy)]
pub struct Data<'a> {
    pub x: &'a [f64],
    pub d: usize,
    pub y: &'a [u8],
}

impl<'a> Data<'a> {
    pub fn new(x: &'a [f64], d: usize, y: &'a [u8]) -> Self {
        assert_eq!(x.len(), d * y.len());
        Self { x, d, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Learned {
    NaiveBayes(GaussianNb),
    DecisionTree(Tree),
    HoeffdingTree(HoeffdingTree),
    Knn(Knn),
    RandomForest(TreeEnsemble),
    AdaBoost(AdaBoost),
    Bagging(TreeEnsemble),
    LinearSvm(LinearSvm),
}

/// A fitted classifier. Immutable after fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    algorithm: Algorithm,
    trained_on: Range<usize>,
    columns: Vec<Column>,
    learned: Learned,
}

const SVM_STREAM: u64 = 100;
const FOREST_STREAM: u64 = 1_000;
const BAGGING_STREAM: u64 = 2_000;

/// Fit `algorithm` on `slice` (all of it).
pub fn fit(algorithm: Algorithm, slice: &[Instance], schema: &[FeatureKind], seed: u64) -> Result<Model, ClassifierError> {
    fit_range(algorithm, slice, 0..slice.len(), schema, seed)
}

/// Fit on `stream[range]`, recording the range in the model.
pub fn fit_range(
    algorithm: Algorithm,
    stream: &[Instance],
    range: Range<usize>,
    schema: &[FeatureKind],
    seed: u64,
) -> Result<Model, ClassifierError> {
    let slice = &stream[range.clone()];
    if slice.is_empty() {
        return Err(ClassifierError::Empty);
    }
    let columns = columns_of(schema);
    let d = encoded_width(&columns);
    let mut x = Vec::with_capacity(d * slice.len());
    let mut y = Vec::with_capacity(slice.len());
    for inst in slice {
        if inst.label > 1 {
            return Err(ClassifierError::BadLabel(inst.label));
        }
        encode_into(&columns, inst, &mut x)?;
        y.push(inst.label);
    }
    let ones = y.iter().filter(|&&l| l == 1).count();
    if ones == 0 || ones == y.len() {
        return Err(ClassifierError::SingleClass(y[0]));
    }
    let data = Data::new(&x, d, &y);
    let learned = fit_encoded(algorithm, &data, seed)?;
    Ok(Model {
        algorithm,
        trained_on: range,
        columns,
        learned,
    })
}

fn fit_encoded(algorithm: Algorithm, data: &Data, seed: u64) -> Result<Learned, ClassifierError> {
    Ok(match algorithm {
        Algorithm::NaiveBayes => Learned::NaiveBayes(GaussianNb::fit(data)),
        Algorithm::DecisionTree => {
            Learned::DecisionTree(Tree::fit(data, &vec![1.0; data.len()], TreeParams::default(), None))
        }
        Algorithm::HoeffdingTree => Learned::HoeffdingTree(HoeffdingTree::fit(data)),
        Algorithm::Knn => Learned::Knn(Knn::fit(data, KNN_K)),
        Algorithm::RandomForest => {
            let max_features = ((data.d as f64).sqrt() as usize).max(1);
            Learned::RandomForest(TreeEnsemble::fit(
                data,
                EnsembleParams {
                    n_trees: FOREST_TREES,
                    bootstrap: true,
                    max_features: Some(max_features),
                    stream_base: FOREST_STREAM,
                },
                seed,
            ))
        }
        Algorithm::AdaBoost => Learned::AdaBoost(
            AdaBoost::fit(data, ADABOOST_ROUNDS).ok_or(ClassifierError::Degenerate(Algorithm::AdaBoost))?,
        ),
        Algorithm::Bagging => Learned::Bagging(TreeEnsemble::fit(
            data,
            EnsembleParams {
                n_trees: BAGGING_TREES,
                bootstrap: true,
                max_features: None,
                stream_base: BAGGING_STREAM,
            },
            seed,
        )),
        Algorithm::LinearSvm => Learned::LinearSvm(LinearSvm::fit(data, seed, SVM_STREAM)),
    })
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    version: u32,
    model: Model,
}

impl Model {
    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn trained_on(&self) -> Range<usize> {
        self.trained_on.clone()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn width(&self) -> usize {
        encoded_width(&self.columns)
    }

    pub fn encode(&self, inst: &Instance) -> Result<Vec<f64>, ClassifierError> {
        let mut out = Vec::with_capacity(self.width());
        encode_into(&self.columns, inst, &mut out)?;
        Ok(out)
    }

    /// Flat row-major encoding of many instances.
    pub fn encode_all(&self, instances: &[Instance]) -> Result<Vec<f64>, ClassifierError> {
        let mut out = Vec::with_capacity(self.width() * instances.len());
        for inst in instances {
            encode_into(&self.columns, inst, &mut out)?;
        }
        Ok(out)
    }

    /// Predict an already encoded row.
    pub fn predict_encoded(&self, x: &[f64]) -> u8 {
        debug_assert_eq!(x.len(), self.width());
        match &self.learned {
            Learned::NaiveBayes(m) => m.predict(x),
            Learned::DecisionTree(m) => m.predict(x),
            Learned::HoeffdingTree(m) => m.predict(x),
            Learned::Knn(m) => m.predict(x),
            Learned::RandomForest(m) | Learned::Bagging(m) => m.predict(x),
            Learned::AdaBoost(m) => m.predict(x),
            Learned::LinearSvm(m) => m.predict(x),
        }
    }

    pub fn predict(&self, inst: &Instance) -> Result<u8, ClassifierError> {
        Ok(self.predict_encoded(&self.encode(inst)?))
    }

    /// Predictions for every instance, in order.
    pub fn predict_batch(&self, instances: &[Instance], exec: Execution) -> Result<Vec<u8>, ClassifierError> {
        let x = self.encode_all(instances)?;
        let d = self.width();
        Ok(par::map_range(exec, instances.len(), |i| self.predict_encoded(&x[i * d..(i + 1) * d])))
    }

    /// Fraction of `slice` predicted correctly.
    pub fn accuracy(&self, slice: &[Instance]) -> Result<f64, ClassifierError> {
        if slice.is_empty() {
            return Err(ClassifierError::Empty);
        }
        let preds = self.predict_batch(slice, Execution::Sequential)?;
        Ok(accuracy_of(&preds, slice))
    }

    /// Versioned JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&Envelope {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            model: self.clone(),
        })
        .expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let env: Envelope = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if env.format != FORMAT_NAME {
            return Err(format!("not a model file (format `{}`)", env.format));
        }
        if env.version != FORMAT_VERSION {
            return Err(format!("unsupported model version {}", env.version));
        }
        Ok(env.model)
    }

    pub fn dump(&self, path: &Path) -> Result<(), ClassifierError> {
        std::fs::write(path, self.to_json()).map_err(|source| ClassifierError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let text = std::fs::read_to_string(path).map_err(|source| ClassifierError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text).map_err(|reason| ClassifierError::Format {
            path: path.display().to_string(),
            reason,
        })
    }
}

/// Share of positions where `preds` equals the instance label.
pub fn accuracy_of(preds: &[u8], slice: &[Instance]) -> f64 {
    let hits = preds.iter().zip(slice).filter(|(p, i)| **p == i.label).count();
    hits as f64 / slice.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streamgen::{generate_stream, DriftType, Generator, StreamSpec};

    const NUM2: [FeatureKind; 2] = [FeatureKind::Numeric, FeatureKind::Numeric];

    fn inst(x: &[f64], label: u8) -> Instance {
        Instance {
            features: x.iter().map(|&v| FeatureValue::Num(v)).collect(),
            label,
        }
    }

    #[test]
    fn names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.id().parse::<Algorithm>().unwrap(), a);
        }
        assert!("svm_rbf".parse::<Algorithm>().is_err());
    }

    #[test]
    fn one_hot_encoding() {
        let schema = Generator::Mixed.schema();
        let cols = columns_of(schema);
        let i = Instance {
            features: vec![FeatureValue::Num(0.5), FeatureValue::Num(0.25), FeatureValue::Cat(1), FeatureValue::Cat(0)],
            label: 1,
        };
        let mut out = Vec::new();
        encode_into(&cols, &i, &mut out).unwrap();
        assert_eq!(out, vec![0.5, 0.25, 0.0, 1.0, 1.0, 0.0]);
        let bad = Instance {
            features: vec![FeatureValue::Num(0.5)],
            label: 0,
        };
        assert!(encode_into(&cols, &bad, &mut out).is_err());
    }

    #[test]
    fn single_class_and_empty_are_rejected() {
        let data = vec![inst(&[0.0, 1.0], 1), inst(&[1.0, 0.0], 1)];
        for a in Algorithm::ALL {
            assert!(matches!(fit(a, &data, &NUM2, 0), Err(ClassifierError::SingleClass(1))));
            assert!(matches!(fit(a, &[], &NUM2, 0), Err(ClassifierError::Empty)));
        }
    }

    #[test]
    fn tree_memorizes_small_dataset() {
        let data = vec![
            inst(&[0.0, 0.0], 0),
            inst(&[1.0, 1.0], 1),
            inst(&[0.0, 0.0], 0),
            inst(&[1.0, 1.0], 1),
        ];
        let m = fit(Algorithm::DecisionTree, &data, &NUM2, 0).unwrap();
        assert_eq!(m.accuracy(&data).unwrap(), 1.0);
    }

    #[test]
    fn schema_mismatch_on_predict() {
        let data = vec![inst(&[0.0, 0.0], 0), inst(&[1.0, 1.0], 1)];
        let m = fit(Algorithm::Knn, &data, &NUM2, 0).unwrap();
        assert!(matches!(m.predict(&inst(&[1.0], 0)), Err(ClassifierError::SchemaMismatch(_))));
        let cat = Instance {
            features: vec![FeatureValue::Cat(0), FeatureValue::Num(1.0)],
            label: 0,
        };
        assert!(m.predict(&cat).is_err());
        assert!(matches!(m.accuracy(&[]), Err(ClassifierError::Empty)));
    }

    #[test]
    fn dump_and_load_round_trip() {
        let s = generate_stream(&StreamSpec::new(Generator::Stagger, DriftType::Abrupt, 4)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for a in Algorithm::ALL {
            let m = fit_range(a, &s.instances, 0..600, s.schema(), 9).unwrap();
            let path = dir.path().join(format!("{a}.json"));
            m.dump(&path).unwrap();
            let back = Model::load(&path).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.trained_on(), 0..600);
        }
        assert!(Model::from_json(r#"{"format":"other","version":1,"model":null}"#).is_err());
    }
}
