//! Binary classifiers over feature vectors: a pruned decision tree (the
//! primary model), feature-subset selection wrappers, and MLP / SVM
//! comparison models.

pub mod data;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod select;
pub mod svm;
pub mod tree;
pub mod tuning;

pub use data::{class_counts, mask_features, samples, split_dataset, stratified_folds, Sample};
pub use metrics::{evaluate, Confusion, EvalMetrics};
pub use mlp::{train_mlp, MlpModel, MlpParams};
pub use model::{Model, ModelKind};
pub use select::{select_features, FeatureSubset, SelectionMethod, SelectionParams};
pub use svm::{train_svm, SvmModel, SvmParams};
pub use tree::{train_tree, DecisionTreeModel, Node, SplitTest, TreeParams};
pub use tuning::{cross_validate, cv_tree_metrics, tune_cp, tune_hidden_units, tune_svm, TrainingConfig, TuningMode, PAPER_CP};

use crate::features::Label;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dataset too small to split ({0} examples, need at least 10)")]
    TooSmall(usize),
    #[error("dataset has a single class")]
    SingleClass,
    #[error("empty training set")]
    EmptyTraining,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("training diverged: {0}")]
    NonFinite(String),
    #[error("svm did not converge (KKT residual {residual:.3e})")]
    SvmNotConverged { residual: f64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model file: {0}")]
    Serde(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Share of the predicted class in the leaf, or the model probability.
    pub confidence: f64,
}

/// JSON has no infinity, so cp values are written as numbers or `"inf"`.
pub mod serde_cp {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_infinite() && v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Num(v)
        }
    }

    fn from_repr<E: de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(s) => match s.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "+inf" => Ok(f64::INFINITY),
                other => other
                    .parse()
                    .map_err(|_| E::custom(format!("bad cp value {s:?}"))),
            },
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(|x| to_repr(*x)).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Vec::<Repr>::deserialize(d)?
                .into_iter()
                .map(from_repr)
                .collect()
        }
    }

    /// Parses a command-line cp value, accepting `inf`.
    pub fn parse(s: &str) -> Result<f64, String> {
        from_repr::<serde::de::value::Error>(Repr::Text(s.trim().to_string()))
            .map_err(|e| e.to_string())
            .and_then(|v| {
                if v.is_nan() || v < 0.0 {
                    Err(format!("cp must be non-negative, got {s}"))
                } else {
                    Ok(v)
                }
            })
    }
}
