//! Trained models behind one prediction interface, and the JSON model file.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mlp::MlpModel;
use super::svm::SvmModel;
use super::tree::DecisionTreeModel;
use super::{ClassifierError, Prediction};
use crate::features::{FeatureName, FeatureVector, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dt,
    Mlp,
    Svm,
}

impl FromStr for ModelKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dt" | "tree" => Ok(Self::Dt),
            "mlp" | "nn" => Ok(Self::Mlp),
            "svm" => Ok(Self::Svm),
            _ => Err(format!("unknown model kind {s:?} (dt, mlp, svm)")),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dt => "dt",
            Self::Mlp => "mlp",
            Self::Svm => "svm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Dt(DecisionTreeModel),
    Mlp(MlpModel),
    Svm(SvmModel),
}

impl From<DecisionTreeModel> for Model {
    fn from(m: DecisionTreeModel) -> Self {
        Model::Dt(m)
    }
}

impl From<MlpModel> for Model {
    fn from(m: MlpModel) -> Self {
        Model::Mlp(m)
    }
}

impl From<SvmModel> for Model {
    fn from(m: SvmModel) -> Self {
        Model::Svm(m)
    }
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Dt(_) => ModelKind::Dt,
            Model::Mlp(_) => ModelKind::Mlp,
            Model::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn feature_subset(&self) -> &[FeatureName] {
        match self {
            Model::Dt(m) => &m.feature_subset,
            Model::Mlp(m) => &m.feature_subset,
            Model::Svm(m) => &m.feature_subset,
        }
    }

    pub fn predict_row(&self, x: &[f64; FEATURE_COUNT]) -> Result<Prediction, ClassifierError> {
        match self {
            Model::Dt(m) => m.predict_row(x),
            Model::Mlp(m) => m.predict_row(x),
            Model::Svm(m) => m.predict_row(x),
        }
    }

    pub fn predict(&self, fv: &FeatureVector) -> Result<Prediction, ClassifierError> {
        self.predict_row(&fv.to_array())
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        match self {
            Model::Dt(m) => m.validate(),
            Model::Mlp(m) => m.validate(),
            Model::Svm(m) => m.validate(),
        }
    }

    pub fn to_json(&self) -> Result<String, ClassifierError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and validates a model file body.
    pub fn from_json(text: &str) -> Result<Model, ClassifierError> {
        let m: Model = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let io = |source| ClassifierError::Io {
            path: path.display().to_string(),
            source,
        };
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, self.to_json()? + "\n").map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Model, ClassifierError> {
        let text = std::fs::read_to_string(path).map_err(|source| ClassifierError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Model::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::data::Sample;
    use crate::classifier::mlp::{train_mlp, MlpParams};
    use crate::classifier::svm::{train_svm, SvmParams};
    use crate::classifier::tree::{train_tree, TreeParams};
    use crate::features::Label;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(n: usize) -> Vec<Sample> {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        (0..n)
            .map(|_| {
                let mut x = [0.0; FEATURE_COUNT];
                for v in x.iter_mut() {
                    *v = rng.gen_range(0.0..10.0);
                }
                x[0] = rng.gen_range(0..2) as f64;
                let yes = x[3] + x[0] * 3.0 < 6.0;
                Sample {
                    x,
                    y: if yes { Label::Yes } else { Label::No },
                }
            })
            .collect()
    }

    #[test]
    fn round_trip_preserves_predictions() {
        let d = data(150);
        let mut mp = MlpParams::new(4, 2);
        mp.epochs = 20;
        let models: Vec<Model> = vec![
            train_tree(&d, &FeatureName::ALL, TreeParams::with_cp(0.0)).unwrap().into(),
            train_tree(&d, &FeatureName::ALL, TreeParams::with_cp(f64::INFINITY)).unwrap().into(),
            train_mlp(&d, &FeatureName::ALL, mp).unwrap().into(),
            train_svm(&d, &FeatureName::ALL, SvmParams::new(0.03, 2.0, 3)).unwrap().into(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let probes: Vec<[f64; FEATURE_COUNT]> = (0..10_000)
            .map(|_| {
                let mut x = [0.0; FEATURE_COUNT];
                for v in x.iter_mut() {
                    *v = rng.gen_range(-5.0..15.0);
                }
                x
            })
            .collect();
        for m in models {
            let back = Model::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.kind(), m.kind());
            for x in &probes {
                assert_eq!(m.predict_row(x).unwrap(), back.predict_row(x).unwrap());
            }
        }
    }

    #[test]
    fn rejects_corrupt_tree() {
        let d = data(60);
        let mut t = train_tree(&d, &FeatureName::ALL, TreeParams::with_cp(0.0)).unwrap();
        if let crate::classifier::Node::Split { left, .. } = &mut t.nodes[0] {
            *left = 0;
        }
        let json = Model::Dt(t).to_json().unwrap();
        assert!(Model::from_json(&json).is_err());
    }

    #[test]
    fn kind_parses() {
        assert_eq!("dt".parse::<ModelKind>().unwrap(), ModelKind::Dt);
        assert!("rf".parse::<ModelKind>().is_err());
    }
}
