//! Single-hidden-layer perceptron with logistic units and a logistic output,
//! trained by mini-batch gradient descent on mean cross-entropy.
//!
//! With zero hidden units the network is plain logistic regression.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{project, Sample, Standardizer};
use super::{ClassifierError, Prediction};
use crate::features::{FeatureName, Label, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl MlpParams {
    pub fn new(hidden_units: usize, seed: u64) -> Self {
        Self {
            hidden_units,
            learning_rate: 0.1,
            epochs: 200,
            batch_size: 32,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub params: MlpParams,
    pub feature_subset: Vec<FeatureName>,
    pub standardizer: Standardizer,
    /// `hidden_units × inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// Hidden-to-output weights; input-to-output when there is no hidden layer.
    pub w2: Vec<f64>,
    pub b2: f64,
    /// Mean training loss after each accepted epoch.
    #[serde(default)]
    pub loss_history: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl MlpModel {
    fn inputs(&self) -> usize {
        self.feature_subset.len()
    }

    /// All weights as one vector: w1, b1, w2, b2.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + 1);
        p.extend(&self.w1);
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }

    pub fn set_flat_params(&mut self, p: &[f64]) {
        let (a, rest) = p.split_at(self.w1.len());
        let (b, rest) = rest.split_at(self.b1.len());
        let (c, rest) = rest.split_at(self.w2.len());
        self.w1.copy_from_slice(a);
        self.b1.copy_from_slice(b);
        self.w2.copy_from_slice(c);
        self.b2 = rest[0];
    }

    /// Output logit for a standardized input row; fills `hidden` with the
    /// hidden activations.
    fn logit(&self, z: &[f64], hidden: &mut Vec<f64>) -> f64 {
        let d = self.inputs();
        hidden.clear();
        if self.params.hidden_units == 0 {
            return self.b2 + self.w2.iter().zip(z).map(|(w, v)| w * v).sum::<f64>();
        }
        for h in 0..self.params.hidden_units {
            let row = &self.w1[h * d..(h + 1) * d];
            let a = self.b1[h] + row.iter().zip(z).map(|(w, v)| w * v).sum::<f64>();
            hidden.push(sigmoid(a));
        }
        self.b2 + self.w2.iter().zip(hidden.iter()).map(|(w, v)| w * v).sum::<f64>()
    }

    /// Mean cross-entropy over standardized rows and its gradient with
    /// respect to `flat_params`.
    pub fn loss_and_gradient(&self, rows: &[(Vec<f64>, f64)]) -> (f64, Vec<f64>) {
        let d = self.inputs();
        let h_units = self.params.hidden_units;
        let mut grad = vec![0.0; self.w1.len() + self.b1.len() + self.w2.len() + 1];
        let (g_w1, rest) = grad.split_at_mut(self.w1.len());
        let (g_b1, rest) = rest.split_at_mut(self.b1.len());
        let (g_w2, g_b2) = rest.split_at_mut(self.w2.len());
        let mut loss = 0.0;
        let mut hidden = Vec::with_capacity(h_units);
        for (z, y) in rows {
            let out = self.logit(z, &mut hidden);
            loss += softplus(out) - y * out;
            let delta = sigmoid(out) - y;
            g_b2[0] += delta;
            if h_units == 0 {
                for (g, v) in g_w2.iter_mut().zip(z) {
                    *g += delta * v;
                }
                continue;
            }
            for h in 0..h_units {
                g_w2[h] += delta * hidden[h];
                let dh = delta * self.w2[h] * hidden[h] * (1.0 - hidden[h]);
                g_b1[h] += dh;
                for (g, v) in g_w1[h * d..(h + 1) * d].iter_mut().zip(z) {
                    *g += dh * v;
                }
            }
        }
        let n = rows.len().max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }

    pub fn probability(&self, x: &[f64; FEATURE_COUNT]) -> Result<f64, ClassifierError> {
        let raw = project(x, &self.feature_subset);
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::InvalidInput("non-finite feature value".into()));
        }
        let z = self.standardizer.apply(&raw);
        let mut hidden = Vec::new();
        Ok(sigmoid(self.logit(&z, &mut hidden)))
    }

    pub fn predict_row(&self, x: &[f64; FEATURE_COUNT]) -> Result<Prediction, ClassifierError> {
        let p = self.probability(x)?;
        // 0.5 exactly goes to NO, matching the tree's tie rule
        Ok(if p > 0.5 {
            Prediction { label: Label::Yes, confidence: p }
        } else {
            Prediction { label: Label::No, confidence: 1.0 - p }
        })
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let d = self.inputs();
        let h = self.params.hidden_units;
        let ok = self.standardizer.mean.len() == d
            && self.standardizer.scale.len() == d
            && self.w1.len() == h * d
            && self.b1.len() == h
            && self.w2.len() == if h == 0 { d } else { h };
        if !ok {
            return Err(ClassifierError::InvalidModel("mlp weight shapes do not match".into()));
        }
        if self.flat_params().iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::InvalidModel("non-finite mlp weight".into()));
        }
        Ok(())
    }
}

fn standardized_rows(
    samples: &[Sample],
    features: &[FeatureName],
    st: &Standardizer,
) -> Vec<(Vec<f64>, f64)> {
    samples
        .iter()
        .map(|s| {
            let y = if s.y == Label::Yes { 1.0 } else { 0.0 };
            (st.apply(&project(&s.x, features)), y)
        })
        .collect()
}

/// Trains with a seeded initialization and shuffle order. After each epoch
/// the full training loss is measured; an epoch that raises it is undone and
/// the learning rate halved, so `loss_history` never increases.
pub fn train_mlp(
    samples: &[Sample],
    features: &[FeatureName],
    params: MlpParams,
) -> Result<MlpModel, ClassifierError> {
    if samples.is_empty() {
        return Err(ClassifierError::EmptyTraining);
    }
    if features.is_empty() {
        return Err(ClassifierError::InvalidConfig("empty feature subset".into()));
    }
    if params.batch_size == 0 || !(params.learning_rate > 0.0) {
        return Err(ClassifierError::InvalidConfig(
            "batch_size and learning_rate must be positive".into(),
        ));
    }
    let features = features.to_vec();
    let d = features.len();
    let h = params.hidden_units;
    let raw: Vec<Vec<f64>> = samples.iter().map(|s| project(&s.x, &features)).collect();
    if raw.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ClassifierError::InvalidInput("non-finite feature value".into()));
    }
    let standardizer = Standardizer::fit(&raw);
    let rows = standardized_rows(samples, &features, &standardizer);

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let fan_in = |n: usize| 1.0 / (n.max(1) as f64).sqrt();
    let s1 = fan_in(d);
    let s2 = fan_in(if h == 0 { d } else { h });
    let mut model = MlpModel {
        params,
        feature_subset: features,
        standardizer,
        w1: (0..h * d).map(|_| rng.gen_range(-s1..s1)).collect(),
        b1: vec![0.0; h],
        w2: (0..if h == 0 { d } else { h })
            .map(|_| rng.gen_range(-s2..s2))
            .collect(),
        b2: 0.0,
        loss_history: Vec::new(),
    };

    let mut lr = params.learning_rate;
    let mut current = model.loss_and_gradient(&rows).0;
    if !current.is_finite() {
        return Err(ClassifierError::NonFinite(format!("initial loss {current}")));
    }
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut batch = Vec::with_capacity(params.batch_size);
    for epoch in 0..params.epochs {
        let saved = model.flat_params();
        order.shuffle(&mut rng);
        for chunk in order.chunks(params.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| rows[i].clone()));
            let (_, grad) = model.loss_and_gradient(&batch);
            let mut p = model.flat_params();
            for (w, g) in p.iter_mut().zip(&grad) {
                *w -= lr * g;
            }
            model.set_flat_params(&p);
        }
        let loss = model.loss_and_gradient(&rows).0;
        if !loss.is_finite() {
            return Err(ClassifierError::NonFinite(format!(
                "loss {loss} at epoch {epoch} with learning rate {lr}"
            )));
        }
        if loss > current {
            model.set_flat_params(&saved);
            lr /= 2.0;
            model.loss_history.push(current);
            if lr < 1e-9 {
                break;
            }
        } else {
            current = loss;
            model.loss_history.push(loss);
        }
    }
    Ok(model)
}
