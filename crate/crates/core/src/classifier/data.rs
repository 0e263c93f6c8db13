use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::features::{FeatureName, Label, LabeledExample, FEATURE_COUNT};

/// A training row: feature values in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x: [f64; FEATURE_COUNT],
    pub y: Label,
}

impl From<&LabeledExample> for Sample {
    fn from(e: &LabeledExample) -> Self {
        Sample {
            x: e.features.to_array(),
            y: e.label,
        }
    }
}

pub fn samples(examples: &[LabeledExample]) -> Vec<Sample> {
    examples.iter().map(Sample::from).collect()
}

pub fn class_counts(samples: &[Sample]) -> [usize; 2] {
    let mut c = [0; 2];
    for s in samples {
        c[s.y.index()] += 1;
    }
    c
}

/// Stratified split: each class contributes `round(n_class * ratio)` items to
/// the training part. Both parts keep the input order.
pub fn split_dataset<T: Clone>(
    items: &[T],
    label_of: impl Fn(&T) -> Label,
    ratio: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), ClassifierError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(ClassifierError::InvalidConfig(format!(
            "split ratio {ratio} outside (0, 1)"
        )));
    }
    if items.len() < 10 {
        return Err(ClassifierError::TooSmall(items.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; items.len()];
    let mut classes_present = 0;
    for label in [Label::No, Label::Yes] {
        let mut idx: Vec<usize> = (0..items.len())
            .filter(|&i| label_of(&items[i]) == label)
            .collect();
        if idx.is_empty() {
            continue;
        }
        classes_present += 1;
        idx.shuffle(&mut rng);
        let take = (idx.len() as f64 * ratio).round() as usize;
        for &i in &idx[..take] {
            in_train[i] = true;
        }
    }
    if classes_present < 2 {
        return Err(ClassifierError::SingleClass);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, item) in items.iter().enumerate() {
        if in_train[i] {
            train.push(item.clone());
        } else {
            test.push(item.clone());
        }
    }
    Ok((train, test))
}

/// Stratified fold ids in `0..k`: each class is shuffled and dealt
/// round-robin, continuing the deal across classes.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Vec<usize> {
    let k = k.clamp(1, labels.len().max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for label in [Label::No, Label::Yes] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == label).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    fold
}

/// Copies only the columns in `subset` (others zeroed) so models trained on a
/// subset cannot read the rest.
pub fn mask_features(samples: &[Sample], subset: &[FeatureName]) -> Vec<Sample> {
    samples
        .iter()
        .map(|s| {
            let mut x = [0.0; FEATURE_COUNT];
            for f in subset {
                x[f.index()] = s.x[f.index()];
            }
            Sample { x, y: s.y }
        })
        .collect()
}

/// Zero-mean, unit-variance scaling fitted on training rows. Constant
/// columns keep scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut scale = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in scale.iter_mut().zip(r).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        for s in scale.iter_mut() {
            let sd = (*s / n).sqrt();
            *s = if sd > 1e-12 { sd } else { 1.0 };
        }
        Standardizer { mean, scale }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }
}

/// Projects a sample onto the columns of `subset`, in subset order.
pub fn project(x: &[f64; FEATURE_COUNT], subset: &[FeatureName]) -> Vec<f64> {
    subset.iter().map(|f| x[f.index()]).collect()
}
