//! Training configuration, cross-validation and hyperparameter tuning.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{stratified_folds, Sample};
use super::metrics::{evaluate, EvalMetrics};
use super::mlp::{train_mlp, MlpParams};
use super::svm::{train_svm, SvmParams};
use super::tree::{train_tree, TreeParams, DEFAULT_MAX_DEPTH, DEFAULT_MIN_LEAF};
use super::ClassifierError;
use crate::features::{FeatureName, Label};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    Loocv,
    Kfold(usize),
}

impl TuningMode {
    fn folds(self, n: usize) -> usize {
        match self {
            TuningMode::Loocv => n,
            TuningMode::Kfold(k) => k.clamp(2, n.max(2)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub split_ratio: f64,
    pub rng_seed: u64,
    pub tuning_mode: TuningMode,
    /// Descending; `inf` allowed.
    #[serde(with = "super::serde_cp::vec")]
    pub cp_grid: Vec<f64>,
    pub hidden_units_grid: Vec<usize>,
    pub gamma_grid: Vec<f64>,
    pub cost_grid: Vec<f64>,
    pub svm_degree: u32,
    pub min_leaf: usize,
    pub max_depth: usize,
}

pub const PAPER_CP: f64 = 0.012;

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            split_ratio: 0.8,
            rng_seed: 1,
            tuning_mode: TuningMode::Kfold(10),
            cp_grid: vec![
                f64::INFINITY,
                0.2,
                0.1,
                0.05,
                0.03,
                0.02,
                0.015,
                0.012,
                0.01,
                0.008,
                0.005,
            ],
            hidden_units_grid: (0..=100).step_by(2).collect(),
            gamma_grid: (-15..=-1).map(|e| 2f64.powi(e)).collect(),
            cost_grid: (0..=30).step_by(2).map(|e| 2f64.powi(e)).collect(),
            svm_degree: 3,
            min_leaf: DEFAULT_MIN_LEAF,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_string()));
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad("split_ratio must be in (0, 1)");
        }
        if self.cp_grid.is_empty()
            || self.hidden_units_grid.is_empty()
            || self.gamma_grid.is_empty()
            || self.cost_grid.is_empty()
        {
            return bad("grids must be non-empty");
        }
        if self.cp_grid.windows(2).any(|w| !(w[0] > w[1])) {
            return bad("cp_grid must be strictly descending");
        }
        if self.cp_grid.iter().any(|c| c.is_nan() || *c < 0.0) {
            return bad("cp values must be non-negative");
        }
        if self.svm_degree == 0 {
            return bad("svm_degree must be positive");
        }
        Ok(())
    }

    pub fn tree_params(&self, cp: f64) -> TreeParams {
        TreeParams {
            cp,
            min_leaf: self.min_leaf,
            max_depth: self.max_depth,
        }
    }
}

/// Out-of-fold `(predicted, truth)` pairs in input order. `fit` trains on the
/// other folds and returns a predictor for the held-out rows. Folds run in
/// parallel; results are gathered in fold order.
pub fn cross_validate<F, P>(
    samples: &[Sample],
    mode: TuningMode,
    seed: u64,
    fit: F,
) -> Result<Vec<(Label, Label)>, ClassifierError>
where
    F: Fn(&[Sample]) -> Result<P, ClassifierError> + Sync,
    P: Fn(&Sample) -> Result<Label, ClassifierError>,
{
    let labels: Vec<Label> = samples.iter().map(|s| s.y).collect();
    let k = mode.folds(samples.len());
    let folds = match mode {
        TuningMode::Loocv => (0..samples.len()).collect(),
        TuningMode::Kfold(_) => stratified_folds(&labels, k, seed),
    };
    let per_fold: Vec<Vec<(usize, Label)>> = (0..k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<Sample> = samples
                .iter()
                .zip(&folds)
                .filter(|(_, &g)| g != f)
                .map(|(s, _)| *s)
                .collect();
            if train.is_empty() {
                return Ok(Vec::new());
            }
            let predict = fit(&train)?;
            samples
                .iter()
                .enumerate()
                .filter(|(i, _)| folds[*i] == f)
                .map(|(i, s)| Ok((i, predict(s)?)))
                .collect()
        })
        .collect::<Result<_, ClassifierError>>()?;
    let mut pred = vec![None; samples.len()];
    for (i, l) in per_fold.into_iter().flatten() {
        pred[i] = Some(l);
    }
    Ok(pred
        .into_iter()
        .zip(labels)
        .filter_map(|(p, t)| p.map(|p| (p, t)))
        .collect())
}

/// Cross-validated tree metrics for one cp over a feature subset.
pub fn cv_tree_metrics(
    samples: &[Sample],
    features: &[FeatureName],
    params: TreeParams,
    mode: TuningMode,
    seed: u64,
) -> Result<EvalMetrics, ClassifierError> {
    let pairs = cross_validate(samples, mode, seed, |train| {
        let tree = train_tree(train, features, params)?;
        Ok(move |s: &Sample| tree.predict_row(&s.x).map(|p| p.label))
    })?;
    Ok(evaluate(&pairs))
}

/// Undefined F1 ranks as 0.
pub fn f1_score(m: &EvalMetrics) -> f64 {
    m.f1.unwrap_or(0.0)
}

/// Picks the grid cp with the best cross-validated F1; ties go to the larger
/// cp (the simpler tree).
pub fn tune_cp(
    samples: &[Sample],
    features: &[FeatureName],
    cfg: &TrainingConfig,
) -> Result<(f64, Vec<(f64, f64)>), ClassifierError> {
    cfg.validate()?;
    if cfg.cp_grid.len() == 1 {
        return Ok((cfg.cp_grid[0], vec![]));
    }
    let mut best = (cfg.cp_grid[0], f64::NEG_INFINITY);
    let mut trace = Vec::with_capacity(cfg.cp_grid.len());
    for &cp in &cfg.cp_grid {
        let m = cv_tree_metrics(samples, features, cfg.tree_params(cp), cfg.tuning_mode, cfg.rng_seed)?;
        let score = f1_score(&m);
        trace.push((cp, score));
        if score > best.1 {
            best = (cp, score);
        }
    }
    Ok((best.0, trace))
}

/// Best hidden-unit count from the grid by cross-validated F1; ties go to
/// fewer units.
pub fn tune_hidden_units(
    samples: &[Sample],
    features: &[FeatureName],
    cfg: &TrainingConfig,
) -> Result<(usize, Vec<(usize, f64)>), ClassifierError> {
    cfg.validate()?;
    let mut grid = cfg.hidden_units_grid.clone();
    grid.sort_unstable();
    grid.dedup();
    let mut best = (grid[0], f64::NEG_INFINITY);
    let mut trace = Vec::with_capacity(grid.len());
    for &h in &grid {
        let pairs = cross_validate(samples, cfg.tuning_mode, cfg.rng_seed, |train| {
            let m = train_mlp(train, features, MlpParams::new(h, cfg.rng_seed))?;
            Ok(move |s: &Sample| m.predict_row(&s.x).map(|p| p.label))
        })?;
        let score = f1_score(&evaluate(&pairs));
        trace.push((h, score));
        if score > best.1 {
            best = (h, score);
        }
    }
    Ok((best.0, trace))
}

/// Best `(gamma, cost)` over the grids by cross-validated F1; ties go to the
/// earlier pair in (gamma, cost) ascending order.
pub fn tune_svm(
    samples: &[Sample],
    features: &[FeatureName],
    cfg: &TrainingConfig,
) -> Result<((f64, f64), Vec<((f64, f64), f64)>), ClassifierError> {
    cfg.validate()?;
    let mut gammas = cfg.gamma_grid.clone();
    let mut costs = cfg.cost_grid.clone();
    gammas.sort_by(f64::total_cmp);
    costs.sort_by(f64::total_cmp);
    let mut best = ((gammas[0], costs[0]), f64::NEG_INFINITY);
    let mut trace = Vec::new();
    for &g in &gammas {
        for &c in &costs {
            let params = SvmParams::new(g, c, cfg.svm_degree);
            let pairs = cross_validate(samples, cfg.tuning_mode, cfg.rng_seed, |train| {
                let m = train_svm(train, features, params)?;
                Ok(move |s: &Sample| m.predict_row(&s.x).map(|p| p.label))
            })?;
            let score = f1_score(&evaluate(&pairs));
            trace.push(((g, c), score));
            if score > best.1 {
                best = ((g, c), score);
            }
        }
    }
    Ok((best.0, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_COUNT;

    fn separable(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let mut x = [0.0; FEATURE_COUNT];
                x[FeatureName::Ssvc.index()] = i as f64 / n as f64;
                let y = if i < n / 2 { Label::Yes } else { Label::No };
                Sample { x, y }
            })
            .collect()
    }

    #[test]
    fn singleton_grid() {
        let cfg = TrainingConfig {
            cp_grid: vec![f64::INFINITY],
            ..Default::default()
        };
        let (cp, _) = tune_cp(&separable(40), &FeatureName::ALL, &cfg).unwrap();
        assert!(cp.is_infinite());
    }

    #[test]
    fn separable_data_admits_the_split() {
        let data = separable(60);
        let cfg = TrainingConfig::default();
        let (cp, _) = tune_cp(&data, &FeatureName::ALL, &cfg).unwrap();
        let tree = train_tree(&data, &FeatureName::ALL, cfg.tree_params(cp)).unwrap();
        assert!(tree.depth() >= 1);
        assert_eq!(tree.root_feature(), Some(FeatureName::Ssvc));
    }

    #[test]
    fn ties_choose_larger_cp() {
        // every finite cp below the root gain yields the same single split
        let data = separable(60);
        let cfg = TrainingConfig {
            cp_grid: vec![0.5, 0.3, 0.1],
            ..Default::default()
        };
        let (cp, trace) = tune_cp(&data, &FeatureName::ALL, &cfg).unwrap();
        assert!(trace.iter().all(|t| t.1 == trace[0].1), "{trace:?}");
        assert_eq!(cp, 0.5);
    }

    #[test]
    fn loocv_covers_every_row_once() {
        let data = separable(24);
        let pairs = cross_validate(&data, TuningMode::Loocv, 0, |train| {
            let t = train_tree(train, &FeatureName::ALL, TreeParams::with_cp(0.01))?;
            Ok(move |s: &Sample| t.predict_row(&s.x).map(|p| p.label))
        })
        .unwrap();
        assert_eq!(pairs.len(), 24);
    }

    #[test]
    fn rejects_bad_grid() {
        let cfg = TrainingConfig {
            cp_grid: vec![0.01, 0.1],
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn hidden_unit_ties_prefer_fewer() {
        let cfg = TrainingConfig {
            hidden_units_grid: vec![4, 0, 2],
            tuning_mode: TuningMode::Kfold(4),
            ..Default::default()
        };
        let (h, trace) = tune_hidden_units(&separable(40), &[FeatureName::Ssvc], &cfg).unwrap();
        assert_eq!(trace.iter().map(|t| t.0).collect::<Vec<_>>(), vec![0, 2, 4]);
        let top = trace.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(h, trace.iter().find(|t| t.1 == top).unwrap().0);
    }

    #[test]
    fn svm_grid_search() {
        let cfg = TrainingConfig {
            gamma_grid: vec![0.5, 0.125],
            cost_grid: vec![1.0, 4.0],
            tuning_mode: TuningMode::Kfold(4),
            ..Default::default()
        };
        let ((g, c), trace) = tune_svm(&separable(40), &[FeatureName::Ssvc], &cfg).unwrap();
        assert_eq!(trace.len(), 4);
        assert_eq!(trace[0].0, (0.125, 1.0));
        let top = trace.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        assert!(top > 0.9);
        assert_eq!((g, c), trace.iter().find(|t| t.1 == top).unwrap().0);
    }
}
