//! Soft-margin SVM with a polynomial kernel, trained by sequential minimal
//! optimization.
//!
//! Solves the dual `min ½ aᵀQa − Σa` subject to `0 ≤ a ≤ C`, `yᵀa = 0` with
//! `Q_ij = y_i y_j K(x_i, x_j)`. Each step picks the maximal violating pair
//! using second-order information and stops once the gap between the two
//! violation bounds falls below the tolerance.

use serde::{Deserialize, Serialize};

use super::data::{project, Sample, Standardizer};
use super::{ClassifierError, Prediction};
use crate::features::{FeatureName, Label, FEATURE_COUNT};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub gamma: f64,
    pub cost: f64,
    pub degree: u32,
    pub coef0: f64,
    pub tolerance: f64,
    /// 0 picks `max(10^7, 100 n)`.
    #[serde(default)]
    pub max_iterations: u64,
}

impl SvmParams {
    pub fn new(gamma: f64, cost: f64, degree: u32) -> Self {
        Self {
            gamma,
            cost,
            degree,
            coef0: 1.0,
            tolerance: 1e-3,
            max_iterations: 0,
        }
    }

    pub fn kernel(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        (self.gamma * dot + self.coef0).powi(self.degree as i32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    /// Row index in the training set.
    pub index: usize,
    /// Standardized input.
    pub x: Vec<f64>,
    pub alpha: f64,
    /// +1 for YES, −1 for NO.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    pub feature_subset: Vec<FeatureName>,
    pub standardizer: Standardizer,
    pub support_vectors: Vec<SupportVector>,
    /// Decision is `Σ α_i y_i K(x_i, x) − rho`.
    pub rho: f64,
    pub iterations: u64,
}

impl SvmModel {
    pub fn decision_standardized(&self, z: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .map(|sv| sv.alpha * sv.y * self.params.kernel(&sv.x, z))
            .sum::<f64>()
            - self.rho
    }

    pub fn standardize(&self, x: &[f64; FEATURE_COUNT]) -> Vec<f64> {
        self.standardizer.apply(&project(x, &self.feature_subset))
    }

    pub fn decision(&self, x: &[f64; FEATURE_COUNT]) -> Result<f64, ClassifierError> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::InvalidInput("non-finite feature value".into()));
        }
        Ok(self.decision_standardized(&self.standardize(x)))
    }

    pub fn predict_row(&self, x: &[f64; FEATURE_COUNT]) -> Result<Prediction, ClassifierError> {
        let f = self.decision(x)?;
        let label = if f > 0.0 { Label::Yes } else { Label::No };
        // margin squashed to (0.5, 1]; not a calibrated probability
        let confidence = 1.0 / (1.0 + (-f.abs()).exp());
        Ok(Prediction { label, confidence })
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let d = self.feature_subset.len();
        if self.standardizer.mean.len() != d
            || self.support_vectors.iter().any(|sv| sv.x.len() != d)
        {
            return Err(ClassifierError::InvalidModel("svm dimensions do not match".into()));
        }
        if !self.rho.is_finite()
            || self
                .support_vectors
                .iter()
                .any(|sv| !sv.alpha.is_finite() || sv.y.abs() != 1.0)
        {
            return Err(ClassifierError::InvalidModel("bad support vector".into()));
        }
        Ok(())
    }
}

struct Solver {
    k: Vec<f64>,
    n: usize,
    y: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    c: f64,
}

impl Solver {
    fn kij(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] > 0.0) || (self.y[t] < 0.0 && self.alpha[t] < self.c)
    }

    /// The working pair, or the current gap once it is below `tol`.
    fn select(&self, tol: f64) -> Result<(usize, usize), f64> {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..self.n {
            if self.in_up(t) {
                let v = -self.y[t] * self.grad[t];
                if v > gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..self.n {
            if !self.in_low(t) {
                continue;
            }
            let v = self.y[t] * self.grad[t];
            gmax2 = gmax2.max(v);
            if i == usize::MAX {
                continue;
            }
            let b = gmax + v;
            if b > 0.0 {
                let mut a = self.kij(i, i) + self.kij(t, t) - 2.0 * self.kij(i, t);
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        let gap = gmax + gmax2;
        if gap < tol || i == usize::MAX || j == usize::MAX {
            Err(gap.max(0.0))
        } else {
            Ok((i, j))
        }
    }

    fn q(&self, i: usize, j: usize) -> f64 {
        self.y[i] * self.y[j] * self.kij(i, j)
    }

    fn update(&mut self, i: usize, j: usize) {
        let c = self.c;
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        if self.y[i] != self.y[j] {
            let mut quad = self.q(i, i) + self.q(j, j) + 2.0 * self.q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = self.q(i, i) + self.q(j, j) - 2.0 * self.q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for t in 0..self.n {
            self.grad[t] += self.q(i, t) * di + self.q(j, t) * dj;
        }
    }

    fn rho(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut sum, mut free) = (0.0, 0usize);
        for t in 0..self.n {
            let yg = self.y[t] * self.grad[t];
            if self.alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                sum += yg;
                free += 1;
            }
        }
        if free > 0 {
            sum / free as f64
        } else {
            (ub + lb) / 2.0
        }
    }
}

pub fn train_svm(
    samples: &[Sample],
    features: &[FeatureName],
    params: SvmParams,
) -> Result<SvmModel, ClassifierError> {
    if samples.is_empty() {
        return Err(ClassifierError::EmptyTraining);
    }
    if features.is_empty() {
        return Err(ClassifierError::InvalidConfig("empty feature subset".into()));
    }
    if !(params.cost > 0.0) || !(params.gamma > 0.0) || params.degree == 0 || !(params.tolerance > 0.0) {
        return Err(ClassifierError::InvalidConfig(
            "gamma, cost, degree and tolerance must be positive".into(),
        ));
    }
    let features = features.to_vec();
    let raw: Vec<Vec<f64>> = samples.iter().map(|s| project(&s.x, &features)).collect();
    if raw.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ClassifierError::InvalidInput("non-finite feature value".into()));
    }
    let standardizer = Standardizer::fit(&raw);
    let xs: Vec<Vec<f64>> = raw.iter().map(|r| standardizer.apply(r)).collect();
    let n = xs.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = params.kernel(&xs[i], &xs[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(ClassifierError::NonFinite("kernel matrix overflow".into()));
    }
    let y: Vec<f64> = samples
        .iter()
        .map(|s| if s.y == Label::Yes { 1.0 } else { -1.0 })
        .collect();
    let mut s = Solver {
        k,
        n,
        y,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        c: params.cost,
    };
    let max_iter = if params.max_iterations == 0 {
        (100 * n as u64).max(10_000_000)
    } else {
        params.max_iterations
    };
    let mut iterations = 0;
    loop {
        match s.select(params.tolerance) {
            Err(_) => break,
            Ok((i, j)) => {
                if iterations >= max_iter {
                    let residual = match s.select(0.0) {
                        Err(g) => g,
                        Ok((i, j)) => -s.y[i] * s.grad[i] + s.y[j] * s.grad[j],
                    };
                    return Err(ClassifierError::SvmNotConverged { residual });
                }
                s.update(i, j);
                iterations += 1;
            }
        }
    }
    let rho = s.rho();
    let support_vectors = (0..n)
        .filter(|&t| s.alpha[t] > 0.0)
        .map(|t| SupportVector {
            index: t,
            x: xs[t].clone(),
            alpha: s.alpha[t],
            y: s.y[t],
        })
        .collect();
    Ok(SvmModel {
        params,
        feature_subset: features,
        standardizer,
        support_vectors,
        rho,
        iterations,
    })
}
