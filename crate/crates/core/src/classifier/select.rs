//! Wrapper feature selection. Every candidate subset is scored by the
//! cross-validated F1 of a tree trained on just those columns, using one
//! fixed fold assignment so scores are comparable across subsets.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{stratified_folds, Sample};
use super::metrics::evaluate;
use super::tree::{train_tree, TreeParams};
use super::tuning::PAPER_CP;
use super::ClassifierError;
use crate::features::{FeatureName, Label, FEATURE_COUNT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Rfe,
    Ga,
    Sa,
}

impl FromStr for SelectionMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rfe" => Ok(Self::Rfe),
            "ga" => Ok(Self::Ga),
            "sa" => Ok(Self::Sa),
            _ => Err(format!("unknown selection method {s:?} (rfe, ga, sa)")),
        }
    }
}

impl fmt::Display for SelectionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Rfe => "rfe",
            Self::Ga => "ga",
            Self::Sa => "sa",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSubset {
    pub selected: Vec<FeatureName>,
    pub method: SelectionMethod,
    pub cv_score: f64,
    /// Distinct subsets scored during the search.
    pub evaluated: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionParams {
    pub folds: usize,
    pub seed: u64,
    pub tree: TreeParams,
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub elites: usize,
    pub sa_steps: usize,
    pub sa_start_temperature: f64,
    pub sa_cooling: f64,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            folds: 10,
            seed: 1,
            tree: TreeParams::with_cp(PAPER_CP),
            population: 20,
            generations: 15,
            tournament: 3,
            elites: 2,
            sa_steps: 150,
            sa_start_temperature: 0.05,
            sa_cooling: 0.97,
        }
    }
}

type Mask = u16;

struct Scorer<'a> {
    samples: &'a [Sample],
    available: &'a [FeatureName],
    folds: Vec<usize>,
    k: usize,
    tree: TreeParams,
    cache: BTreeMap<Mask, f64>,
}

impl<'a> Scorer<'a> {
    fn new(samples: &'a [Sample], available: &'a [FeatureName], p: &SelectionParams) -> Self {
        let labels: Vec<Label> = samples.iter().map(|s| s.y).collect();
        let k = p.folds.clamp(2, samples.len().max(2));
        Scorer {
            samples,
            available,
            folds: stratified_folds(&labels, k, p.seed),
            k,
            tree: p.tree,
            cache: BTreeMap::new(),
        }
    }

    fn features(&self, mask: Mask) -> Vec<FeatureName> {
        (0..self.available.len())
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| self.available[b])
            .collect()
    }

    /// CV F1 (undefined counts as 0) and per-feature importance summed over
    /// the fold trees.
    fn run(&mut self, mask: Mask) -> Result<(f64, [f64; FEATURE_COUNT]), ClassifierError> {
        let feats = self.features(mask);
        let (samples, folds, tree) = (self.samples, &self.folds, self.tree);
        let per_fold: Vec<(Vec<(Label, Label)>, [f64; FEATURE_COUNT])> = (0..self.k)
            .into_par_iter()
            .map(|f| {
                let train: Vec<Sample> = samples
                    .iter()
                    .zip(folds)
                    .filter(|(_, &g)| g != f)
                    .map(|(s, _)| *s)
                    .collect();
                let mut imp = [0.0; FEATURE_COUNT];
                if train.is_empty() {
                    return Ok((Vec::new(), imp));
                }
                let model = train_tree(&train, &feats, tree)?;
                for &(name, v) in &model.importance {
                    imp[name.index()] += v;
                }
                let pairs = samples
                    .iter()
                    .zip(folds)
                    .filter(|(_, &g)| g == f)
                    .map(|(s, _)| Ok((model.predict_row(&s.x)?.label, s.y)))
                    .collect::<Result<Vec<_>, ClassifierError>>()?;
                Ok((pairs, imp))
            })
            .collect::<Result<_, ClassifierError>>()?;
        let mut pairs = Vec::with_capacity(samples.len());
        let mut importance = [0.0; FEATURE_COUNT];
        for (p, imp) in per_fold {
            pairs.extend(p);
            for (a, b) in importance.iter_mut().zip(imp) {
                *a += b;
            }
        }
        let score = evaluate(&pairs).f1.unwrap_or(0.0);
        self.cache.insert(mask, score);
        Ok((score, importance))
    }

    fn score(&mut self, mask: Mask) -> Result<f64, ClassifierError> {
        match self.cache.get(&mask) {
            Some(&s) => Ok(s),
            None => Ok(self.run(mask)?.0),
        }
    }

    /// Best cached subset: highest score, then fewest features, then lowest
    /// mask.
    fn best(&self) -> (Mask, f64) {
        let mut it = self.cache.iter();
        let (&m0, &s0) = it.next().expect("at least one subset scored");
        it.fold((m0, s0), |(bm, bs), (&m, &s)| {
            if better(m, s, bm, bs) {
                (m, s)
            } else {
                (bm, bs)
            }
        })
    }
}

fn better(m: Mask, s: f64, bm: Mask, bs: f64) -> bool {
    if s != bs {
        return s > bs;
    }
    (m.count_ones(), m) < (bm.count_ones(), bm)
}

pub fn select_features(
    samples: &[Sample],
    available: &[FeatureName],
    method: SelectionMethod,
    params: &SelectionParams,
) -> Result<FeatureSubset, ClassifierError> {
    let mut available = available.to_vec();
    available.sort();
    available.dedup();
    if available.len() < 2 {
        return Err(ClassifierError::InvalidConfig(
            "feature selection needs at least two features".into(),
        ));
    }
    if samples.is_empty() {
        return Err(ClassifierError::EmptyTraining);
    }
    let mut scorer = Scorer::new(samples, &available, params);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    match method {
        SelectionMethod::Rfe => rfe(&mut scorer)?,
        SelectionMethod::Ga => ga(&mut scorer, params, &mut rng)?,
        SelectionMethod::Sa => sa(&mut scorer, params, &mut rng)?,
    }
    let (mask, cv_score) = scorer.best();
    Ok(FeatureSubset {
        selected: scorer.features(mask),
        method,
        cv_score,
        evaluated: scorer.cache.len(),
    })
}

/// Drops the least important remaining feature each round; ties drop the
/// later feature.
fn rfe(scorer: &mut Scorer) -> Result<(), ClassifierError> {
    let n = scorer.available.len();
    let mut mask: Mask = (1 << n) - 1;
    while mask.count_ones() > 1 {
        let (_, importance) = scorer.run(mask)?;
        let drop = (0..n)
            .filter(|b| mask & (1 << b) != 0)
            .min_by(|&a, &b| {
                let ia = importance[scorer.available[a].index()];
                let ib = importance[scorer.available[b].index()];
                ia.total_cmp(&ib).then(b.cmp(&a))
            })
            .expect("mask is non-empty");
        mask &= !(1 << drop);
    }
    scorer.score(mask)?;
    Ok(())
}

fn ga(scorer: &mut Scorer, p: &SelectionParams, rng: &mut ChaCha8Rng) -> Result<(), ClassifierError> {
    let n = scorer.available.len();
    let full: Mask = (1 << n) - 1;
    let size = p.population.max(2);
    let mut pop: Vec<Mask> = std::iter::once(full)
        .chain((1..size).map(|_| rng.gen_range(1..=full)))
        .collect();
    let mutation = 1.0 / n as f64;
    for _ in 0..p.generations {
        let mut scored: Vec<(Mask, f64)> = pop
            .iter()
            .map(|&m| Ok((m, scorer.score(m)?)))
            .collect::<Result<_, ClassifierError>>()?;
        scored.sort_by(|a, b| {
            if better(a.0, a.1, b.0, b.1) {
                std::cmp::Ordering::Less
            } else if better(b.0, b.1, a.0, a.1) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        let mut next: Vec<Mask> = scored.iter().take(p.elites.min(size)).map(|x| x.0).collect();
        let pick = |rng: &mut ChaCha8Rng| {
            (0..p.tournament.max(1))
                .map(|_| scored[rng.gen_range(0..scored.len())])
                .reduce(|a, b| if better(b.0, b.1, a.0, a.1) { b } else { a })
                .expect("tournament is non-empty")
                .0
        };
        while next.len() < size {
            let (a, b) = (pick(rng), pick(rng));
            let mut child = 0;
            for bit in 0..n {
                let from = if rng.gen_bool(0.5) { a } else { b };
                let mut on = from & (1 << bit) != 0;
                if rng.gen_bool(mutation) {
                    on = !on;
                }
                if on {
                    child |= 1 << bit;
                }
            }
            if child == 0 {
                child = 1 << rng.gen_range(0..n);
            }
            next.push(child);
        }
        pop = next;
    }
    for m in pop {
        scorer.score(m)?;
    }
    Ok(())
}

fn sa(scorer: &mut Scorer, p: &SelectionParams, rng: &mut ChaCha8Rng) -> Result<(), ClassifierError> {
    let n = scorer.available.len();
    let mut cur: Mask = (1 << n) - 1;
    let mut cur_score = scorer.score(cur)?;
    let mut t = p.sa_start_temperature;
    for _ in 0..p.sa_steps {
        let cand = cur ^ (1 << rng.gen_range(0..n));
        if cand != 0 {
            let s = scorer.score(cand)?;
            let accept = s >= cur_score || (t > 0.0 && rng.gen::<f64>() < ((s - cur_score) / t).exp());
            if accept {
                cur = cand;
                cur_score = s;
            }
        }
        t *= p.sa_cooling;
    }
    Ok(())
}
