//! Similarity between a coding context and candidate questions.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::context::{question_context, CodingContext, Shingles};
use super::MatchError;
use crate::ingest::QuestionRecord;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub code: f64,
    pub api: f64,
    pub text: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            code: 0.5,
            api: 0.3,
            text: 0.2,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<(), MatchError> {
        let parts = [self.code, self.api, self.text];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MatchError::InvalidWeights("weights must be non-negative".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(MatchError::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentScores {
    pub code: f64,
    pub api: f64,
    pub text: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub question_id: u64,
    pub similarity: f64,
    pub components: ComponentScores,
}

/// Multiset Jaccard: `Σ min / Σ max` over shingle counts; 0 when both are
/// empty.
pub fn shingle_jaccard(a: &Shingles, b: &Shingles) -> f64 {
    let mut min = 0u64;
    let mut max = 0u64;
    for (k, &x) in a {
        let y = b.get(k).copied().unwrap_or(0);
        min += u64::from(x.min(y));
        max += u64::from(x.max(y));
    }
    for (k, &y) in b {
        if !a.contains_key(k) {
            max += u64::from(y);
        }
    }
    if max == 0 {
        0.0
    } else {
        min as f64 / max as f64
    }
}

pub fn set_jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        0.0
    } else {
        a.intersection(b).count() as f64 / union as f64
    }
}

/// Document frequencies over a candidate pool; IDF is
/// `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermPool {
    pub documents: usize,
    pub df: BTreeMap<String, usize>,
}

impl TermPool {
    pub fn from_contexts<'a>(docs: impl IntoIterator<Item = &'a CodingContext>) -> Self {
        let mut pool = TermPool::default();
        for d in docs {
            pool.documents += 1;
            for t in d.terms.keys() {
                *pool.df.entry(t.clone()).or_insert(0) += 1;
            }
        }
        pool
    }

    pub fn idf(&self, term: &str) -> f64 {
        let df = self.df.get(term).copied().unwrap_or(0);
        ((1.0 + self.documents as f64) / (1.0 + df as f64)).ln() + 1.0
    }

    fn vector<'a>(&self, terms: &'a BTreeMap<String, u32>) -> BTreeMap<&'a str, f64> {
        terms
            .iter()
            .map(|(t, &c)| (t.as_str(), f64::from(c) * self.idf(t)))
            .collect()
    }

    /// Cosine of the TF-IDF vectors; 0 if either is empty.
    pub fn cosine(&self, a: &BTreeMap<String, u32>, b: &BTreeMap<String, u32>) -> f64 {
        let va = self.vector(a);
        let vb = self.vector(b);
        let dot: f64 = va.iter().filter_map(|(t, x)| vb.get(t).map(|y| x * y)).sum();
        let na = va.values().map(|x| x * x).sum::<f64>().sqrt();
        let nb = vb.values().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            (dot / (na * nb)).clamp(0.0, 1.0)
        }
    }
}

/// Scores one question context against the developer context.
pub fn similarity_of(
    ctx: &CodingContext,
    question_id: u64,
    qctx: &CodingContext,
    weights: Weights,
    pool: &TermPool,
) -> Result<ScoredCandidate, MatchError> {
    weights.validate()?;
    let components = ComponentScores {
        code: shingle_jaccard(&ctx.token_shingles, &qctx.token_shingles),
        api: set_jaccard(&ctx.api_types, &qctx.api_types),
        text: pool.cosine(&ctx.terms, &qctx.terms),
    };
    let s = weights.code * components.code + weights.api * components.api + weights.text * components.text;
    Ok(ScoredCandidate {
        question_id,
        similarity: s.clamp(0.0, 1.0),
        components,
    })
}

pub fn similarity(
    ctx: &CodingContext,
    q: &QuestionRecord,
    weights: Weights,
    pool: &TermPool,
) -> Result<ScoredCandidate, MatchError> {
    similarity_of(ctx, q.question_id, &question_context(q), weights, pool)
}

/// Descending similarity, ties by lower question id.
pub fn sort_candidates(c: &mut [ScoredCandidate]) {
    c.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then(a.question_id.cmp(&b.question_id))
    });
}

/// Scores every question, with IDF taken from this pool of questions.
pub fn score_candidates(
    ctx: &CodingContext,
    questions: &[QuestionRecord],
    weights: Weights,
) -> Result<Vec<ScoredCandidate>, MatchError> {
    weights.validate()?;
    let qctx: Vec<CodingContext> = questions.iter().map(question_context).collect();
    let pool = TermPool::from_contexts(&qctx);
    let mut out = questions
        .iter()
        .zip(&qctx)
        .map(|(q, c)| similarity_of(ctx, q.question_id, c, weights, &pool))
        .collect::<Result<Vec<_>, _>>()?;
    sort_candidates(&mut out);
    Ok(out)
}
