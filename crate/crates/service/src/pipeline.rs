//! One suggestion round: stored posts are narrowed stage by stage and the
//! survivors go to the sequential-trial assignment.
//!
//! stored -> stale (90 days) -> related (similarity >= floor) -> expertise
//! -> predicted deficient -> assign

use std::time::Duration;

use chrono::{DateTime, Utc};
use postforge_core::classifier::Model;
use postforge_core::features::{extract_features, Label};
use postforge_core::ingest::QuestionRecord;
use postforge_core::matcher::{
    assign, expertise_filter, question_context, rate_limit_check, similarity_of, sort_candidates,
    staleness_filter, Assignment, CodingContext, ExpertiseProfile, ScoredCandidate, TermPool, Weights,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineSettings {
    pub weights: Weights,
    pub similarity_floor: f64,
    pub max_suggestions_per_day: u32,
    pub retry_period: Duration,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub stored: usize,
    pub stale: usize,
    pub related: usize,
    pub expert: usize,
    pub deficient: usize,
}

impl StageCounts {
    pub fn as_array(&self) -> [usize; 5] {
        [self.stored, self.stale, self.related, self.expert, self.deficient]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoCandidateReason {
    RateLimited,
    EmptyStore,
    Staleness,
    Similarity,
    Expertise,
    Prediction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PipelineOutcome {
    Assigned {
        candidate: ScoredCandidate,
        assignment: Assignment,
        counts: StageCounts,
    },
    NoCandidate {
        reason: NoCandidateReason,
        retry_at: DateTime<Utc>,
        counts: StageCounts,
    },
}

pub struct PipelineInputs<'a> {
    pub questions: &'a [QuestionRecord],
    pub model: &'a Model,
    pub profile: &'a ExpertiseProfile,
    pub context: &'a CodingContext,
}

/// Scored and filtered candidates before assignment, most similar first.
pub fn rank_candidates(
    inputs: &PipelineInputs<'_>,
    settings: &PipelineSettings,
    now: DateTime<Utc>,
) -> Result<(Vec<ScoredCandidate>, StageCounts), ServiceError> {
    settings.weights.validate()?;
    let mut counts = StageCounts {
        stored: inputs.questions.len(),
        ..Default::default()
    };
    let stale: Vec<&QuestionRecord> = inputs.questions.iter().filter(|q| staleness_filter(q, now)).collect();
    counts.stale = stale.len();

    let contexts: Vec<CodingContext> = stale.iter().map(|q| question_context(q)).collect();
    let pool = TermPool::from_contexts(&contexts);
    let mut related = Vec::new();
    for (q, qc) in stale.iter().zip(&contexts) {
        let s = similarity_of(inputs.context, q.question_id, qc, settings.weights, &pool)?;
        if s.similarity >= settings.similarity_floor && s.similarity > 0.0 {
            related.push((*q, s));
        }
    }
    counts.related = related.len();

    related.retain(|(q, _)| expertise_filter(q, inputs.profile));
    counts.expert = related.len();

    let mut deficient = Vec::new();
    for (q, s) in related {
        if inputs.model.predict(&extract_features(q))?.label == Label::Yes {
            deficient.push(s);
        }
    }
    counts.deficient = deficient.len();
    sort_candidates(&mut deficient);
    Ok((deficient, counts))
}

pub fn run_pipeline<R: Rng + ?Sized>(
    inputs: &PipelineInputs<'_>,
    settings: &PipelineSettings,
    now: DateTime<Utc>,
    rng: &mut R,
) -> Result<PipelineOutcome, ServiceError> {
    let retry_at = now + chrono::Duration::from_std(settings.retry_period).unwrap_or(chrono::Duration::hours(6));
    let mut profile = inputs.profile.clone();
    profile.max_suggestions_per_day = settings.max_suggestions_per_day;
    if !rate_limit_check(&profile, now) {
        tracing::info!("pipeline: rate limited");
        return Ok(PipelineOutcome::NoCandidate {
            reason: NoCandidateReason::RateLimited,
            retry_at,
            counts: StageCounts::default(),
        });
    }
    let (candidates, counts) = rank_candidates(inputs, settings, now)?;
    tracing::info!(
        stored = counts.stored,
        stale = counts.stale,
        related = counts.related,
        expert = counts.expert,
        deficient = counts.deficient,
        "pipeline stage counts"
    );
    let reason = [
        (counts.stored, NoCandidateReason::EmptyStore),
        (counts.stale, NoCandidateReason::Staleness),
        (counts.related, NoCandidateReason::Similarity),
        (counts.expert, NoCandidateReason::Expertise),
        (counts.deficient, NoCandidateReason::Prediction),
    ]
    .into_iter()
    .find(|(n, _)| *n == 0)
    .map(|(_, r)| r);
    if let Some(reason) = reason {
        return Ok(PipelineOutcome::NoCandidate {
            reason,
            retry_at,
            counts,
        });
    }
    let assignment = assign(&candidates, rng)?;
    let candidate = candidates
        .into_iter()
        .find(|c| c.question_id == assignment.question_id)
        .expect("assigned id is a candidate");
    Ok(PipelineOutcome::Assigned {
        candidate,
        assignment,
        counts,
    })
}
