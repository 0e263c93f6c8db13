//! Ranking deficient posts against a developer's coding context and
//! expertise, plus the staleness, rate-limit and assignment policies.

pub mod context;
pub mod policy;
pub mod score;

pub use context::{extract_context, question_context, split_identifier, CodingContext, Shingles, SourceFile, SHINGLE_SIZE};
pub use policy::{
    assign, expertise_filter, rate_limit_check, record_assignment, staleness_filter, Assignment, ExpertiseProfile,
    MAX_ASSIGN_TRIALS, STALENESS_DAYS,
};
pub use score::{
    score_candidates, set_jaccard, shingle_jaccard, similarity, similarity_of, sort_candidates, ComponentScores,
    ScoredCandidate, TermPool, Weights,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatchError {
    #[error("no source file could be used as coding context")]
    EmptyContext,
    #[error("no assignable candidate")]
    NoAssignableCandidate,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
}
