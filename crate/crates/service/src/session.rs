//! Review session state machine.
//!
//! ```text
//! suggested -> drafted -> approved -> submitted
//!     \           \          \
//!      +-----------+----------+--> declined
//! ```
//!
//! A suggested session may also be approved directly once an answer body
//! has been written.

use chrono::{DateTime, Utc};
use postforge_core::matcher::{ComponentScores, Weights};
use postforge_core::snippets::DraftAnswer;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Suggested,
    Drafted,
    Approved,
    Submitted,
    Declined,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionState::Submitted | SessionState::Declined)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Suggested => "suggested",
            SessionState::Drafted => "drafted",
            SessionState::Approved => "approved",
            SessionState::Submitted => "submitted",
            SessionState::Declined => "declined",
        }
    }

    /// The declared transition graph.
    pub fn allows(self, to: SessionState) -> bool {
        use SessionState::*;
        matches!(
            (self, to),
            (Suggested, Drafted)
                | (Drafted, Drafted)
                | (Suggested, Approved)
                | (Drafted, Approved)
                | (Approved, Submitted)
                | (Suggested | Drafted | Approved, Declined)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("session {session_id}: cannot go from {from:?} to {to:?}")]
pub struct TransitionError {
    pub session_id: String,
    pub from: SessionState,
    pub to: SessionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: SessionState,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSession {
    pub session_id: String,
    pub question_id: u64,
    pub similarity: f64,
    pub components: ComponentScores,
    pub weights: Weights,
    pub draft: Option<DraftAnswer>,
    /// Answer text as edited by the developer.
    pub answer_body: Option<String>,
    pub state: SessionState,
    pub transitions: Vec<Transition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub submission_error: Option<String>,
}

impl AssignmentSession {
    pub fn new(
        session_id: String,
        question_id: u64,
        similarity: f64,
        components: ComponentScores,
        weights: Weights,
        now: DateTime<Utc>,
    ) -> Self {
        Self {
            session_id,
            question_id,
            similarity,
            components,
            weights,
            draft: None,
            answer_body: None,
            state: SessionState::Suggested,
            transitions: vec![Transition {
                state: SessionState::Suggested,
                at: now,
            }],
            submission_error: None,
        }
    }

    fn check(&self, to: SessionState) -> Result<(), TransitionError> {
        if self.state.allows(to) {
            Ok(())
        } else {
            Err(TransitionError {
                session_id: self.session_id.clone(),
                from: self.state,
                to,
            })
        }
    }

    fn go(&mut self, to: SessionState, now: DateTime<Utc>) -> Result<(), TransitionError> {
        self.check(to)?;
        self.state = to;
        self.transitions.push(Transition { state: to, at: now });
        Ok(())
    }

    pub fn attach_draft(&mut self, draft: DraftAnswer, now: DateTime<Utc>) -> Result<(), TransitionError> {
        self.go(SessionState::Drafted, now)?;
        self.draft = Some(draft);
        Ok(())
    }

    /// Stores an edited answer; only before approval.
    pub fn set_answer(&mut self, body: String) -> Result<(), TransitionError> {
        if !matches!(self.state, SessionState::Suggested | SessionState::Drafted) {
            return Err(TransitionError {
                session_id: self.session_id.clone(),
                from: self.state,
                to: self.state,
            });
        }
        self.answer_body = Some(body);
        Ok(())
    }

    /// The text that approval would submit: the edited body, else the draft
    /// snippet as a code block.
    pub fn submission_body(&self) -> Option<String> {
        if let Some(b) = &self.answer_body {
            return Some(b.clone());
        }
        self.draft.as_ref().map(|d| render_code_block(&d.snippet))
    }

    pub fn approve(&mut self, now: DateTime<Utc>) -> Result<(), TransitionError> {
        self.go(SessionState::Approved, now)
    }

    pub fn can_approve(&self) -> Result<(), TransitionError> {
        self.check(SessionState::Approved)
    }

    pub fn mark_submitted(&mut self, now: DateTime<Utc>) -> Result<(), TransitionError> {
        self.go(SessionState::Submitted, now)?;
        self.submission_error = None;
        Ok(())
    }

    pub fn decline(&mut self, now: DateTime<Utc>) -> Result<(), TransitionError> {
        self.go(SessionState::Declined, now)
    }
}

/// Markdown code block, indented by four spaces.
pub fn render_code_block(snippet: &str) -> String {
    snippet
        .lines()
        .map(|l| if l.is_empty() { String::new() } else { format!("    {l}") })
        .collect::<Vec<_>>()
        .join("\n")
}
