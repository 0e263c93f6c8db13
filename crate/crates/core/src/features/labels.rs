use std::fmt;

use serde::{Deserialize, Serialize};

/// Binary deficiency label; `Yes` (deficient) is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "YES", alias = "yes")]
    Yes,
    #[serde(rename = "NO", alias = "no")]
    No,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Yes
    }

    pub fn index(self) -> usize {
        match self {
            Label::No => 0,
            Label::Yes => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 1 {
            Label::Yes
        } else {
            Label::No
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Yes => "YES",
            Label::No => "NO",
        })
    }
}

/// Reviewer annotations on the four answer-quality criteria. Recorded only;
/// they never drive a label.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Criteria {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completeness: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conciseness: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correctness: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comprehensibility: Option<bool>,
}

/// One reviewer vote: either a bare `"YES"`/`"NO"` or an object carrying
/// criteria annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Vote {
    Bare(Label),
    Annotated {
        label: Label,
        #[serde(default)]
        criteria: Criteria,
    },
}

impl Vote {
    pub fn label(&self) -> Label {
        match *self {
            Vote::Bare(l) | Vote::Annotated { label: l, .. } => l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteSheet {
    pub question_id: u64,
    pub votes: Vec<Vote>,
    /// Outcome of the group discussion for a mixed sheet.
    #[serde(default, rename = "override", skip_serializing_if = "Option::is_none")]
    pub manual_override: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Resolution {
    Yes,
    No,
    NeedsReview,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LabelError {
    #[error("unresolvable sheet for question {question_id}: {votes} vote(s), need at least 3")]
    Unresolvable { question_id: u64, votes: usize },
}

/// Unanimity rule over at least three votes: all YES gives YES, all NO gives
/// NO, anything mixed needs a review.
pub fn aggregate_labels(sheet: &VoteSheet) -> Result<Resolution, LabelError> {
    if sheet.votes.len() < 3 {
        return Err(LabelError::Unresolvable {
            question_id: sheet.question_id,
            votes: sheet.votes.len(),
        });
    }
    let yes = sheet.votes.iter().filter(|v| v.label() == Label::Yes).count();
    let no = sheet.votes.len() - yes;
    Ok(match (yes, no) {
        (_, 0) => Resolution::Yes,
        (0, _) => Resolution::No,
        _ => Resolution::NeedsReview,
    })
}

/// Final label for a sheet: the unanimous outcome, or the manual override
/// for a mixed sheet. `Ok(None)` means still awaiting review.
pub fn resolve_label(sheet: &VoteSheet) -> Result<Option<Label>, LabelError> {
    Ok(match aggregate_labels(sheet)? {
        Resolution::Yes => Some(Label::Yes),
        Resolution::No => Some(Label::No),
        Resolution::NeedsReview => sheet.manual_override,
    })
}
