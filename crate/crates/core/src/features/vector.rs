use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize, Serializer};

use crate::ingest::QuestionRecord;

/// The eleven post properties, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureName {
    Haa,
    Ac,
    S,
    Sas,
    Vc,
    Ssvc,
    Cc,
    Fc,
    Acc,
    Aar,
    Ar,
}

pub const FEATURE_COUNT: usize = 11;

impl FeatureName {
    pub const ALL: [FeatureName; FEATURE_COUNT] = [
        FeatureName::Haa,
        FeatureName::Ac,
        FeatureName::S,
        FeatureName::Sas,
        FeatureName::Vc,
        FeatureName::Ssvc,
        FeatureName::Cc,
        FeatureName::Fc,
        FeatureName::Acc,
        FeatureName::Aar,
        FeatureName::Ar,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureName::Haa => "haa",
            FeatureName::Ac => "ac",
            FeatureName::S => "s",
            FeatureName::Sas => "sas",
            FeatureName::Vc => "vc",
            FeatureName::Ssvc => "ssvc",
            FeatureName::Cc => "cc",
            FeatureName::Fc => "fc",
            FeatureName::Acc => "acc",
            FeatureName::Aar => "aar",
            FeatureName::Ar => "ar",
        }
    }

    pub fn is_boolean(self) -> bool {
        self == FeatureName::Haa
    }
}

impl fmt::Display for FeatureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown feature name {0:?}")]
pub struct UnknownFeature(pub String);

impl FromStr for FeatureName {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|f| f.as_str() == lower)
            .ok_or_else(|| UnknownFeature(s.to_string()))
    }
}

/// Parses a comma separated feature list such as `"sas,vc,haa"`.
pub fn parse_feature_list(s: &str) -> Result<Vec<FeatureName>, UnknownFeature> {
    let mut out: Vec<FeatureName> = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

/// Post-level properties of one question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub haa: bool,
    pub ac: u64,
    pub s: i64,
    pub sas: i64,
    pub vc: u64,
    #[serde(serialize_with = "twelve_significant")]
    pub ssvc: f64,
    pub cc: u64,
    pub fc: u64,
    pub acc: f64,
    pub aar: f64,
    pub ar: u64,
}

fn twelve_significant<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_significant(*v, 12))
}

pub fn round_significant(v: f64, digits: usize) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.*e}", digits - 1, v).parse().unwrap_or(v)
}

/// Conditions under which a field fell back to a convention instead of a
/// measured value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degeneracy {
    /// No answers: acc and aar are 0 by convention.
    pub no_answers: bool,
    /// Zero views: ssvc is 0 by convention.
    pub zero_views: bool,
}

impl Degeneracy {
    pub fn any(self) -> bool {
        self.no_answers || self.zero_views
    }
}

impl FeatureVector {
    pub fn get(&self, f: FeatureName) -> f64 {
        match f {
            FeatureName::Haa => f64::from(u8::from(self.haa)),
            FeatureName::Ac => self.ac as f64,
            FeatureName::S => self.s as f64,
            FeatureName::Sas => self.sas as f64,
            FeatureName::Vc => self.vc as f64,
            FeatureName::Ssvc => self.ssvc,
            FeatureName::Cc => self.cc as f64,
            FeatureName::Fc => self.fc as f64,
            FeatureName::Acc => self.acc,
            FeatureName::Aar => self.aar,
            FeatureName::Ar => self.ar as f64,
        }
    }

    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        FeatureName::ALL.map(|f| self.get(f))
    }

    /// Inverse of [`FeatureVector::to_array`]; integer columns are rounded
    /// and clamped into range.
    pub fn from_array(a: &[f64; FEATURE_COUNT]) -> Self {
        let uint = |v: f64| if v.is_finite() && v > 0.0 { v.round() as u64 } else { 0 };
        let int = |v: f64| if v.is_finite() { v.round() as i64 } else { 0 };
        FeatureVector {
            haa: a[0] >= 0.5,
            ac: uint(a[1]),
            s: int(a[2]),
            sas: int(a[3]),
            vc: uint(a[4]),
            ssvc: a[5],
            cc: uint(a[6]),
            fc: uint(a[7]),
            acc: a[8].max(0.0),
            aar: a[9].max(0.0),
            ar: uint(a[10]),
        }
    }
}

/// Computes the feature vector of a question.
pub fn extract_features(q: &QuestionRecord) -> FeatureVector {
    extract_with_flags(q).0
}

pub fn extract_with_flags(q: &QuestionRecord) -> (FeatureVector, Degeneracy) {
    let ac = q.answers.len() as u64;
    let sas: i64 = q.answers.iter().map(|a| a.score).sum();
    let comment_total: u64 = q.answers.iter().map(|a| a.comment_count).sum();
    let reputation_total: u64 = q.answers.iter().map(|a| a.answerer_reputation).sum();
    let (acc, aar) = if ac == 0 {
        (0.0, 0.0)
    } else {
        (comment_total as f64 / ac as f64, reputation_total as f64 / ac as f64)
    };
    let ssvc = if q.view_count == 0 {
        0.0
    } else {
        sas as f64 / q.view_count as f64
    };
    let fv = FeatureVector {
        // the API exposes acceptance through the field alone
        haa: ac > 0 && q.accepted_answer_id.is_some(),
        ac,
        s: q.score,
        sas,
        vc: q.view_count,
        ssvc,
        cc: q.comment_count,
        fc: q.favorite_count,
        acc,
        aar,
        ar: q.asker_reputation,
    };
    let flags = Degeneracy {
        no_answers: ac == 0,
        zero_views: q.view_count == 0,
    };
    (fv, flags)
}
