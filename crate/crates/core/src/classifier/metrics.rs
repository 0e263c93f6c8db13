use std::fmt;

use serde::{Deserialize, Serialize};

use crate::features::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn from_pairs(pairs: &[(Label, Label)]) -> Self {
        let mut c = Confusion::default();
        for &(pred, truth) in pairs {
            match (pred, truth) {
                (Label::Yes, Label::Yes) => c.tp += 1,
                (Label::Yes, Label::No) => c.fp += 1,
                (Label::No, Label::Yes) => c.fn_ += 1,
                (Label::No, Label::No) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Metrics with YES as the positive class. A ratio with a zero denominator is
/// `None` ("undefined") rather than a conventional zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    pub balanced_accuracy: Option<f64>,
    pub kappa: Option<f64>,
    pub f1: Option<f64>,
    pub confusion: Confusion,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl EvalMetrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let n = c.total();
        let recall = ratio(c.tp, c.tp + c.fn_);
        let precision = ratio(c.tp, c.tp + c.fp);
        let specificity = ratio(c.tn, c.tn + c.fp);
        let accuracy = ratio(c.tp + c.tn, n);
        let balanced_accuracy = match (recall, specificity) {
            (Some(r), Some(s)) => Some((r + s) / 2.0),
            _ => None,
        };
        // f1 = 2tp / (2tp + fp + fn), equal to the harmonic mean when defined
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p + r > 0.0 => ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
            _ => None,
        };
        // kappa = (po - pe) / (1 - pe) with integer numerators over n²
        let kappa = if n == 0 {
            None
        } else {
            let n2 = (n as u128) * (n as u128);
            let agree = (c.tp + c.tn) as u128 * n as u128;
            let chance = (c.tp + c.fp) as u128 * (c.tp + c.fn_) as u128
                + (c.fn_ + c.tn) as u128 * (c.fp + c.tn) as u128;
            if chance == n2 {
                None
            } else {
                Some((agree as f64 - chance as f64) / (n2 as f64 - chance as f64))
            }
        };
        EvalMetrics {
            recall,
            precision,
            specificity,
            accuracy,
            balanced_accuracy,
            kappa,
            f1,
            confusion: c,
        }
    }
}

/// Confusion-matrix metrics over `(predicted, truth)` pairs.
pub fn evaluate(pairs: &[(Label, Label)]) -> EvalMetrics {
    EvalMetrics::from_confusion(Confusion::from_pairs(pairs))
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.1}%", 100.0 * x))
        .unwrap_or_else(|| "undefined".into())
}

impl fmt::Display for EvalMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.confusion;
        writeln!(f, "recall     {}", pct(self.recall))?;
        writeln!(f, "precision  {}", pct(self.precision))?;
        writeln!(f, "balanced   {}", pct(self.balanced_accuracy))?;
        writeln!(f, "kappa      {}", pct(self.kappa))?;
        writeln!(f, "f1         {}", pct(self.f1))?;
        write!(f, "confusion  tp={} fp={} fn={} tn={}", c.tp, c.fp, c.fn_, c.tn)
    }
}
