//! Outlier bounds and per-class feature histograms.

use std::fmt::Write as _;

use serde::Serialize;

use super::dataset::LabeledExample;
use super::labels::Label;
use super::vector::FeatureName;
use super::FeatureError;

pub const DEFAULT_IQR_FACTOR: f64 = 1.5;
pub const DEFAULT_BINS: usize = 10;

/// Quantile by linear interpolation between order statistics of sorted
/// data (`h = (n - 1) p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(Q1 - factor * IQR, Q3 + factor * IQR)`.
pub fn iqr_bounds(values: &[f64], factor: f64) -> Result<(f64, f64), FeatureError> {
    if values.len() < 4 {
        return Err(FeatureError::TooFewValues(values.len()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(FeatureError::NotANumber);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    Ok((q1 - factor * iqr, q3 + factor * iqr))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges; the last bin is closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn build(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        if values.is_empty() {
            return Histogram {
                edges: vec![],
                counts: vec![],
            };
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min == max {
            return Histogram {
                edges: vec![min, max],
                counts: vec![values.len()],
            };
        }
        let width = (max - min) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|i| if i == bins { max } else { min + width * i as f64 })
            .collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let mut b = ((v - min) / width).floor() as usize;
            if b >= bins {
                b = bins - 1;
            }
            // float rounding near an edge
            while b > 0 && v < edges[b] {
                b -= 1;
            }
            while b + 1 < bins && v >= edges[b + 1] {
                b += 1;
            }
            counts[b] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureClassSummary {
    pub feature: FeatureName,
    pub label: Label,
    pub total: usize,
    pub retained: usize,
    pub removed: usize,
    /// `None` when the class had too few values to filter.
    pub bounds: Option<(f64, f64)>,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionReport {
    pub entries: Vec<FeatureClassSummary>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
pub struct SummaryOptions {
    pub factor: f64,
    pub bins: usize,
}

impl Default for SummaryOptions {
    fn default() -> Self {
        Self {
            factor: DEFAULT_IQR_FACTOR,
            bins: DEFAULT_BINS,
        }
    }
}

/// Per feature and class: drop IQR outliers, then histogram what remains.
pub fn summarize(
    dataset: &[LabeledExample],
    opts: SummaryOptions,
) -> Result<DistributionReport, FeatureError> {
    if dataset.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let mut warnings = Vec::new();
    for label in [Label::Yes, Label::No] {
        if !dataset.iter().any(|e| e.label == label) {
            warnings.push(format!("class {label} has no examples"));
        }
    }
    let mut entries = Vec::new();
    for feature in FeatureName::ALL {
        for label in [Label::Yes, Label::No] {
            let values: Vec<f64> = dataset
                .iter()
                .filter(|e| e.label == label)
                .map(|e| e.features.get(feature))
                .collect();
            if values.is_empty() {
                continue;
            }
            let bounds = match iqr_bounds(&values, opts.factor) {
                Ok(b) => Some(b),
                Err(FeatureError::TooFewValues(n)) => {
                    warnings.push(format!(
                        "{feature}/{label}: {n} value(s), outlier filtering skipped"
                    ));
                    None
                }
                Err(e) => return Err(e),
            };
            let kept: Vec<f64> = match bounds {
                Some((lo, hi)) => values.iter().copied().filter(|v| *v >= lo && *v <= hi).collect(),
                None => values.clone(),
            };
            let bins = if feature.is_boolean() { 2 } else { opts.bins };
            entries.push(FeatureClassSummary {
                feature,
                label,
                total: values.len(),
                retained: kept.len(),
                removed: values.len() - kept.len(),
                bounds,
                histogram: Histogram::build(&kept, bins),
            });
        }
    }
    Ok(DistributionReport { entries, warnings })
}

impl DistributionReport {
    /// Tab separated, one row per histogram bin.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "feature\tclass\ttotal\tretained\tlower\tupper\tbin_low\tbin_high\tcount\n",
        );
        for e in &self.entries {
            let (lo, hi) = e
                .bounds
                .map(|(l, h)| (l.to_string(), h.to_string()))
                .unwrap_or_else(|| ("-".into(), "-".into()));
            for (i, c) in e.histogram.counts.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    e.feature,
                    e.label,
                    e.total,
                    e.retained,
                    lo,
                    hi,
                    e.histogram.edges[i],
                    e.histogram.edges[i + 1],
                    c
                );
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "# warning: {w}");
        }
        out
    }

    pub fn entry(&self, feature: FeatureName, label: Label) -> Option<&FeatureClassSummary> {
        self.entries
            .iter()
            .find(|e| e.feature == feature && e.label == label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::dataset::Provenance;
    use crate::features::vector::FeatureVector;
    use proptest::prelude::*;

    #[test]
    fn constant_values_zero_iqr() {
        assert_eq!(iqr_bounds(&[5.0; 4], 1.5).unwrap(), (5.0, 5.0));
    }

    #[test]
    fn hundred_is_an_outlier() {
        // Q1 = 2 + 0.25 * 1 = 2.25, Q3 = 4 + 0.75 * 1 = 4.75, IQR = 2.5
        let (lo, hi) = iqr_bounds(&[1.0, 2.0, 3.0, 4.0, 5.0, 100.0], 1.5).unwrap();
        assert_eq!((lo, hi), (-1.5, 8.5));
        assert!(100.0 > hi);
        assert!(5.0 <= hi);
    }

    #[test]
    fn too_few_values() {
        assert!(matches!(iqr_bounds(&[1.0, 2.0, 3.0], 1.5), Err(FeatureError::TooFewValues(3))));
    }

    proptest! {
        #[test]
        fn translation_equivariant(values in proptest::collection::vec(-1e6f64..1e6, 4..40), c in -1e6f64..1e6) {
            let (lo, hi) = iqr_bounds(&values, 1.5).unwrap();
            let shifted: Vec<f64> = values.iter().map(|v| v + c).collect();
            let (lo2, hi2) = iqr_bounds(&shifted, 1.5).unwrap();
            prop_assert!((lo2 - (lo + c)).abs() <= 1e-6 * (1.0 + lo.abs() + c.abs()));
            prop_assert!((hi2 - (hi + c)).abs() <= 1e-6 * (1.0 + hi.abs() + c.abs()));
        }

        #[test]
        fn histogram_conserves(values in proptest::collection::vec(-1e3f64..1e3, 1..200), bins in 1usize..20) {
            prop_assert_eq!(Histogram::build(&values, bins).total(), values.len());
        }
    }

    fn example(label: Label, vc: u64) -> LabeledExample {
        LabeledExample {
            question_id: vc,
            features: FeatureVector {
                haa: false,
                ac: 0,
                s: 0,
                sas: 0,
                vc,
                ssvc: 0.0,
                cc: 0,
                fc: 0,
                acc: 0.0,
                aar: 0.0,
                ar: 0,
            },
            label,
            provenance: Provenance::Synthetic,
        }
    }

    #[test]
    fn hand_tallied_view_count_bins() {
        // YES: 10..=18 evenly plus 1000 (an outlier); NO: 0..=90 step 10
        let mut data: Vec<LabeledExample> =
            (10..=18).map(|v| example(Label::Yes, v)).collect();
        data.push(example(Label::Yes, 1000));
        data.extend((0..10).map(|i| example(Label::No, i * 10)));
        let report = summarize(&data, SummaryOptions { factor: 1.5, bins: 4 }).unwrap();

        let yes = report.entry(FeatureName::Vc, Label::Yes).unwrap();
        // YES sorted: 10..18, 1000; Q1 = 12.25, Q3 = 16.75, bounds (5.5, 23.5)
        assert_eq!(yes.bounds, Some((5.5, 23.5)));
        assert_eq!(yes.removed, 1);
        // range 10..18, width 2: [10,12) [12,14) [14,16) [16,18]
        assert_eq!(yes.histogram.edges, vec![10.0, 12.0, 14.0, 16.0, 18.0]);
        assert_eq!(yes.histogram.counts, vec![2, 2, 2, 3]);

        let no = report.entry(FeatureName::Vc, Label::No).unwrap();
        assert_eq!(no.removed, 0);
        // 0..90 width 22.5: 0,10,20 | 30,40 | 50,60 | 70,80,90
        assert_eq!(no.histogram.counts, vec![3, 2, 2, 3]);
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn one_class_dataset_warns() {
        let data: Vec<LabeledExample> = (0..6).map(|v| example(Label::Yes, v)).collect();
        let report = summarize(&data, SummaryOptions::default()).unwrap();
        assert!(report.warnings.iter().any(|w| w.contains("class NO")));
        assert!(report.entry(FeatureName::Vc, Label::No).is_none());
    }

    #[test]
    fn conservation_per_class() {
        let mut data: Vec<LabeledExample> = (0..30).map(|v| example(Label::Yes, v * v)).collect();
        data.extend((0..7).map(|v| example(Label::No, 3 * v)));
        let report = summarize(&data, SummaryOptions::default()).unwrap();
        for e in &report.entries {
            assert_eq!(e.retained + e.removed, e.total);
            assert_eq!(e.histogram.total(), e.retained);
        }
        let tsv = report.to_tsv();
        assert!(tsv.starts_with("feature\tclass"));
    }

    #[test]
    fn empty_dataset_is_error() {
        assert!(matches!(summarize(&[], SummaryOptions::default()), Err(FeatureError::EmptyDataset)));
    }
}
