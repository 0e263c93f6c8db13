//! CART-style binary classification tree on Gini impurity with a complexity
//! parameter (cp) stopping rule.
//!
//! A candidate split of node `t` into `l` and `r` decreases the total
//! (sample-weighted) impurity of the tree by
//!
//! ```text
//! Δ = (n_t g_t - n_l g_l - n_r g_r) / N
//! ```
//!
//! and is kept only when `Δ > 0` and `Δ / g_root >= cp`. The best split of a
//! node does not depend on cp, so trees grown with a larger cp are prefixes of
//! trees grown with a smaller one.

use serde::{Deserialize, Serialize};

use super::data::{class_counts, Sample};
use super::{ClassifierError, Prediction};
use crate::features::{FeatureName, Label, FEATURE_COUNT};

pub const DEFAULT_MIN_LEAF: usize = 5;
pub const DEFAULT_MAX_DEPTH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    #[serde(with = "super::serde_cp")]
    pub cp: f64,
    pub min_leaf: usize,
    pub max_depth: usize,
}

impl TreeParams {
    pub fn with_cp(cp: f64) -> Self {
        Self {
            cp,
            min_leaf: DEFAULT_MIN_LEAF,
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SplitTest {
    /// Left branch when `value < threshold`.
    Threshold { threshold: f64 },
    /// Left branch when the flag is false.
    Boolean,
}

impl SplitTest {
    fn goes_left(self, value: f64) -> bool {
        match self {
            SplitTest::Threshold { threshold } => value < threshold,
            SplitTest::Boolean => value < 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: Label,
        /// `[NO, YES]`
        class_counts: [usize; 2],
    },
    Split {
        feature: FeatureName,
        test: SplitTest,
        left: usize,
        right: usize,
        class_counts: [usize; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    /// Node 0 is the root; children always have larger indices.
    pub nodes: Vec<Node>,
    #[serde(with = "super::serde_cp")]
    pub cp_used: f64,
    pub min_leaf: usize,
    pub max_depth: usize,
    pub feature_subset: Vec<FeatureName>,
    /// Total normalized impurity decrease credited to each feature.
    #[serde(default)]
    pub importance: Vec<(FeatureName, f64)>,
}

fn majority(c: [usize; 2]) -> Label {
    // ties go to NO: a post is flagged deficient only on a strict majority
    if c[1] > c[0] {
        Label::Yes
    } else {
        Label::No
    }
}

/// `Σ c_k² / n`; the weighted impurity of a node is `n - sum_sq_over_n`.
fn sum_sq_over_n(c: [usize; 2]) -> f64 {
    let n = (c[0] + c[1]) as f64;
    if n == 0.0 {
        0.0
    } else {
        ((c[0] * c[0] + c[1] * c[1]) as f64) / n
    }
}

/// Exact score of a split for comparison: `Σcl²/nl + Σcr²/nr` as a fraction.
#[derive(Debug, Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn new(l: [usize; 2], r: [usize; 2]) -> Self {
        let nl = (l[0] + l[1]) as u128;
        let nr = (r[0] + r[1]) as u128;
        let sl = (l[0] * l[0] + l[1] * l[1]) as u128;
        let sr = (r[0] * r[0] + r[1] * r[1]) as u128;
        SplitScore {
            num: sl * nr + sr * nl,
            den: nl * nr,
        }
    }

    fn better_than(self, other: SplitScore) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    feature: FeatureName,
    threshold: f64,
    score: SplitScore,
    left: [usize; 2],
    right: [usize; 2],
}

struct Grower<'a> {
    samples: &'a [Sample],
    features: Vec<FeatureName>,
    params: TreeParams,
    total: f64,
    root_impurity: f64,
    nodes: Vec<Node>,
    importance: [f64; FEATURE_COUNT],
}

impl Grower<'_> {
    fn best_split(&self, idx: &[usize], counts: [usize; 2]) -> Option<Candidate> {
        let n = idx.len();
        let mut best: Option<Candidate> = None;
        let mut column: Vec<(f64, Label)> = Vec::with_capacity(n);
        for &feature in &self.features {
            column.clear();
            let boolean = feature.is_boolean();
            column.extend(idx.iter().map(|&i| {
                let v = self.samples[i].x[feature.index()];
                // flags split once, as false/true
                let v = if boolean { f64::from(u8::from(v >= 0.5)) } else { v };
                (v, self.samples[i].y)
            }));
            column.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0usize; 2];
            for i in 0..n - 1 {
                left[column[i].1.index()] += 1;
                let (v, next) = (column[i].0, column[i + 1].0);
                if v == next {
                    continue;
                }
                let nl = i + 1;
                if nl < self.params.min_leaf || n - nl < self.params.min_leaf {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let score = SplitScore::new(left, right);
                if best.as_ref().is_none_or(|b| score.better_than(b.score)) {
                    best = Some(Candidate {
                        feature,
                        threshold: v + (next - v) / 2.0,
                        score,
                        left,
                        right,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = {
            let mut c = [0; 2];
            for &i in &idx {
                c[self.samples[i].y.index()] += 1;
            }
            c
        };
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf {
            label: majority(counts),
            class_counts: counts,
        });
        if depth >= self.params.max_depth || counts[0] == 0 || counts[1] == 0 {
            return me;
        }
        let Some(c) = self.best_split(&idx, counts) else {
            return me;
        };
        let decrease = (sum_sq_over_n(c.left) + sum_sq_over_n(c.right) - sum_sq_over_n(counts))
            / self.total;
        if !(decrease > 0.0) || decrease / self.root_impurity < self.params.cp {
            return me;
        }
        self.importance[c.feature.index()] += decrease / self.root_impurity;
        let test = if c.feature.is_boolean() {
            SplitTest::Boolean
        } else {
            SplitTest::Threshold { threshold: c.threshold }
        };
        let (li, ri): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| test.goes_left(self.samples[i].x[c.feature.index()]));
        debug_assert_eq!(li.len(), c.left[0] + c.left[1]);
        let left = self.grow(li, depth + 1);
        let right = self.grow(ri, depth + 1);
        self.nodes[me] = Node::Split {
            feature: c.feature,
            test,
            left,
            right,
            class_counts: counts,
        };
        me
    }
}

/// Grows a tree over the given feature columns.
pub fn train_tree(
    samples: &[Sample],
    features: &[FeatureName],
    params: TreeParams,
) -> Result<DecisionTreeModel, ClassifierError> {
    if samples.is_empty() {
        return Err(ClassifierError::EmptyTraining);
    }
    if features.is_empty() {
        return Err(ClassifierError::InvalidConfig("empty feature subset".into()));
    }
    if samples.iter().any(|s| s.x.iter().any(|v| v.is_nan())) {
        return Err(ClassifierError::InvalidInput("NaN feature value".into()));
    }
    let mut features = features.to_vec();
    features.sort();
    features.dedup();
    let counts = class_counts(samples);
    let total = samples.len() as f64;
    let mut g = Grower {
        samples,
        features: features.clone(),
        params,
        total,
        root_impurity: (total - sum_sq_over_n(counts)) / total,
        nodes: Vec::new(),
        importance: [0.0; FEATURE_COUNT],
    };
    g.grow((0..samples.len()).collect(), 0);
    let importance = features
        .iter()
        .map(|&f| (f, g.importance[f.index()]))
        .collect();
    Ok(DecisionTreeModel {
        nodes: g.nodes,
        cp_used: params.cp,
        min_leaf: params.min_leaf,
        max_depth: params.max_depth,
        feature_subset: features,
        importance,
    })
}

impl DecisionTreeModel {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn root_feature(&self) -> Option<FeatureName> {
        match self.nodes.first()? {
            Node::Split { feature, .. } => Some(*feature),
            Node::Leaf { .. } => None,
        }
    }

    /// Checks structural invariants: children exist and follow their parent
    /// (so the graph is acyclic and every walk ends at a leaf), and leaves
    /// are non-empty.
    pub fn validate(&self) -> Result<(), ClassifierError> {
        if self.nodes.is_empty() {
            return Err(ClassifierError::InvalidModel("tree has no nodes".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match *n {
                Node::Leaf { class_counts, .. } if class_counts[0] + class_counts[1] == 0 => {
                    return Err(ClassifierError::InvalidModel(format!("leaf {i} is empty")))
                }
                Node::Split { left, right, .. }
                    if left <= i || right <= i || left >= self.nodes.len() || right >= self.nodes.len() =>
                {
                    return Err(ClassifierError::InvalidModel(format!(
                        "node {i} has bad children ({left}, {right})"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn predict_row(&self, x: &[f64; FEATURE_COUNT]) -> Result<Prediction, ClassifierError> {
        let mut i = 0;
        // children indices strictly increase, so this ends within len steps
        for _ in 0..=self.nodes.len() {
            match self.nodes.get(i) {
                Some(Node::Leaf { label, class_counts }) => {
                    let n = (class_counts[0] + class_counts[1]) as f64;
                    return Ok(Prediction {
                        label: *label,
                        confidence: class_counts[label.index()] as f64 / n,
                    });
                }
                Some(Node::Split { feature, test, left, right, .. }) => {
                    let v = x[feature.index()];
                    if v.is_nan() {
                        return Err(ClassifierError::InvalidInput(format!("{feature} is NaN")));
                    }
                    let next = if test.goes_left(v) { *left } else { *right };
                    if next <= i {
                        break;
                    }
                    i = next;
                }
                None => break,
            }
        }
        Err(ClassifierError::InvalidModel("tree walk did not reach a leaf".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(ssvc: f64, haa: bool, y: Label) -> Sample {
        let mut x = [0.0; FEATURE_COUNT];
        x[FeatureName::Ssvc.index()] = ssvc;
        x[FeatureName::Haa.index()] = f64::from(u8::from(haa));
        Sample { x, y }
    }

    #[test]
    fn pure_training_set_is_a_single_leaf() {
        let data: Vec<Sample> = (0..20).map(|i| row(i as f64, i % 2 == 0, Label::Yes)).collect();
        let t = train_tree(&data, &FeatureName::ALL, TreeParams::with_cp(0.0)).unwrap();
        assert_eq!(t.nodes, vec![Node::Leaf { label: Label::Yes, class_counts: [0, 20] }]);
    }

    #[test]
    fn infinite_cp_is_root_only() {
        let mut data: Vec<Sample> = (0..30).map(|i| row(i as f64, false, Label::Yes)).collect();
        data.extend((30..50).map(|i| row(i as f64, false, Label::No)));
        let t = train_tree(&data, &FeatureName::ALL, TreeParams::with_cp(f64::INFINITY)).unwrap();
        assert_eq!(t.node_count(), 1);
        let p = t.predict_row(&data[0].x).unwrap();
        assert_eq!(p.label, Label::Yes);
        assert!((p.confidence - 0.6).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_a_midpoint() {
        let mut data: Vec<Sample> = (0..10).map(|i| row(0.001 * i as f64 / 10.0, false, Label::Yes)).collect();
        data.extend((0..10).map(|i| row(0.003 + 0.001 * i as f64, false, Label::No)));
        let t = train_tree(&data, &[FeatureName::Ssvc], TreeParams::with_cp(0.01)).unwrap();
        match t.nodes[0] {
            Node::Split { feature, test: SplitTest::Threshold { threshold }, .. } => {
                assert_eq!(feature, FeatureName::Ssvc);
                assert!((threshold - (0.0009 + 0.003) / 2.0).abs() < 1e-15);
            }
            ref n => panic!("expected split, got {n:?}"),
        }
        let mut fv = [0.0; FEATURE_COUNT];
        fv[FeatureName::Ssvc.index()] = 0.001;
        assert_eq!(t.predict_row(&fv).unwrap().label, Label::Yes);
    }

    #[test]
    fn boolean_feature_uses_boolean_test() {
        let mut data: Vec<Sample> = (0..10).map(|_| row(0.0, false, Label::Yes)).collect();
        data.extend((0..10).map(|_| row(0.0, true, Label::No)));
        let t = train_tree(&data, &FeatureName::ALL, TreeParams::with_cp(0.0)).unwrap();
        assert!(matches!(t.nodes[0], Node::Split { feature: FeatureName::Haa, test: SplitTest::Boolean, .. }));
    }

    #[test]
    fn min_leaf_respected() {
        let mut data: Vec<Sample> = (0..3).map(|i| row(i as f64, false, Label::Yes)).collect();
        data.extend((3..40).map(|i| row(i as f64, false, Label::No)));
        let t = train_tree(&data, &[FeatureName::Ssvc], TreeParams::with_cp(0.0)).unwrap();
        for n in &t.nodes {
            if let Node::Leaf { class_counts, .. } = n {
                assert!(class_counts[0] + class_counts[1] >= DEFAULT_MIN_LEAF);
            }
        }
    }

    #[test]
    fn ties_prefer_lower_feature_index() {
        // ac and sas carry identical information
        let mut data = Vec::new();
        for i in 0..20 {
            let mut x = [0.0; FEATURE_COUNT];
            x[FeatureName::Ac.index()] = i as f64;
            x[FeatureName::Sas.index()] = i as f64;
            data.push(Sample { x, y: if i < 10 { Label::Yes } else { Label::No } });
        }
        let t = train_tree(&data, &[FeatureName::Sas, FeatureName::Ac], TreeParams::with_cp(0.0)).unwrap();
        assert_eq!(t.root_feature(), Some(FeatureName::Ac));
    }

    #[test]
    fn pruning_is_monotone_in_cp() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data: Vec<Sample> = (0..400)
            .map(|_| {
                let mut x = [0.0; FEATURE_COUNT];
                for v in x.iter_mut() {
                    *v = rng.gen_range(0.0..1.0);
                }
                let y = if x[3] + 0.3 * x[5] > 0.6 + rng.gen_range(-0.2..0.2) { Label::Yes } else { Label::No };
                Sample { x, y }
            })
            .collect();
        let grid = [f64::INFINITY, 0.2, 0.1, 0.05, 0.02, 0.012, 0.005, 0.001, 0.0];
        let counts: Vec<usize> = grid
            .iter()
            .map(|&cp| train_tree(&data, &FeatureName::ALL, TreeParams::with_cp(cp)).unwrap().node_count())
            .collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
        assert!(counts[0] == 1 && *counts.last().unwrap() > 3);
    }

    #[test]
    fn validate_catches_cycles() {
        let mut t = train_tree(
            &[row(0.0, false, Label::Yes), row(1.0, false, Label::No)],
            &FeatureName::ALL,
            TreeParams::with_cp(0.0),
        )
        .unwrap();
        assert!(t.validate().is_ok());
        t.nodes = vec![Node::Split {
            feature: FeatureName::Ssvc,
            test: SplitTest::Threshold { threshold: 0.5 },
            left: 0,
            right: 0,
            class_counts: [1, 1],
        }];
        assert!(t.validate().is_err());
        assert!(t.predict_row(&FeatureVector::from_array(&[0.0; 11]).to_array()).is_err());
    }
}
