//! Deterministic CART decision-tree induction.
//!
//! Greedy top-down growth on gini impurity with an exhaustive threshold
//! search at sorted-value midpoints. All tie-breaks are pinned (lowest
//! feature index, then lowest threshold; leaf majority ties go to the lowest
//! class id) so a fit is a pure function of the data and parameters. That
//! determinism is what lets the optimizers reproduce fitness values exactly.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum tree depth; `None` grows until purity.
    pub max_depth: Option<usize>,
    /// Smallest node size still considered for splitting.
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        class: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    depth: usize,
    n_features: usize,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }
}

struct Builder<'a> {
    data: &'a Dataset,
    params: &'a TreeParams,
    nodes: Vec<Node>,
    depth: usize,
}

/// Best split found for a node: (feature, threshold, weighted child gini).
struct SplitChoice {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<'a> Builder<'a> {
    fn class_counts(&self, rows: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.data.n_classes()];
        for &r in rows {
            counts[self.data.labels()[r] as usize] += 1;
        }
        counts
    }

    fn majority_class(counts: &[usize]) -> u32 {
        let mut best = 0usize;
        for (c, &count) in counts.iter().enumerate() {
            if count > counts[best] {
                best = c;
            }
        }
        best as u32
    }

    fn gini_from_counts(counts: &[usize], total: usize) -> f64 {
        let t = total as f64;
        1.0 - counts
            .iter()
            .map(|&c| {
                let p = c as f64 / t;
                p * p
            })
            .sum::<f64>()
    }

    /// Exhaustive search over all (feature, midpoint) candidates; ties keep
    /// the lowest feature index, then the lowest threshold.
    fn best_split(&self, rows: &[usize]) -> Option<SplitChoice> {
        let n = rows.len();
        let n_classes = self.data.n_classes();
        let mut best: Option<SplitChoice> = None;

        let mut sorted: Vec<usize> = rows.to_vec();
        for feature in 0..self.data.n_features() {
            sorted.sort_by(|&a, &b| {
                self.data
                    .value(a, feature)
                    .partial_cmp(&self.data.value(b, feature))
                    .expect("dataset values are finite")
            });

            let mut left_counts = vec![0usize; n_classes];
            let mut right_counts = self.class_counts(&sorted);
            for i in 0..n - 1 {
                let label = self.data.labels()[sorted[i]] as usize;
                left_counts[label] += 1;
                right_counts[label] -= 1;

                let v = self.data.value(sorted[i], feature);
                let next = self.data.value(sorted[i + 1], feature);
                if v == next {
                    continue;
                }
                // keep routing consistent with this prefix even if the
                // midpoint rounds up to `next`
                let mut threshold = (v + next) / 2.0;
                if threshold >= next {
                    threshold = v;
                }

                let n_left = i + 1;
                let n_right = n - n_left;
                let score = (n_left as f64 * Self::gini_from_counts(&left_counts, n_left)
                    + n_right as f64 * Self::gini_from_counts(&right_counts, n_right))
                    / n as f64;
                if best.as_ref().is_none_or(|b| score < b.score) {
                    best = Some(SplitChoice {
                        feature,
                        threshold,
                        score,
                    });
                }
            }
        }
        best
    }

    fn build(&mut self, rows: &[usize], depth: usize) -> usize {
        self.depth = self.depth.max(depth);
        let counts = self.class_counts(rows);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);

        if pure || depth_reached || rows.len() < self.params.min_samples_split {
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf {
                class: Self::majority_class(&counts),
            });
            return id;
        }

        let Some(choice) = self.best_split(rows) else {
            // every feature is constant within this node
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf {
                class: Self::majority_class(&counts),
            });
            return id;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.data.value(r, choice.feature) <= choice.threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { class: 0 }); // placeholder until children exist
        let left = self.build(&left_rows, depth + 1);
        let right = self.build(&right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: choice.feature,
            threshold: choice.threshold,
            left,
            right,
        };
        id
    }
}

/// Grow a tree on the full training view.
pub fn fit(train: &Dataset, params: &TreeParams) -> Result<DecisionTree> {
    if train.n_rows() == 0 {
        return Err(Error::EmptyTrainingSet);
    }
    let mut builder = Builder {
        data: train,
        params,
        nodes: Vec::new(),
        depth: 0,
    };
    let rows: Vec<usize> = (0..train.n_rows()).collect();
    builder.build(&rows, 0);
    Ok(DecisionTree {
        nodes: builder.nodes,
        depth: builder.depth,
        n_features: train.n_features(),
    })
}

/// Route every row down the tree: `value <= threshold` goes left.
pub fn predict(tree: &DecisionTree, d: &Dataset) -> Result<Vec<u32>> {
    if d.n_features() != tree.n_features {
        return Err(Error::FeatureCountMismatch {
            expected: tree.n_features,
            got: d.n_features(),
        });
    }
    let mut out = Vec::with_capacity(d.n_rows());
    for row in 0..d.n_rows() {
        let mut node = 0usize;
        loop {
            match &tree.nodes[node] {
                Node::Leaf { class } => {
                    out.push(*class);
                    break;
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if d.value(row, *feature) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
    Ok(out)
}

/// Fraction of positions where the two label vectors agree.
pub fn accuracy(predicted: &[u32], truth: &[u32]) -> Result<f64> {
    if predicted.is_empty() || predicted.len() != truth.len() {
        return Err(Error::VectorLength(predicted.len(), truth.len()));
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / predicted.len() as f64)
}
