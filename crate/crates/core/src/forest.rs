//! Random-forest regression: bootstrap bagging, per-node feature sampling,
//! variance-minimizing splits and leaf-mean predictions averaged over trees.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::pure_forest::PureForestParams;
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub ntree: usize,
    pub mtry: usize,
    /// Minimum number of rows either child of a split may hold.
    pub nodesize: usize,
    /// `None` grows every tree as far as `nodesize` allows.
    pub max_terminal_nodes: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl ForestParams {
    /// Defaults for `n_features` columns: 500 trees, `mtry = max(1, p/3)`,
    /// `nodesize = 5`, unlimited leaves, bootstrap on.
    pub fn for_features(n_features: usize) -> Self {
        Self {
            ntree: 500,
            mtry: default_mtry(n_features),
            nodesize: 5,
            max_terminal_nodes: None,
            bootstrap: true,
            seed: 0,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.ntree == 0 {
            return Err(Error::validation("ntree", "must be at least 1"));
        }
        if self.mtry == 0 || self.mtry > n_features {
            return Err(Error::validation(
                "mtry",
                format!("{} not in [1, {n_features}]", self.mtry),
            ));
        }
        if self.nodesize == 0 {
            return Err(Error::validation("nodesize", "must be at least 1"));
        }
        if self.max_terminal_nodes == Some(0) {
            return Err(Error::validation("max_terminal_nodes", "must be at least 1"));
        }
        Ok(())
    }
}

pub fn default_mtry(n_features: usize) -> usize {
    (n_features / 3).max(1)
}

/// One node of a tree stored in an arena; the root is node 0.
///
/// Rows whose feature value is strictly below `cutoff` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        cutoff: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        prediction: f64,
        count: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(prediction: f64, count: usize) -> Self {
        Self {
            nodes: vec![Node::Leaf { prediction, count }],
        }
    }

    /// Builds a tree from an arena, checking child links and that node 0
    /// is the root of a proper binary tree over all nodes.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Format("tree has no nodes".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Format(format!("node {i} reached twice")));
            }
            if let Node::Split { left, right, .. } = nodes[i] {
                if left >= nodes.len() || right >= nodes.len() {
                    return Err(Error::Format(format!("node {i} has a dangling child")));
                }
                stack.push(right);
                stack.push(left);
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Format("unreachable nodes in tree".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    /// Routes `row` to a leaf and returns its prediction.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Split {
                    feature,
                    cutoff,
                    left,
                    right,
                } => i = if row[feature] < cutoff { left } else { right },
                Node::Leaf { prediction, .. } => return prediction,
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf { prediction, count } => Some((prediction, count)),
            Node::Split { .. } => None,
        })
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    /// Nodes in preorder (node, then left subtree, then right subtree).
    pub fn preorder(&self) -> Vec<&Node> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            out.push(&self.nodes[i]);
            if let Node::Split { left, right, .. } = self.nodes[i] {
                stack.push(right);
                stack.push(left);
            }
        }
        out
    }

    /// Same tree with the arena laid out in preorder, so that equal trees
    /// compare equal regardless of growth order.
    pub fn into_preorder(self) -> Self {
        let mut nodes = Vec::with_capacity(self.nodes.len());
        // (old index, slot in the parent that should receive the new index)
        let mut stack: Vec<(usize, Option<(usize, bool)>)> = vec![(0, None)];
        while let Some((old, parent)) = stack.pop() {
            let idx = nodes.len();
            if let Some((p, is_left)) = parent {
                if let Node::Split { left, right, .. } = &mut nodes[p] {
                    *(if is_left { left } else { right }) = idx;
                }
            }
            nodes.push(self.nodes[old]);
            if let Node::Split { left, right, .. } = self.nodes[old] {
                stack.push((right, Some((idx, false))));
                stack.push((left, Some((idx, true))));
            }
        }
        Self { nodes }
    }

    /// Structural fingerprint: split features and cutoffs in preorder.
    pub fn splits(&self) -> Vec<(usize, f64)> {
        self.preorder()
            .into_iter()
            .filter_map(|n| match *n {
                Node::Split { feature, cutoff, .. } => Some((feature, cutoff)),
                Node::Leaf { .. } => None,
            })
            .collect()
    }
}

/// How a model was trained. Also serves as the model family tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TrainingParams {
    Standard(ForestParams),
    Pure(PureForestParams),
}

impl TrainingParams {
    pub fn ntree(&self) -> usize {
        match self {
            TrainingParams::Standard(p) => p.ntree,
            TrainingParams::Pure(p) => p.ntree,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            TrainingParams::Standard(_) => "standard",
            TrainingParams::Pure(_) => "pure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub params: TrainingParams,
    pub feature_names: Vec<String>,
    pub target_name: String,
}

impl ForestModel {
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        predict(self, row)
    }

    pub fn predict_batch(&self, data: &Dataset) -> Result<Vec<f64>> {
        predict_batch(self, data)
    }

    /// Per-tree predictions for one row.
    pub fn tree_predictions(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        Ok(self.trees.iter().map(|t| t.predict(row)).collect())
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.feature_names.len() {
            return Err(Error::LengthMismatch {
                expected: self.feature_names.len(),
                actual: row.len(),
            });
        }
        Ok(())
    }
}

pub fn predict(model: &ForestModel, row: &[f64]) -> Result<f64> {
    model.check_row(row)?;
    let sum: f64 = model.trees.iter().map(|t| t.predict(row)).sum();
    Ok(sum / model.trees.len() as f64)
}

pub fn predict_batch(model: &ForestModel, data: &Dataset) -> Result<Vec<f64>> {
    if data.feature_names() != model.feature_names.as_slice() {
        return Err(Error::Schema(format!(
            "model expects features [{}], data has [{}]",
            model.feature_names.join(", "),
            data.feature_names().join(", ")
        )));
    }
    (0..data.n_rows())
        .into_par_iter()
        .map(|i| predict(model, data.row(i)))
        .collect()
}

/// A chosen split and the impurity it removes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitChoice {
    pub feature: usize,
    pub cutoff: f64,
    pub gain: f64,
}

/// Midpoint between adjacent distinct values that keeps `lo < cutoff <= hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m > lo {
        m
    } else {
        hi
    }
}

/// Variance-minimizing split over `candidate_features`.
///
/// Candidate cutoffs are midpoints between adjacent distinct sorted values.
/// A split is legal only if both children receive at least `nodesize` rows.
/// Returns `None` when the node target is constant or no legal split exists.
/// Ties go to the lowest feature index, then the lowest cutoff.
pub fn best_split(
    data: &Dataset,
    rows: &[usize],
    candidate_features: &[usize],
    nodesize: usize,
) -> Option<(usize, f64)> {
    let mut scratch = Vec::new();
    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    best_split_scored(data, rows, &features, nodesize, &mut scratch).map(|s| (s.feature, s.cutoff))
}

pub(crate) fn best_split_scored(
    data: &Dataset,
    rows: &[usize],
    sorted_features: &[usize],
    nodesize: usize,
    scratch: &mut Vec<(f64, f64)>,
) -> Option<SplitChoice> {
    let n = rows.len();
    let nodesize = nodesize.max(1);
    if n < 2 * nodesize {
        return None;
    }
    let y = data.target();
    let first = y[rows[0]];
    if rows.iter().all(|&r| y[r] == first) {
        return None;
    }
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
    let node_sse: f64 = rows.iter().map(|&r| (y[r] - mean).powi(2)).sum();

    let mut best: Option<(f64, usize, f64)> = None;
    for &f in sorted_features {
        scratch.clear();
        // Centered targets keep the running sums well conditioned.
        scratch.extend(rows.iter().map(|&r| (data.value(r, f), y[r] - mean)));
        scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = scratch.iter().map(|p| p.1).sum();
        let total_sq: f64 = scratch.iter().map(|p| p.1 * p.1).sum();
        let mut sum_l = 0.0;
        let mut sq_l = 0.0;
        for i in 0..n - 1 {
            let (x, t) = scratch[i];
            sum_l += t;
            sq_l += t * t;
            let n_l = i + 1;
            let n_r = n - n_l;
            if n_l < nodesize {
                continue;
            }
            if n_r < nodesize {
                break;
            }
            let x_next = scratch[i + 1].0;
            if x_next == x {
                continue;
            }
            let sum_r = total - sum_l;
            let sq_r = total_sq - sq_l;
            let sse = (sq_l - sum_l * sum_l / n_l as f64) + (sq_r - sum_r * sum_r / n_r as f64);
            if best.is_none_or(|(b, _, _)| sse < b) {
                best = Some((sse, f, midpoint(x, x_next)));
            }
        }
    }
    best.map(|(sse, feature, cutoff)| SplitChoice {
        feature,
        cutoff,
        gain: node_sse - sse.max(0.0),
    })
}

/// Split selection strategy for [`grow_tree`].
pub(crate) trait SplitRule {
    fn choose(&mut self, data: &Dataset, rows: &[usize]) -> Option<SplitChoice>;
}

struct StandardRule {
    rng: RngStream,
    n_features: usize,
    mtry: usize,
    nodesize: usize,
    features: Vec<usize>,
    scratch: Vec<(f64, f64)>,
}

impl SplitRule for StandardRule {
    fn choose(&mut self, data: &Dataset, rows: &[usize]) -> Option<SplitChoice> {
        if rows.len() < 2 * self.nodesize {
            return None;
        }
        self.features.clear();
        self.features
            .extend(index::sample(&mut self.rng, self.n_features, self.mtry).iter());
        self.features.sort_unstable();
        best_split_scored(data, rows, &self.features, self.nodesize, &mut self.scratch)
    }
}

struct Pending {
    node: usize,
    rows: Vec<usize>,
    choice: SplitChoice,
    order: usize,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // Max-heap on gain; earlier nodes first among equal gains.
    fn cmp(&self, other: &Self) -> Ordering {
        self.choice
            .gain
            .total_cmp(&other.choice.gain)
            .then_with(|| other.order.cmp(&self.order))
    }
}

fn leaf_for(data: &Dataset, rows: &[usize]) -> Node {
    let y = data.target();
    let sum: f64 = rows.iter().map(|&r| y[r]).sum();
    Node::Leaf {
        prediction: sum / rows.len() as f64,
        count: rows.len(),
    }
}

fn partition(data: &Dataset, rows: Vec<usize>, feature: usize, cutoff: f64) -> (Vec<usize>, Vec<usize>) {
    rows.into_iter().partition(|&r| data.value(r, feature) < cutoff)
}

/// Grows one tree over `rows` (which may repeat, e.g. a bootstrap sample).
///
/// Without a leaf budget the tree is grown depth-first until the rule
/// declines; with one, the pending leaf with the largest gain is expanded
/// first until the budget is reached.
pub(crate) fn grow_tree<R: SplitRule>(
    data: &Dataset,
    rows: Vec<usize>,
    rule: &mut R,
    max_leaves: Option<usize>,
) -> Tree {
    let mut nodes = vec![leaf_for(data, &rows)];
    match max_leaves {
        None => {
            let mut stack = vec![(0usize, rows)];
            while let Some((node, rows)) = stack.pop() {
                let Some(choice) = rule.choose(data, &rows) else {
                    continue;
                };
                let (l, r) = partition(data, rows, choice.feature, choice.cutoff);
                let left = nodes.len();
                nodes.push(leaf_for(data, &l));
                nodes.push(leaf_for(data, &r));
                nodes[node] = Node::Split {
                    feature: choice.feature,
                    cutoff: choice.cutoff,
                    left,
                    right: left + 1,
                };
                stack.push((left + 1, r));
                stack.push((left, l));
            }
        }
        Some(limit) => {
            let mut heap = BinaryHeap::new();
            let mut order = 0;
            if let Some(choice) = rule.choose(data, &rows) {
                heap.push(Pending {
                    node: 0,
                    rows,
                    choice,
                    order,
                });
            }
            let mut n_leaves = 1;
            while n_leaves < limit {
                let Some(p) = heap.pop() else { break };
                let (l, r) = partition(data, p.rows, p.choice.feature, p.choice.cutoff);
                let left = nodes.len();
                nodes.push(leaf_for(data, &l));
                nodes.push(leaf_for(data, &r));
                nodes[p.node] = Node::Split {
                    feature: p.choice.feature,
                    cutoff: p.choice.cutoff,
                    left,
                    right: left + 1,
                };
                n_leaves += 1;
                for (node, rows) in [(left, l), (left + 1, r)] {
                    if let Some(choice) = rule.choose(data, &rows) {
                        order += 1;
                        heap.push(Pending {
                            node,
                            rows,
                            choice,
                            order,
                        });
                    }
                }
            }
        }
    }
    Tree { nodes }.into_preorder()
}

fn train_tree(data: &Dataset, params: &ForestParams, tree_index: usize) -> Tree {
    let mut rng = RngStream::derive(params.seed, tree_index as u64);
    let n = data.n_rows();
    let rows: Vec<usize> = if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut rule = StandardRule {
        rng,
        n_features: data.n_features(),
        mtry: params.mtry,
        nodesize: params.nodesize,
        features: Vec::with_capacity(params.mtry),
        scratch: Vec::with_capacity(n),
    };
    grow_tree(data, rows, &mut rule, params.max_terminal_nodes)
}

/// Trains a standard random forest. Trees are built in parallel on the
/// current rayon pool; each uses a stream derived from `(seed, tree index)`.
pub fn train_forest(train: &Dataset, params: &ForestParams) -> Result<ForestModel> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    params.validate(train.n_features())?;
    let trees = (0..params.ntree)
        .into_par_iter()
        .map(|t| train_tree(train, params, t))
        .collect();
    Ok(ForestModel {
        trees,
        params: TrainingParams::Standard(params.clone()),
        feature_names: train.feature_names().to_vec(),
        target_name: train.target_name().to_string(),
    })
}
