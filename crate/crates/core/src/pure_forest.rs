//! Purely random forests: splits are drawn without looking at the target,
//! and every tree sees all rows and all features.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{grow_tree, midpoint, ForestModel, SplitChoice, SplitRule, Tree, TrainingParams};
use crate::rng::RngStream;

/// Fresh feature/pair draws allowed when a split would leave a child smaller
/// than `leaf_min`, before the node becomes a leaf.
pub const MAX_SPLIT_RETRIES: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PureForestParams {
    pub ntree: usize,
    /// Minimum rows per leaf; 1 grows trees until every leaf holds one point.
    pub leaf_min: usize,
    pub seed: u64,
}

impl Default for PureForestParams {
    fn default() -> Self {
        Self {
            ntree: 500,
            leaf_min: 5,
            seed: 0,
        }
    }
}

impl PureForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.ntree == 0 {
            return Err(Error::validation("ntree", "must be at least 1"));
        }
        if self.leaf_min == 0 {
            return Err(Error::validation("leaf_min", "must be at least 1"));
        }
        Ok(())
    }
}

/// Draws a random split: a uniformly chosen feature with at least two
/// distinct values at this node, cut halfway between a uniformly chosen pair
/// of adjacent distinct values. Draws leaving a child below `leaf_min` are
/// retried up to [`MAX_SPLIT_RETRIES`] times.
pub fn random_split(
    data: &Dataset,
    rows: &[usize],
    rng: &mut RngStream,
    leaf_min: usize,
) -> Option<(usize, f64)> {
    let mut values = Vec::new();
    let mut order = Vec::new();
    random_split_with(data, rows, rng, leaf_min, &mut values, &mut order)
}

fn random_split_with(
    data: &Dataset,
    rows: &[usize],
    rng: &mut RngStream,
    leaf_min: usize,
    values: &mut Vec<f64>,
    order: &mut Vec<usize>,
) -> Option<(usize, f64)> {
    let p = data.n_features();
    let leaf_min = leaf_min.max(1);
    if rows.len() < 2 * leaf_min || p == 0 {
        return None;
    }
    for _ in 0..MAX_SPLIT_RETRIES {
        // Up to p feature draws, without replacement, to find a non-constant one.
        order.clear();
        order.extend(0..p);
        order.shuffle(rng);
        let mut found = None;
        for &f in order.iter() {
            values.clear();
            values.extend(rows.iter().map(|&r| data.value(r, f)));
            values.sort_by(f64::total_cmp);
            values.dedup();
            if values.len() >= 2 {
                found = Some(f);
                break;
            }
        }
        let feature = found?;
        let k = rng.random_range(0..values.len() - 1);
        let cutoff = midpoint(values[k], values[k + 1]);
        let n_left = rows.iter().filter(|&&r| data.value(r, feature) < cutoff).count();
        if n_left >= leaf_min && rows.len() - n_left >= leaf_min {
            return Some((feature, cutoff));
        }
    }
    None
}

struct RandomRule {
    rng: RngStream,
    leaf_min: usize,
    values: Vec<f64>,
    order: Vec<usize>,
}

impl SplitRule for RandomRule {
    fn choose(&mut self, data: &Dataset, rows: &[usize]) -> Option<SplitChoice> {
        random_split_with(data, rows, &mut self.rng, self.leaf_min, &mut self.values, &mut self.order)
            .map(|(feature, cutoff)| SplitChoice {
                feature,
                cutoff,
                gain: 0.0,
            })
    }
}

pub fn train_pure_forest(train: &Dataset, params: &PureForestParams) -> Result<ForestModel> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    params.validate()?;
    let trees: Vec<Tree> = (0..params.ntree)
        .into_par_iter()
        .map(|t| {
            let mut rule = RandomRule {
                rng: RngStream::derive(params.seed, t as u64),
                leaf_min: params.leaf_min,
                values: Vec::new(),
                order: Vec::new(),
            };
            grow_tree(train, (0..train.n_rows()).collect(), &mut rule, None)
        })
        .collect();
    Ok(ForestModel {
        trees,
        params: TrainingParams::Pure(params.clone()),
        feature_names: train.feature_names().to_vec(),
        target_name: train.target_name().to_string(),
    })
}
