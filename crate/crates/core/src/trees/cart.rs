//! Greedy weighted-Gini tree induction shared by all three model kinds.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Node, Tree};
use crate::balancing::LabeledMatrix;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SplitSearch {
    /// Best midpoint over all distinct values (CART).
    Exhaustive,
    /// One uniform threshold per candidate feature (extra trees).
    RandomThreshold,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub mtry: usize,
    pub search: SplitSearch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub score: f64,
}

impl Split {
    /// Lower impurity wins. Scores within a relative 1e-12 count as tied
    /// (equal impurities can round differently depending on summation
    /// order); ties go to the lower feature index, then the lower threshold.
    fn better_than(&self, other: &Split) -> bool {
        let tol = 1e-12 * self.score.abs().max(other.score.abs()).max(1.0);
        if (self.score - other.score).abs() <= tol {
            (self.feature, self.threshold) < (other.feature, other.threshold)
        } else {
            self.score < other.score
        }
    }
}

/// Weighted Gini of a binary node times its weight: `2 p (w - p) / w`.
#[inline]
fn weighted_gini(pos: f64, total: f64) -> f64 {
    if total <= 0.0 {
        0.0
    } else {
        2.0 * pos * (total - pos) / total
    }
}

/// Weighted child impurity of a split, normalised by the parent weight.
#[inline]
pub(crate) fn split_score(left_pos: f64, left_total: f64, right_pos: f64, right_total: f64) -> f64 {
    (weighted_gini(left_pos, left_total) + weighted_gini(right_pos, right_total)) / (left_total + right_total)
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

struct Grower<'a> {
    x: &'a LabeledMatrix,
    w: &'a [f64],
    params: GrowParams,
    rng: rng::Rng,
    nodes: Vec<Node>,
    order: Vec<usize>,
}

pub(crate) fn grow(x: &LabeledMatrix, w: &[f64], rows: Vec<usize>, params: GrowParams, seed_rng: rng::Rng) -> Tree {
    let mut g = Grower {
        x,
        w,
        params,
        rng: seed_rng,
        nodes: Vec::new(),
        order: (0..x.n_cols()).collect(),
    };
    g.build(rows, 0);
    Tree { nodes: g.nodes }
}

impl Grower<'_> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (pos, total) = rows.iter().fold((0.0, 0.0), |(p, t), &i| {
            let wi = self.w[i];
            (p + if self.x.labels()[i] == 1 { wi } else { 0.0 }, t + wi)
        });
        let id = self.nodes.len();
        let leaf = Node::Leaf {
            positive_mass: if total > 0.0 { pos / total } else { 0.0 },
            total_weight: total,
        };
        self.nodes.push(leaf);

        let pure = pos <= 0.0 || pos >= total;
        let depth_done = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_done || rows.len() < self.params.min_samples_split {
            return id;
        }
        let Some(split) = self.best_split(&rows) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| self.x.value(i, split.feature) <= split.threshold);
        debug_assert!(!left.is_empty() && !right.is_empty());
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }

    /// Visits features in random order until `mtry` non-constant ones have
    /// been evaluated.
    fn best_split(&mut self, rows: &[usize]) -> Option<Split> {
        let d = self.x.n_cols();
        if self.params.mtry < d {
            self.order.shuffle(&mut self.rng);
        }
        let mut best: Option<Split> = None;
        let mut visited = 0;
        for k in 0..d {
            if visited >= self.params.mtry {
                break;
            }
            let j = self.order[k];
            let candidate = match self.params.search {
                SplitSearch::Exhaustive => self.exhaustive(rows, j),
                SplitSearch::RandomThreshold => self.random_threshold(rows, j),
            };
            let Some(candidate) = candidate else { continue };
            visited += 1;
            if best.as_ref().is_none_or(|b| candidate.better_than(b)) {
                best = Some(candidate);
            }
        }
        best
    }

    /// `None` when the feature is constant on `rows`.
    fn exhaustive(&self, rows: &[usize], j: usize) -> Option<Split> {
        let mut sorted: Vec<(f64, usize)> = rows.iter().map(|&i| (self.x.value(i, j), i)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if sorted.first()?.0 == sorted.last()?.0 {
            return None;
        }
        let (total_pos, total) = sorted.iter().fold((0.0, 0.0), |(p, t), &(_, i)| {
            (p + if self.x.labels()[i] == 1 { self.w[i] } else { 0.0 }, t + self.w[i])
        });
        let mut left_pos = 0.0;
        let mut left_total = 0.0;
        let mut best: Option<Split> = None;
        for k in 0..sorted.len() - 1 {
            let (v, i) = sorted[k];
            left_total += self.w[i];
            if self.x.labels()[i] == 1 {
                left_pos += self.w[i];
            }
            let next = sorted[k + 1].0;
            if next <= v {
                continue;
            }
            let score = split_score(left_pos, left_total, total_pos - left_pos, total - left_total);
            let cand = Split {
                feature: j,
                threshold: midpoint(v, next),
                score,
            };
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
        best
    }

    fn random_threshold(&mut self, rows: &[usize], j: usize) -> Option<Split> {
        let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = self.x.value(i, j);
            (lo.min(v), hi.max(v))
        });
        if lo >= hi {
            return None;
        }
        let threshold = self.rng.random_range(lo..hi);
        let (mut lp, mut lt, mut rp, mut rt) = (0.0, 0.0, 0.0, 0.0);
        for &i in rows {
            let wi = self.w[i];
            let is_pos = self.x.labels()[i] == 1;
            if self.x.value(i, j) <= threshold {
                lt += wi;
                if is_pos {
                    lp += wi;
                }
            } else {
                rt += wi;
                if is_pos {
                    rp += wi;
                }
            }
        }
        Some(Split {
            feature: j,
            threshold,
            score: split_score(lp, lt, rp, rt),
        })
    }
}
