use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Node, Tree};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// 0 means grow until pure or `min_samples_leaf` binds.
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features tried per split; 0 means `floor(sqrt(d))`.
    pub max_features: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: 0,
            min_samples_leaf: 1,
            max_features: 0,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    /// Leaves hold the class-1 fraction of their training rows.
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.5;
        }
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

fn gini(pos: f64, n: f64) -> f64 {
    let p = pos / n;
    2.0 * p * (1.0 - p)
}

struct Grower<'a, R: Rng> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    params: &'a ForestParams,
    max_features: usize,
    rng: R,
    nodes: Vec<Node>,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let at = self.nodes.len();
        let n = rows.len() as f64;
        let pos = rows.iter().filter(|&&i| self.y[i] == 1).count() as f64;
        self.nodes.push(Node::Leaf { value: pos / n });
        let depth_ok = self.params.max_depth == 0 || depth < self.params.max_depth;
        if pos == 0.0 || pos == n || !depth_ok || rows.len() < 2 * self.params.min_samples_leaf.max(1) {
            return at;
        }
        let Some((feature, threshold)) = self.best_split(rows, pos) else {
            return at;
        };
        let mid = partition(rows, |i| self.x[i][feature] <= threshold);
        let (l, r) = rows.split_at_mut(mid);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[at] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        at
    }

    fn best_split(&mut self, rows: &[usize], pos: f64) -> Option<(usize, f64)> {
        let d = self.x[0].len();
        let n = rows.len() as f64;
        let parent = gini(pos, n);
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut features = sample(&mut self.rng, d, self.max_features).into_vec();
        features.sort_unstable();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<usize> = rows.to_vec();
        for f in features {
            order.sort_by(|&a, &b| self.x[a][f].total_cmp(&self.x[b][f]).then(a.cmp(&b)));
            let mut left_pos = 0.0;
            for k in 1..order.len() {
                left_pos += f64::from(self.y[order[k - 1]]);
                let (lo, hi) = (self.x[order[k - 1]][f], self.x[order[k]][f]);
                if lo == hi || k < min_leaf || order.len() - k < min_leaf {
                    continue;
                }
                let nl = k as f64;
                let nr = n - nl;
                let child = (nl * gini(left_pos, nl) + nr * gini(pos - left_pos, nr)) / n;
                let decrease = parent - child;
                if decrease > 1e-12 && best.is_none_or(|b| decrease > b.0) {
                    best = Some((decrease, f, midpoint(lo, hi)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

fn partition(rows: &mut [usize], left: impl Fn(usize) -> bool) -> usize {
    let mut mid = 0;
    for k in 0..rows.len() {
        if left(rows[k]) {
            rows.swap(mid, k);
            mid += 1;
        }
    }
    mid
}

/// Bootstrap-aggregated Gini trees with per-split feature subsampling. Tree
/// `t` draws from its own stream derived from `seed`.
pub fn fit_forest(x: &[Vec<f64>], y: &[u8], params: &ForestParams, seed: u64) -> ForestModel {
    let n = y.len();
    let d = x.first().map_or(0, Vec::len);
    let max_features = match params.max_features {
        0 => ((d as f64).sqrt().floor() as usize).max(1),
        m => m,
    }
    .min(d);
    let trees = (0..params.trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::derived(seed, t as u64);
            let mut rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            if d == 0 {
                let pos = rows.iter().filter(|&&i| y[i] == 1).count() as f64;
                return Tree::leaf(pos / n as f64);
            }
            let mut g = Grower {
                x,
                y,
                params,
                max_features,
                rng,
                nodes: Vec::new(),
            };
            g.grow(&mut rows, 0);
            Tree { nodes: g.nodes }
        })
        .collect();
    ForestModel { trees }
}
