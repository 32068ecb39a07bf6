use serde::{Deserialize, Serialize};

use super::tree::{midpoint, Node, Tree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Every node of a level is split before the next level.
    LevelWise,
    /// The leaf with the largest gain is split next, up to `max_leaves`.
    LeafWise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
    pub growth: Growth,
    pub max_leaves: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            rounds: 100,
            max_depth: 3,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
            growth: Growth::LevelWise,
            max_leaves: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub base_margin: f64,
    /// Leaf values already include the learning rate.
    pub trees: Vec<Tree>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl GbtModel {
    pub fn margin(&self, x: &[f64]) -> f64 {
        self.base_margin + self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        sigmoid(self.margin(x))
    }
}

fn log_loss(margins: &[f64], y: &[u8]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(y)
        .map(|(&m, &c)| {
            // ln(1 + e^m) − y·m, stable for large |m|
            let softplus = if m > 0.0 { m + (-m).exp().ln_1p() } else { m.exp().ln_1p() };
            softplus - f64::from(c) * m
        })
        .sum();
    total / margins.len() as f64
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

#[derive(Debug, Clone, Copy)]
struct Open {
    arena: usize,
    g: f64,
    h: f64,
    depth: usize,
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    g: &'a [f64],
    h: &'a [f64],
    sorted: &'a [Vec<usize>],
    params: &'a GbtParams,
}

impl Builder<'_> {
    /// Best split of each open node in one pass per feature over the
    /// presorted row order; `slot[i]` is the arena index of row `i`'s node.
    fn best_splits(&self, open: &[Open], slot: &[u32], arena_len: usize) -> Vec<Option<Candidate>> {
        let lambda = self.params.lambda;
        let mcw = self.params.min_child_weight;
        let mut pos = vec![usize::MAX; arena_len];
        for (t, o) in open.iter().enumerate() {
            pos[o.arena] = t;
        }
        let mut best: Vec<Option<Candidate>> = vec![None; open.len()];
        let mut gl = vec![0.0; open.len()];
        let mut hl = vec![0.0; open.len()];
        let mut last = vec![0.0; open.len()];
        let mut seen = vec![false; open.len()];
        for (f, order) in self.sorted.iter().enumerate() {
            gl.fill(0.0);
            hl.fill(0.0);
            seen.fill(false);
            for &i in order {
                let a = slot[i];
                if a == NONE {
                    continue;
                }
                let t = pos[a as usize];
                if t == usize::MAX {
                    continue;
                }
                let v = self.x[i][f];
                if seen[t] && v > last[t] {
                    let o = &open[t];
                    let (gr, hr) = (o.g - gl[t], o.h - hl[t]);
                    if hl[t] >= mcw && hr >= mcw {
                        let gain = 0.5
                            * (gl[t] * gl[t] / (hl[t] + lambda) + gr * gr / (hr + lambda)
                                - o.g * o.g / (o.h + lambda));
                        if gain > 1e-12 && best[t].is_none_or(|b| gain > b.gain) {
                            best[t] = Some(Candidate {
                                feature: f,
                                threshold: midpoint(last[t], v),
                                gain,
                            });
                        }
                    }
                }
                gl[t] += self.g[i];
                hl[t] += self.h[i];
                last[t] = v;
                seen[t] = true;
            }
        }
        best
    }

    /// Splits `o` in the arena, moves its rows to the children and returns them.
    fn apply(&self, nodes: &mut Vec<Node>, slot: &mut [u32], o: &Open, c: &Candidate) -> [Open; 2] {
        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[o.arena] = Node::Split {
            feature: c.feature,
            threshold: c.threshold,
            left,
            right,
        };
        let mut sums = [(0.0, 0.0); 2];
        for (i, s) in slot.iter_mut().enumerate() {
            if *s as usize == o.arena {
                let side = usize::from(self.x[i][c.feature] > c.threshold);
                *s = [left, right][side] as u32;
                sums[side].0 += self.g[i];
                sums[side].1 += self.h[i];
            }
        }
        [left, right].map(|arena| {
            let side = usize::from(arena == right);
            Open {
                arena,
                g: sums[side].0,
                h: sums[side].1,
                depth: o.depth + 1,
            }
        })
    }

    fn build(&self) -> Tree {
        let n = self.g.len();
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut slot = vec![0u32; n];
        let root = Open {
            arena: 0,
            g: self.g.iter().sum(),
            h: self.h.iter().sum(),
            depth: 0,
        };
        let mut finished: Vec<Open> = Vec::new();
        match self.params.growth {
            Growth::LevelWise => {
                let mut level = vec![root];
                while !level.is_empty() {
                    if level[0].depth >= self.params.max_depth {
                        finished.extend(level);
                        break;
                    }
                    let splits = self.best_splits(&level, &slot, nodes.len());
                    let mut next = Vec::new();
                    for (o, c) in level.iter().zip(splits) {
                        match c {
                            Some(c) => next.extend(self.apply(&mut nodes, &mut slot, o, &c)),
                            None => finished.push(*o),
                        }
                    }
                    level = next;
                }
            }
            Growth::LeafWise => {
                let mut frontier: Vec<(Open, Option<Candidate>)> = Vec::new();
                let first = if self.params.max_depth > 0 {
                    self.best_splits(&[root], &slot, nodes.len())[0]
                } else {
                    None
                };
                frontier.push((root, first));
                let mut leaves = 1;
                while leaves < self.params.max_leaves {
                    let pick = frontier
                        .iter()
                        .enumerate()
                        .filter_map(|(k, (_, c))| c.map(|c| (k, c.gain)))
                        .fold(None, |best: Option<(usize, f64)>, (k, g)| match best {
                            Some((_, bg)) if bg >= g => best,
                            _ => Some((k, g)),
                        });
                    let Some((k, _)) = pick else {
                        break;
                    };
                    let (o, c) = frontier.remove(k);
                    let children = self.apply(&mut nodes, &mut slot, &o, &c.expect("picked"));
                    leaves += 1;
                    let splits = if children[0].depth < self.params.max_depth {
                        self.best_splits(&children, &slot, nodes.len())
                    } else {
                        vec![None, None]
                    };
                    frontier.extend(children.into_iter().zip(splits));
                }
                finished.extend(frontier.into_iter().map(|(o, _)| o));
            }
        }
        for o in finished {
            nodes[o.arena] = Node::Leaf {
                value: -self.params.learning_rate * o.g / (o.h + self.params.lambda),
            };
        }
        Tree { nodes }
    }
}

/// Newton boosting of the logistic loss. Returns the model and the training
/// log loss after each round.
pub fn fit_gbt(x: &[Vec<f64>], y: &[u8], params: &GbtParams) -> (GbtModel, Vec<f64>) {
    let n = y.len();
    let d = x.first().map_or(0, Vec::len);
    let positives = y.iter().filter(|&&c| c == 1).count() as f64;
    let prior = (positives / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let base_margin = (prior / (1.0 - prior)).ln();
    let sorted: Vec<Vec<usize>> = (0..d)
        .map(|f| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| x[a][f].total_cmp(&x[b][f]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut margins = vec![base_margin; n];
    let mut trees = Vec::with_capacity(params.rounds);
    let mut history = Vec::with_capacity(params.rounds);
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    for _ in 0..params.rounds {
        for i in 0..n {
            let p = sigmoid(margins[i]);
            g[i] = p - f64::from(y[i]);
            h[i] = (p * (1.0 - p)).max(1e-16);
        }
        let tree = Builder {
            x,
            g: &g,
            h: &h,
            sorted: &sorted,
            params,
        }
        .build();
        for (m, row) in margins.iter_mut().zip(x) {
            *m += tree.predict(row);
        }
        trees.push(tree);
        history.push(log_loss(&margins, y));
    }
    (GbtModel { base_margin, trees }, history)
}
