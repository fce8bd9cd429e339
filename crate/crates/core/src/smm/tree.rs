//! Axis-aligned Gini decision tree.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class counts in `[negative, neutral, positive]` order.
    Leaf { counts: [u32; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

/// Gini impurity of a class-count vector.
pub fn gini(counts: &[f64; 3]) -> f64 {
    let n: f64 = counts.iter().sum();
    if n <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub features_per_split: usize,
}

struct Grower<'a, R: Rng> {
    rows: &'a [&'a [f64]],
    labels: &'a [u8],
    params: GrowParams,
    rng: &'a mut R,
    nodes: Vec<Node>,
    feature_pool: Vec<usize>,
}

struct Best {
    feature: usize,
    threshold: f64,
    impurity: f64,
    split_at: usize,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t < b && t >= a {
        t
    } else {
        a
    }
}

impl<R: Rng> Grower<'_, R> {
    fn counts(&self, idx: &[usize]) -> [f64; 3] {
        let mut c = [0.0; 3];
        for &i in idx {
            c[usize::from(self.labels[i])] += 1.0;
        }
        c
    }

    fn leaf(&mut self, counts: [f64; 3]) -> usize {
        self.nodes.push(Node::Leaf {
            counts: counts.map(|c| c as u32),
        });
        self.nodes.len() - 1
    }

    fn best_split(&mut self, idx: &mut [usize]) -> Option<Best> {
        let n = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        self.feature_pool.shuffle(self.rng);
        let mut best: Option<Best> = None;
        let mut visited = 0;
        let mut order: Vec<(f64, u8)> = Vec::with_capacity(n);
        for fi in 0..self.feature_pool.len() {
            if visited >= self.params.features_per_split {
                break;
            }
            let f = self.feature_pool[fi];
            order.clear();
            order.extend(idx.iter().map(|&i| (self.rows[i][f], self.labels[i])));
            let (lo, hi) = order
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (v, _)| {
                    (lo.min(*v), hi.max(*v))
                });
            if lo >= hi {
                continue;
            }
            visited += 1;
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut total = [0.0; 3];
            for (_, y) in &order {
                total[usize::from(*y)] += 1.0;
            }
            let mut left = [0.0; 3];
            for i in 0..n - 1 {
                left[usize::from(order[i].1)] += 1.0;
                let nl = i + 1;
                if order[i].0 >= order[i + 1].0 || nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
                let impurity =
                    (nl as f64 * gini(&left) + (n - nl) as f64 * gini(&right)) / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    best = Some(Best {
                        feature: f,
                        threshold: midpoint(order[i].0, order[i + 1].0),
                        impurity,
                        split_at: nl,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let parent = gini(&counts);
        if depth >= self.params.max_depth
            || parent <= 0.0
            || idx.len() < 2 * self.params.min_leaf.max(1)
        {
            return self.leaf(counts);
        }
        let Some(best) = self.best_split(idx) else {
            return self.leaf(counts);
        };
        if best.impurity > parent {
            return self.leaf(counts);
        }
        let (f, t) = (best.feature, best.threshold);
        let rows = self.rows;
        idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
        let split = idx.partition_point(|&i| rows[i][f] <= t);
        debug_assert_eq!(split, best.split_at);
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { counts: [0; 3] });
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = Node::Split {
            feature: f,
            threshold: t,
            left,
            right,
        };
        me
    }
}

impl DecisionTree {
    /// Grows a tree over `sample` (indices into `rows`, repeats allowed).
    pub(crate) fn fit<R: Rng>(
        rows: &[&[f64]],
        labels: &[u8],
        mut sample: Vec<usize>,
        params: GrowParams,
        rng: &mut R,
    ) -> Self {
        let n_features = rows.first().map_or(0, |r| r.len());
        let mut g = Grower {
            rows,
            labels,
            params,
            rng,
            nodes: Vec::new(),
            feature_pool: (0..n_features).collect(),
        };
        g.grow(&mut sample, 0);
        DecisionTree { nodes: g.nodes }
    }

    pub fn leaf_counts(&self, x: &[f64]) -> [u32; 3] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            walk(&self.nodes, 0)
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &[u32; 3]> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { counts } => Some(counts),
            Node::Split { .. } => None,
        })
    }
}
