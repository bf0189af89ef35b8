//! Entropy-driven classification tree over binary features.

use serde::{Deserialize, Serialize};

use super::{Classifier, Dataset};

pub const DEFAULT_MIN_OBS_PER_NODE: usize = 17;

/// Information gains at or below this are treated as zero.
const MIN_GAIN: f64 = 1e-12;

/// Shannon entropy in bits of a class distribution; `0 log 0 = 0`.
pub fn entropy(fractions: &[f64]) -> f64 {
    -fractions
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Two-class entropy from label counts.
pub fn entropy_of_counts(zeros: usize, ones: usize) -> f64 {
    let n = (zeros + ones) as f64;
    if n == 0.0 {
        return 0.0;
    }
    entropy(&[zeros as f64 / n, ones as f64 / n])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Node {
    Leaf {
        label: u8,
    },
    Split {
        feature: usize,
        /// Subtree for `S(feature) = 0`.
        zero: Box<Node>,
        /// Subtree for `S(feature) = 1`.
        one: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtModel {
    pub root: Node,
    pub min_obs_per_node: usize,
    pub n_features: usize,
}

struct Builder<'a> {
    data: &'a Dataset,
    min_obs: usize,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let ones = idx.iter().filter(|&&i| self.data.labels()[i] == 1).count();
        [idx.len() - ones, ones]
    }

    fn build(&self, idx: &[usize]) -> Node {
        let [zeros, ones] = self.counts(idx);
        let leaf = Node::Leaf {
            label: u8::from(ones > zeros),
        };
        if idx.len() < self.min_obs || zeros == 0 || ones == 0 {
            return leaf;
        }
        let parent = entropy_of_counts(zeros, ones);
        let n = idx.len() as f64;

        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.data.n_features() {
            // [branch][class]
            let mut c = [[0usize; 2]; 2];
            for &i in idx {
                c[self.data.row(i)[j] as usize][self.data.labels()[i] as usize] += 1;
            }
            let n0 = (c[0][0] + c[0][1]) as f64;
            let n1 = (c[1][0] + c[1][1]) as f64;
            if n0 == 0.0 || n1 == 0.0 {
                continue;
            }
            let child = (n0 * entropy_of_counts(c[0][0], c[0][1])
                + n1 * entropy_of_counts(c[1][0], c[1][1]))
                / n;
            let gain = parent - child;
            if gain > MIN_GAIN && best.is_none_or(|(_, g)| gain > g) {
                best = Some((j, gain));
            }
        }
        let Some((feature, _)) = best else {
            return leaf;
        };
        let (zero_idx, one_idx): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.data.row(i)[feature] == 0);
        Node::Split {
            feature,
            zero: Box::new(self.build(&zero_idx)),
            one: Box::new(self.build(&one_idx)),
        }
    }
}

impl DtModel {
    /// Greedy top-down induction maximising information gain. A node becomes
    /// a leaf when it holds fewer than `min_obs_per_node` rows, is pure, or has
    /// no split with positive gain. Leaves take the majority label, ties to 0.
    pub fn fit(train: &Dataset, min_obs_per_node: usize) -> DtModel {
        let min_obs = min_obs_per_node.max(1);
        let idx: Vec<usize> = (0..train.len()).collect();
        let root = Builder {
            data: train,
            min_obs,
        }
        .build(&idx);
        DtModel {
            root,
            min_obs_per_node: min_obs,
            n_features: train.n_features(),
        }
    }

    pub fn predict(&self, rows: &[u8]) -> Vec<u8> {
        rows.chunks_exact(self.n_features)
            .map(|r| self.predict_one(r))
            .collect()
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { zero, one, .. } => 1 + depth(zero).max(depth(one)),
            }
        }
        depth(&self.root)
    }

    /// Training rows reaching each leaf, in depth-first order.
    pub fn leaf_partitions(&self, data: &Dataset) -> Vec<Vec<usize>> {
        fn walk(node: &Node, data: &Dataset, idx: Vec<usize>, out: &mut Vec<Vec<usize>>) {
            match node {
                Node::Leaf { .. } => out.push(idx),
                Node::Split { feature, zero, one } => {
                    let (z, o): (Vec<usize>, Vec<usize>) =
                        idx.into_iter().partition(|&i| data.row(i)[*feature] == 0);
                    walk(zero, data, z, out);
                    walk(one, data, o, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, data, (0..data.len()).collect(), &mut out);
        out
    }
}

impl Classifier for DtModel {
    fn predict_one(&self, features: &[u8]) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { label } => return *label,
                Node::Split { feature, zero, one } => {
                    node = if features[*feature] == 0 { zero } else { one };
                }
            }
        }
    }
}
