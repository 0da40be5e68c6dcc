//! Bagged CART trees (Gini impurity) over one-hot encoded feature rows.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_depth: None,
            min_samples_split: 2,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrainError {
    #[error("training data holds a single class")]
    DegenerateDataset,
    #[error("training data is empty")]
    Empty,
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid parameters: {0}")]
    Params(String),
}

/// How raw string rows become numeric vectors. Numeric columns pass through;
/// categorical columns are one-hot encoded over the values seen in training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<String>,
    pub categorical: Vec<bool>,
    /// Known values per column (empty for numeric columns).
    pub vocab: Vec<Vec<String>>,
}

fn parse_numeric(v: &str) -> Option<f64> {
    match v {
        "true" => Some(1.0),
        "false" => Some(0.0),
        _ => v.parse().ok(),
    }
}

impl Schema {
    pub fn fit(columns: &[&str], categorical: &[usize], rows: &[Vec<String>]) -> Result<Self, TrainError> {
        let mut schema = Schema {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            categorical: (0..columns.len()).map(|i| categorical.contains(&i)).collect(),
            vocab: vec![Vec::new(); columns.len()],
        };
        for row in rows {
            schema.check_width(row)?;
            for (i, v) in row.iter().enumerate() {
                if schema.categorical[i] {
                    if !schema.vocab[i].contains(v) {
                        schema.vocab[i].push(v.clone());
                    }
                } else if parse_numeric(v).is_none() {
                    return Err(TrainError::SchemaMismatch(format!(
                        "column `{}` expects a number, found `{}`",
                        schema.columns[i], v
                    )));
                }
            }
        }
        for v in &mut schema.vocab {
            v.sort();
        }
        Ok(schema)
    }

    fn check_width(&self, row: &[String]) -> Result<(), TrainError> {
        if row.len() != self.columns.len() {
            return Err(TrainError::SchemaMismatch(format!(
                "expected {} values, found {}",
                self.columns.len(),
                row.len()
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        (0..self.columns.len())
            .map(|i| if self.categorical[i] { self.vocab[i].len() } else { 1 })
            .sum()
    }

    /// Unseen categorical values encode as all zeros.
    pub fn encode(&self, row: &[String]) -> Result<Vec<f64>, TrainError> {
        self.check_width(row)?;
        let mut out = Vec::with_capacity(self.width());
        for (i, v) in row.iter().enumerate() {
            if self.categorical[i] {
                out.extend(self.vocab[i].iter().map(|k| if k == v { 1.0 } else { 0.0 }));
            } else {
                out.push(parse_numeric(v).ok_or_else(|| {
                    TrainError::SchemaMismatch(format!(
                        "column `{}` expects a number, found `{}`",
                        self.columns[i], v
                    ))
                })?);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        positive: bool,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A binary decision tree; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> bool {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { positive } => return positive,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<DecisionTree>,
}

impl Forest {
    /// Fraction of trees voting positive.
    pub fn score(&self, x: &[f64]) -> f64 {
        if self.trees.is_empty() {
            return 0.0;
        }
        let votes = self.trees.iter().filter(|t| t.predict(x)).count();
        votes as f64 / self.trees.len() as f64
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.score(x) >= 0.5
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    params: &'a ForestParams,
    mtry: usize,
    nodes: Vec<TreeNode>,
}

impl Grower<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        self.nodes.push(TreeNode::Leaf {
            positive: 2 * pos > idx.len(),
        });
        self.nodes.len() - 1
    }

    // Best (weighted child impurity, feature, threshold) among sampled features.
    fn best_split(&self, idx: &[usize], rng: &mut ChaCha8Rng) -> Option<(usize, f64)> {
        let width = self.x[0].len();
        let mut features: Vec<usize> = (0..width).collect();
        features.shuffle(rng);
        let total_pos = idx.iter().filter(|&&i| self.y[i]).count();
        let n = idx.len();
        let mut best: Option<(f64, usize, f64)> = None;
        for &f in features.iter().take(self.mtry) {
            let mut vals: Vec<(f64, bool)> = idx.iter().map(|&i| (self.x[i][f], self.y[i])).collect();
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 0..n - 1 {
                if vals[k].1 {
                    left_pos += 1;
                }
                if vals[k].0 == vals[k + 1].0 {
                    continue;
                }
                let nl = k + 1;
                let nr = n - nl;
                let imp = (nl as f64 * gini(left_pos, nl) + nr as f64 * gini(total_pos - left_pos, nr)) / n as f64;
                if best.is_none_or(|b| imp < b.0) {
                    best = Some((imp, f, (vals[k].0 + vals[k + 1].0) / 2.0));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }

    fn grow(&mut self, idx: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        let pure = pos == 0 || pos == idx.len();
        let capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || capped || idx.len() < self.params.min_samples_split {
            return self.leaf(idx);
        }
        let Some((feature, threshold)) = self.best_split(idx, rng) else {
            return self.leaf(idx);
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let me = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { positive: false });
        let left = self.grow(&l, depth + 1, rng);
        let right = self.grow(&r, depth + 1, rng);
        self.nodes[me] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }
}

fn grow_tree(x: &[Vec<f64>], y: &[bool], params: &ForestParams, seed: u64) -> DecisionTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = x.len();
    let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let width = x[0].len();
    let mut g = Grower {
        x,
        y,
        params,
        mtry: ((width as f64).sqrt().floor() as usize).max(1),
        nodes: Vec::new(),
    };
    g.grow(&sample, 0, &mut rng);
    DecisionTree { nodes: g.nodes }
}

/// Trains a forest. Per-tree seeds are drawn from `params.seed` up front, so
/// the result does not depend on how many threads run.
pub fn train_forest(x: &[Vec<f64>], y: &[bool], params: &ForestParams) -> Result<Forest, TrainError> {
    if x.is_empty() {
        return Err(TrainError::Empty);
    }
    if x.len() != y.len() {
        return Err(TrainError::SchemaMismatch(format!("{} rows but {} labels", x.len(), y.len())));
    }
    let width = x[0].len();
    if x.iter().any(|r| r.len() != width) {
        return Err(TrainError::SchemaMismatch("rows differ in width".into()));
    }
    if params.trees == 0 {
        return Err(TrainError::Params("at least one tree is needed".into()));
    }
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(TrainError::DegenerateDataset);
    }
    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let seeds: Vec<u64> = (0..params.trees).map(|_| master.gen()).collect();
    let trees = if width == 0 {
        Vec::new()
    } else {
        seeds.par_iter().map(|&s| grow_tree(x, y, params, s)).collect()
    };
    if trees.is_empty() {
        return Err(TrainError::SchemaMismatch("rows have no features".into()));
    }
    Ok(Forest { trees })
}

/// Fold assignment: a seeded shuffle dealt round-robin into `k` folds.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % k;
    }
    fold
}

/// Accuracy of `k`-fold cross-validation.
pub fn cross_validate(x: &[Vec<f64>], y: &[bool], k: usize, params: &ForestParams) -> Result<f64, TrainError> {
    if k < 2 || k > x.len() {
        return Err(TrainError::Params(format!("cannot split {} rows into {} folds", x.len(), k)));
    }
    let fold = fold_assignment(x.len(), k, params.seed);
    let mut correct = 0;
    for f in 0..k {
        let (train, test): (Vec<usize>, Vec<usize>) = (0..x.len()).partition(|&i| fold[i] != f);
        let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<bool> = train.iter().map(|&i| y[i]).collect();
        let forest = train_forest(&tx, &ty, params)?;
        correct += test.iter().filter(|&&i| forest.predict(&x[i]) == y[i]).count();
    }
    Ok(correct as f64 / x.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump(feature: usize, threshold: f64, left: bool, right: bool) -> DecisionTree {
        DecisionTree {
            nodes: vec![
                TreeNode::Split {
                    feature,
                    threshold,
                    left: 1,
                    right: 2,
                },
                TreeNode::Leaf { positive: left },
                TreeNode::Leaf { positive: right },
            ],
        }
    }

    #[test]
    fn hand_built_votes() {
        // x = [1.0, 0.0]: tree 1 goes right (positive), tree 2 left (positive), tree 3 right (negative).
        let f = Forest {
            trees: vec![stump(0, 0.5, false, true), stump(1, 0.5, true, false), stump(0, 0.5, true, false)],
        };
        assert_eq!(f.score(&[1.0, 0.0]), 2.0 / 3.0);
        let all = Forest {
            trees: vec![stump(0, 0.5, true, true); 4],
        };
        assert_eq!(all.score(&[0.0, 0.0]), 1.0);
        let none = Forest {
            trees: vec![stump(0, 0.5, false, false); 4],
        };
        assert_eq!(none.score(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn degenerate() {
        let x = vec![vec![0.0], vec![1.0]];
        assert_eq!(train_forest(&x, &[true, true], &ForestParams::default()), Err(TrainError::DegenerateDataset));
        assert_eq!(train_forest(&[], &[], &ForestParams::default()), Err(TrainError::Empty));
    }

    #[test]
    fn learns_threshold() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<bool> = (0..40).map(|i| i >= 20).collect();
        let p = ForestParams {
            trees: 15,
            ..Default::default()
        };
        let f = train_forest(&x, &y, &p).unwrap();
        assert!(f.predict(&[35.0, 1.0]));
        assert!(!f.predict(&[3.0, 1.0]));
        assert_eq!(f, train_forest(&x, &y, &p).unwrap());
    }

    #[test]
    fn schema_encoding() {
        let rows = vec![
            vec!["true".to_string(), "b".to_string(), "3".to_string()],
            vec!["false".to_string(), "a".to_string(), "1".to_string()],
        ];
        let s = Schema::fit(&["v", "c", "n"], &[1], &rows).unwrap();
        assert_eq!(s.width(), 4);
        assert_eq!(s.encode(&rows[0]).unwrap(), [1.0, 0.0, 1.0, 3.0]);
        let unseen = vec!["true".to_string(), "z".to_string(), "2".to_string()];
        assert_eq!(s.encode(&unseen).unwrap(), [1.0, 0.0, 0.0, 2.0]);
        assert!(s.encode(&rows[0][..2]).is_err());
        let bad = vec!["x".to_string(), "a".to_string(), "1".to_string()];
        assert!(s.encode(&bad).is_err());
    }

    #[test]
    fn folds_are_balanced() {
        let f = fold_assignment(23, 10, 7);
        for k in 0..10 {
            let c = f.iter().filter(|&&x| x == k).count();
            assert!(c == 2 || c == 3);
        }
    }
}
