//! CART regression trees.
//!
//! Each feature is sorted once per fit; every node owns a contiguous
//! segment of each sorted array and children are produced by a stable
//! partition, so a level costs `O(n * p)`.
//!
//! Candidate thresholds are midpoints between consecutive distinct values.
//! The split maximising the SSE reduction wins; ties keep the lowest
//! feature index, then the lowest threshold.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DesignMatrix;
use crate::scalar::Scalar;

use super::params::HyperParams;

#[derive(Debug, Clone, PartialEq)]
pub enum Node<T> {
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
        /// Mean of the node's training targets.
        value: T,
        n_samples: usize,
        /// SSE of the node minus the SSE of its two children.
        impurity_decrease: T,
    },
    Leaf {
        value: T,
        n_samples: usize,
    },
}

impl<T: Scalar> Node<T> {
    pub fn value(&self) -> T {
        match *self {
            Node::Split { value, .. } | Node::Leaf { value, .. } => value,
        }
    }

    pub fn n_samples(&self) -> usize {
        match *self {
            Node::Split { n_samples, .. } | Node::Leaf { n_samples, .. } => n_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree<T> {
    nodes: Vec<Node<T>>,
    n_features: usize,
}

/// Growth limits for a single tree.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeConfig<T> {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Features drawn per split; `>= n_features` means all.
    pub features_per_split: usize,
    /// Leaf value `sum / (count + lambda)` instead of the mean.
    pub leaf_lambda: Option<T>,
}

impl<T: Scalar> TreeConfig<T> {
    pub fn from_params(params: &HyperParams, n_features: usize) -> Self {
        TreeConfig {
            max_depth: params.max_depth,
            min_samples_split: params.min_samples_split,
            min_samples_leaf: params.min_samples_leaf,
            features_per_split: params.max_features.count(n_features),
            leaf_lambda: None,
        }
    }
}

/// Mean that is exact when all values are equal.
pub(crate) fn mean_exact<T: Scalar>(values: impl Iterator<Item = T> + Clone) -> (T, usize, bool) {
    let mut it = values.clone();
    let Some(first) = it.next() else {
        return (T::zero(), 0, true);
    };
    let mut sum = first;
    let mut n = 1;
    let mut all_equal = true;
    for v in it {
        sum = sum + v;
        n += 1;
        all_equal &= v == first;
    }
    if all_equal {
        (first, n, true)
    } else {
        (sum / <T as Scalar>::from_usize(n), n, false)
    }
}

struct Builder<'a, T> {
    columns: &'a [Vec<T>],
    targets: &'a [T],
    sample: &'a [usize],
    sorted: Vec<Vec<u32>>,
    natural: Vec<u32>,
    goes_left: Vec<bool>,
    scratch: Vec<u32>,
    cfg: TreeConfig<T>,
    rng: Option<&'a mut ChaCha8Rng>,
    pool: Vec<usize>,
    nodes: Vec<Node<T>>,
}

struct Candidate<T> {
    feature: usize,
    threshold: T,
    n_left: usize,
    gain: T,
}

impl<T: Scalar> Builder<'_, T> {
    #[inline]
    fn x(&self, feature: usize, pos: u32) -> T {
        self.columns[feature][self.sample[pos as usize]]
    }

    #[inline]
    fn y(&self, pos: u32) -> T {
        self.targets[self.sample[pos as usize]]
    }

    fn chosen_features(&mut self) -> Vec<usize> {
        let p = self.columns.len();
        let k = self.cfg.features_per_split;
        match self.rng.as_deref_mut() {
            Some(rng) if k < p => {
                for i in 0..k {
                    let j = rng.random_range(i..p);
                    self.pool.swap(i, j);
                }
                let mut chosen = self.pool[..k].to_vec();
                chosen.sort_unstable();
                chosen
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, start: usize, end: usize, mean: T) -> Option<Candidate<T>> {
        let n = end - start;
        let min_leaf = self.cfg.min_samples_leaf;
        let nt = <T as Scalar>::from_usize(n);
        let total = self.natural[start..end]
            .iter()
            .fold(T::zero(), |a, &p| a + (self.y(p) - mean));
        let base = total * total / nt;

        let mut best: Option<Candidate<T>> = None;
        for f in self.chosen_features() {
            let seg = &self.sorted[f][start..end];
            let mut left = T::zero();
            for i in 0..n - 1 {
                left = left + (self.y(seg[i]) - mean);
                let n_left = i + 1;
                if n_left < min_leaf {
                    continue;
                }
                if n - n_left < min_leaf {
                    break;
                }
                let a = self.x(f, seg[i]);
                let b = self.x(f, seg[i + 1]);
                if a == b {
                    continue;
                }
                let right = total - left;
                let gain = left * left / <T as Scalar>::from_usize(n_left)
                    + right * right / <T as Scalar>::from_usize(n - n_left)
                    - base;
                if best.as_ref().is_none_or(|c| gain > c.gain) {
                    let two = T::one() + T::one();
                    let mut threshold = a / two + b / two;
                    if !(threshold >= a && threshold < b) {
                        threshold = a;
                    }
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        n_left,
                        gain,
                    });
                }
            }
        }
        best.filter(|c| c.gain > T::zero())
    }

    fn partition(&mut self, start: usize, end: usize, split: &Candidate<T>) {
        for &p in &self.sorted[split.feature][start..end] {
            self.goes_left[p as usize] = false;
        }
        for &p in &self.sorted[split.feature][start..start + split.n_left] {
            self.goes_left[p as usize] = true;
        }
        let goes_left = &self.goes_left;
        let scratch = &mut self.scratch;
        let mut stable = |seg: &mut [u32]| {
            scratch.clear();
            let mut w = 0;
            for i in 0..seg.len() {
                let p = seg[i];
                if goes_left[p as usize] {
                    seg[w] = p;
                    w += 1;
                } else {
                    scratch.push(p);
                }
            }
            seg[w..].copy_from_slice(scratch);
        };
        for arr in self.sorted.iter_mut() {
            stable(&mut arr[start..end]);
        }
        stable(&mut self.natural[start..end]);
    }

    fn build(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let (mean, n, all_equal) = mean_exact(self.natural[start..end].iter().map(|&p| self.y(p)));
        let sse = if all_equal {
            T::zero()
        } else {
            self.natural[start..end]
                .iter()
                .fold(T::zero(), |a, &p| a + (self.y(p) - mean) * (self.y(p) - mean))
        };
        let value = match self.cfg.leaf_lambda {
            Some(lambda) if lambda > T::zero() => {
                let sum = self.natural[start..end].iter().fold(T::zero(), |a, &p| a + self.y(p));
                sum / (<T as Scalar>::from_usize(n) + lambda)
            }
            _ => mean,
        };

        let depth_ok = self.cfg.max_depth.is_none_or(|d| depth < d);
        let can_split = depth_ok
            && n >= self.cfg.min_samples_split
            && n >= 2 * self.cfg.min_samples_leaf
            && sse > T::zero();
        let split = if can_split {
            self.best_split(start, end, mean)
        } else {
            None
        };

        let Some(split) = split else {
            self.nodes.push(Node::Leaf {
                value,
                n_samples: n,
            });
            return self.nodes.len() - 1;
        };

        self.partition(start, end, &split);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value,
            n_samples: n,
        });
        let mid = start + split.n_left;
        let left = self.build(start, mid, depth + 1);
        let right = self.build(mid, end, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            value,
            n_samples: n,
            impurity_decrease: split.gain,
        };
        id
    }
}

impl<T: Scalar> RegressionTree<T> {
    /// Grows a tree on the rows listed in `sample` (repeats allowed, kept
    /// in ascending order so leaf means are summed in row order).
    pub(crate) fn grow(
        columns: &[Vec<T>],
        targets: &[T],
        sample: &[usize],
        cfg: TreeConfig<T>,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Empty("tree needs at least one row"));
        }
        if sample.len() > u32::MAX as usize {
            return Err(Error::invalid("too many rows for one tree"));
        }
        let m = sample.len();
        let sorted = columns
            .iter()
            .map(|col| {
                let mut order: Vec<u32> = (0..m as u32).collect();
                order.sort_by(|&a, &b| {
                    col[sample[a as usize]]
                        .partial_cmp(&col[sample[b as usize]])
                        .unwrap_or(std::cmp::Ordering::Equal)
                });
                order
            })
            .collect();
        let mut b = Builder {
            columns,
            targets,
            sample,
            sorted,
            natural: (0..m as u32).collect(),
            goes_left: vec![false; m],
            scratch: Vec::with_capacity(m),
            cfg,
            rng,
            pool: (0..columns.len()).collect(),
            nodes: Vec::new(),
        };
        b.build(0, m, 0);
        Ok(RegressionTree {
            nodes: b.nodes,
            n_features: columns.len(),
        })
    }

    pub fn from_nodes(nodes: Vec<Node<T>>, n_features: usize) -> Result<Self> {
        let tree = RegressionTree { nodes, n_features };
        tree.validate()?;
        Ok(tree)
    }

    fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::NotFitted);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Split {
                feature,
                left,
                right,
                ..
            } = *node
            {
                if feature >= self.n_features
                    || left <= i
                    || right <= i
                    || left >= self.nodes.len()
                    || right >= self.nodes.len()
                {
                    return Err(Error::invalid(format!("malformed tree node {i}")));
                }
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Index of the leaf reached by `row`.
    pub fn leaf_index(&self, row: &[T]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_row(&self, row: &[T]) -> T {
        self.nodes[self.leaf_index(row)].value()
    }

    pub fn predict(&self, x: &DesignMatrix<T>) -> Result<Vec<T>> {
        if x.n_cols() != self.n_features {
            return Err(Error::Shape(format!(
                "tree expects {} features, got {}",
                self.n_features,
                x.n_cols()
            )));
        }
        Ok((0..x.n_rows()).map(|i| self.predict_row(x.row(i))).collect())
    }

    /// Adds each split's SSE decrease to `acc[feature]`.
    pub fn accumulate_importance(&self, acc: &mut [T]) {
        for node in &self.nodes {
            if let Node::Split {
                feature,
                impurity_decrease,
                ..
            } = *node
            {
                acc[feature] = acc[feature] + impurity_decrease.max(T::zero());
            }
        }
    }
}

/// Fits one CART tree on all rows. Per-split feature subsampling only
/// happens when a generator is supplied.
pub fn fit_tree<T: Scalar>(
    x: &DesignMatrix<T>,
    y: &[T],
    params: &HyperParams,
    feature_subset_rng: Option<&mut ChaCha8Rng>,
) -> Result<RegressionTree<T>> {
    params.validate()?;
    if x.n_rows() != y.len() {
        return Err(Error::Shape(format!("{} rows vs {} targets", x.n_rows(), y.len())));
    }
    if x.n_rows() == 0 {
        return Err(Error::Empty("tree needs at least one row"));
    }
    let sample: Vec<usize> = (0..x.n_rows()).collect();
    let cfg = TreeConfig::from_params(params, x.n_cols());
    RegressionTree::grow(&x.columns(), y, &sample, cfg, feature_subset_rng)
}

/// Flat column layout used in model files. `feature` is `-1` for leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FlatTree<T> {
    pub n_features: usize,
    pub feature: Vec<i64>,
    pub threshold: Vec<T>,
    pub left: Vec<i64>,
    pub right: Vec<i64>,
    pub value: Vec<T>,
    pub n_samples: Vec<usize>,
    pub impurity_decrease: Vec<T>,
}

impl<T: Scalar> From<&RegressionTree<T>> for FlatTree<T> {
    fn from(tree: &RegressionTree<T>) -> Self {
        let n = tree.nodes.len();
        let mut flat = FlatTree {
            n_features: tree.n_features,
            feature: Vec::with_capacity(n),
            threshold: Vec::with_capacity(n),
            left: Vec::with_capacity(n),
            right: Vec::with_capacity(n),
            value: Vec::with_capacity(n),
            n_samples: Vec::with_capacity(n),
            impurity_decrease: Vec::with_capacity(n),
        };
        for node in &tree.nodes {
            match *node {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    value,
                    n_samples,
                    impurity_decrease,
                } => {
                    flat.feature.push(feature as i64);
                    flat.threshold.push(threshold);
                    flat.left.push(left as i64);
                    flat.right.push(right as i64);
                    flat.value.push(value);
                    flat.n_samples.push(n_samples);
                    flat.impurity_decrease.push(impurity_decrease);
                }
                Node::Leaf { value, n_samples } => {
                    flat.feature.push(-1);
                    flat.threshold.push(T::zero());
                    flat.left.push(-1);
                    flat.right.push(-1);
                    flat.value.push(value);
                    flat.n_samples.push(n_samples);
                    flat.impurity_decrease.push(T::zero());
                }
            }
        }
        flat
    }
}

impl<T: Scalar> TryFrom<FlatTree<T>> for RegressionTree<T> {
    type Error = Error;

    fn try_from(flat: FlatTree<T>) -> Result<Self> {
        let n = flat.feature.len();
        let lens = [
            flat.threshold.len(),
            flat.left.len(),
            flat.right.len(),
            flat.value.len(),
            flat.n_samples.len(),
            flat.impurity_decrease.len(),
        ];
        if lens.iter().any(|&l| l != n) {
            return Err(Error::invalid("tree arrays differ in length"));
        }
        let nodes = (0..n)
            .map(|i| {
                if flat.feature[i] < 0 {
                    Node::Leaf {
                        value: flat.value[i],
                        n_samples: flat.n_samples[i],
                    }
                } else {
                    Node::Split {
                        feature: flat.feature[i] as usize,
                        threshold: flat.threshold[i],
                        left: flat.left[i].max(0) as usize,
                        right: flat.right[i].max(0) as usize,
                        value: flat.value[i],
                        n_samples: flat.n_samples[i],
                        impurity_decrease: flat.impurity_decrease[i],
                    }
                }
            })
            .collect();
        RegressionTree::from_nodes(nodes, flat.n_features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn params(depth: Option<usize>, leaf: usize) -> HyperParams {
        HyperParams {
            max_depth: depth,
            min_samples_leaf: leaf,
            ..HyperParams::forest_default()
        }
    }

    fn col(v: &[f64]) -> DesignMatrix<f64> {
        DesignMatrix::from_columns(&[v.to_vec()]).unwrap()
    }

    #[test]
    fn constant_target_is_single_leaf() {
        let x = col(&[1.0, 2.0, 3.0]);
        let t = fit_tree(&x, &[0.1, 0.1, 0.1], &params(None, 1), None).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&x).unwrap(), vec![0.1; 3]);
    }

    #[test]
    fn step_function_depth_one() {
        let x = col(&[0.0, 1.0, 2.0, 3.0]);
        let y = [0.0, 0.0, 10.0, 10.0];
        let t = fit_tree(&x, &y, &params(Some(1), 1), None).unwrap();
        match t.nodes()[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert_eq!(threshold, 1.5);
            }
            _ => panic!("expected a split"),
        }
        let pred = t.predict(&x).unwrap();
        assert_eq!(pred, y.to_vec());
    }

    #[test]
    fn min_samples_leaf_blocks_split() {
        let x = col(&[0.0, 1.0, 2.0, 3.0]);
        let t = fit_tree(&x, &[0.0, 0.0, 10.0, 10.0], &params(None, 3), None).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.predict(&x).unwrap(), vec![5.0; 4]);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let x = DesignMatrix::<f64>::new(vec![], 0, vec!["a".into()]).unwrap();
        assert!(fit_tree(&x, &[], &params(None, 1), None).is_err());
        let x = col(&[1.0, 2.0]);
        assert!(fit_tree(&x, &[1.0], &params(None, 1), None).is_err());
        let t = fit_tree(&x, &[1.0, 2.0], &params(None, 1), None).unwrap();
        let wide = DesignMatrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        assert!(t.predict(&wide).is_err());
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // both columns induce the same partition
        let x = DesignMatrix::from_columns(&[vec![0.0, 1.0, 2.0, 3.0], vec![5.0, 6.0, 7.0, 8.0]]).unwrap();
        let t = fit_tree(&x, &[1.0, 1.0, 4.0, 4.0], &params(Some(1), 1), None).unwrap();
        assert!(matches!(t.nodes()[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_and_leaf_limits_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let zs: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = xs.iter().zip(&zs).map(|(a, b)| (a * 7.0).sin() + b).collect();
        let x = DesignMatrix::from_columns(&[xs, zs]).unwrap();
        for (depth, leaf) in [(Some(3), 1), (Some(6), 5), (None, 10)] {
            let t = fit_tree(&x, &y, &params(depth, leaf), None).unwrap();
            if let Some(d) = depth {
                assert!(t.depth() <= d);
            }
            for n in t.nodes() {
                if let Node::Leaf { n_samples, .. } = n {
                    assert!(*n_samples >= leaf);
                }
            }
        }
    }

    #[test]
    fn leaves_hold_exact_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let xs: Vec<f64> = (0..120).map(|_| rng.random_range(0..15) as f64).collect();
        let y: Vec<f64> = (0..120).map(|_| rng.random::<f64>() * 10.0).collect();
        let x = col(&xs);
        let t = fit_tree(&x, &y, &params(Some(4), 2), None).unwrap();
        let mut members: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
        for i in 0..120 {
            members.entry(t.leaf_index(x.row(i))).or_default().push(y[i]);
        }
        for (leaf, vals) in members {
            let (mean, _, _) = mean_exact(vals.iter().copied());
            assert_eq!(t.nodes()[leaf].value(), mean);
        }
    }

    #[test]
    fn flat_round_trip() {
        let x = col(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        let t = fit_tree(&x, &[1.0, 3.0, 2.0, 8.0, 9.0], &params(None, 1), None).unwrap();
        let flat = FlatTree::from(&t);
        let json = serde_json::to_string(&flat).unwrap();
        let back = RegressionTree::try_from(serde_json::from_str::<FlatTree<f64>>(&json).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn single_precision_tree() {
        let x = DesignMatrix::from_columns(&[vec![0.0_f32, 1.0, 2.0, 3.0]]).unwrap();
        let t = fit_tree(&x, &[0.0_f32, 0.0, 10.0, 10.0], &params(Some(1), 1), None).unwrap();
        assert_eq!(t.predict(&x).unwrap(), vec![0.0, 0.0, 10.0, 10.0]);
    }
}
