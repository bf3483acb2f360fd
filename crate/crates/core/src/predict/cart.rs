//! Regression trees grown greedily by variance reduction.

use std::collections::BTreeSet;

use super::{check_row_width, FitError, PredictError, Predictor};
use crate::tabular::{ColumnData, Dataset, FeatureSpec, Row, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum SplitRule {
    /// `x <= threshold` goes left.
    Threshold(f64),
    /// Membership in the level set goes left; everything else goes right.
    Levels(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
        count: usize,
    },
    Split {
        feature: usize,
        rule: SplitRule,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn collect_features(&self, out: &mut BTreeSet<usize>) {
        if let Node::Split {
            feature,
            left,
            right,
            ..
        } = self
        {
            out.insert(*feature);
            left.collect_features(out);
            right.collect_features(out);
        }
    }

    pub(crate) fn leaves(&self) -> Vec<(f64, usize)> {
        match self {
            Node::Leaf { value, count } => vec![(*value, *count)],
            Node::Split { left, right, .. } => {
                let mut v = left.leaves();
                v.extend(right.leaves());
                v
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CartModel {
    pub(crate) schema: Vec<FeatureSpec>,
    pub root: Node,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl CartModel {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    /// Sorted indices of the features that appear in some split.
    pub fn used_features(&self) -> Vec<usize> {
        let mut set = BTreeSet::new();
        self.root.collect_features(&mut set);
        set.into_iter().collect()
    }

    pub fn predict_row(&self, row: &[Value]) -> Result<f64, PredictError> {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value, .. } => return Ok(*value),
                Node::Split {
                    feature,
                    rule,
                    left,
                    right,
                } => {
                    let go_left = match (rule, &row[*feature]) {
                        (SplitRule::Threshold(t), Value::Num(x)) => *x <= *t,
                        (SplitRule::Levels(set), Value::Cat(s)) => {
                            set.iter().any(|l| l.as_str() == &**s)
                        }
                        (SplitRule::Threshold(_), _) => {
                            return Err(PredictError::WrongValueType {
                                feature: self.schema[*feature].name.clone(),
                                expected: "numeric",
                            })
                        }
                        (SplitRule::Levels(_), _) => {
                            return Err(PredictError::WrongValueType {
                                feature: self.schema[*feature].name.clone(),
                                expected: "categorical",
                            })
                        }
                    };
                    node = if go_left { left } else { right };
                }
            }
        }
    }
}

impl Predictor for CartModel {
    fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        check_row_width(&self.schema, rows)?;
        rows.iter().map(|r| self.predict_row(r)).collect()
    }
}

struct Candidate {
    gain: f64,
    feature: usize,
    rule: SplitRule,
    left: Vec<usize>,
    right: Vec<usize>,
}

struct Grower<'a> {
    data: &'a Dataset,
    y: &'a [f64],
    max_depth: usize,
    min_leaf: usize,
}

impl Grower<'_> {
    fn grow(&self, rows: Vec<usize>, depth: usize) -> Node {
        let count = rows.len();
        let mean = rows.iter().map(|&i| self.y[i]).sum::<f64>() / count as f64;
        let sse: f64 = rows.iter().map(|&i| (self.y[i] - mean).powi(2)).sum();
        let leaf = Node::Leaf { value: mean, count };
        if depth >= self.max_depth || count < 2 * self.min_leaf || sse <= 0.0 {
            return leaf;
        }
        let mut best: Option<Candidate> = None;
        for j in 0..self.data.n_features() {
            let cand = match &self.data.column(j).data {
                ColumnData::Numeric(x) => self.best_numeric(j, x, &rows, mean),
                ColumnData::Categorical { levels, codes } => {
                    self.best_categorical(j, levels, codes, &rows, mean)
                }
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        match best {
            // ignore gains that are pure rounding noise
            Some(c) if c.gain > 1e-12 * sse => Node::Split {
                feature: c.feature,
                rule: c.rule,
                left: Box::new(self.grow(c.left, depth + 1)),
                right: Box::new(self.grow(c.right, depth + 1)),
            },
            _ => leaf,
        }
    }

    /// Scans ordered positions; `keys` are sorted, `ys` centred targets.
    /// Returns (gain, number of items going left).
    fn scan<K: PartialEq>(&self, keys: &[K], ys: &[f64]) -> Option<(f64, usize)> {
        let n = ys.len();
        let total: f64 = ys.iter().sum();
        let base = total * total / n as f64;
        let mut left_sum = 0.0;
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n - 1 {
            left_sum += ys[i];
            let nl = i + 1;
            let nr = n - nl;
            if keys[i] == keys[i + 1] || nl < self.min_leaf || nr < self.min_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - base;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, nl));
            }
        }
        best
    }

    fn best_numeric(&self, j: usize, x: &[f64], rows: &[usize], mean: f64) -> Option<Candidate> {
        let mut order = rows.to_vec();
        order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
        let keys: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let ys: Vec<f64> = order.iter().map(|&i| self.y[i] - mean).collect();
        let (gain, nl) = self.scan(&keys, &ys)?;
        let (lo, hi) = (keys[nl - 1], keys[nl]);
        let mut threshold = lo + (hi - lo) / 2.0;
        if threshold >= hi {
            threshold = lo;
        }
        Some(Candidate {
            gain,
            feature: j,
            rule: SplitRule::Threshold(threshold),
            left: order[..nl].to_vec(),
            right: order[nl..].to_vec(),
        })
    }

    fn best_categorical(
        &self,
        j: usize,
        levels: &[std::sync::Arc<str>],
        codes: &[u32],
        rows: &[usize],
        mean: f64,
    ) -> Option<Candidate> {
        let mut sums = vec![0.0; levels.len()];
        let mut counts = vec![0usize; levels.len()];
        for &i in rows {
            sums[codes[i] as usize] += self.y[i] - mean;
            counts[codes[i] as usize] += 1;
        }
        // present levels ordered by mean target, ties by level code
        let mut present: Vec<usize> = (0..levels.len()).filter(|&l| counts[l] > 0).collect();
        present.sort_by(|&a, &b| {
            (sums[a] / counts[a] as f64)
                .total_cmp(&(sums[b] / counts[b] as f64))
                .then(a.cmp(&b))
        });
        let rank: Vec<usize> = {
            let mut r = vec![usize::MAX; levels.len()];
            for (k, &l) in present.iter().enumerate() {
                r[l] = k;
            }
            r
        };
        let mut order = rows.to_vec();
        order.sort_by_key(|&i| (rank[codes[i] as usize], i));
        let keys: Vec<usize> = order.iter().map(|&i| rank[codes[i] as usize]).collect();
        let ys: Vec<f64> = order.iter().map(|&i| self.y[i] - mean).collect();
        let (gain, nl) = self.scan(&keys, &ys)?;
        let cut = keys[nl - 1];
        let left_levels = present[..=cut]
            .iter()
            .map(|&l| levels[l].to_string())
            .collect();
        Some(Candidate {
            gain,
            feature: j,
            rule: SplitRule::Levels(left_levels),
            left: order[..nl].to_vec(),
            right: order[nl..].to_vec(),
        })
    }
}

/// Grows a regression tree. Splits maximise the reduction in squared error;
/// growth stops at `max_depth`, when a child would hold fewer than
/// `min_leaf` rows, or when the node target is constant.
pub fn fit_cart(dataset: &Dataset, max_depth: usize, min_leaf: usize) -> Result<CartModel, FitError> {
    if max_depth == 0 || min_leaf == 0 {
        return Err(FitError::InvalidParameter(format!(
            "max_depth = {max_depth}, min_leaf = {min_leaf}; both must be positive"
        )));
    }
    let y = dataset.require_target()?;
    let grower = Grower {
        data: dataset,
        y,
        max_depth,
        min_leaf,
    };
    let root = grower.grow((0..dataset.n_rows()).collect(), 0);
    Ok(CartModel {
        schema: dataset.schema(),
        root,
        max_depth,
        min_leaf,
    })
}
