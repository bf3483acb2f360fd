use super::{ColumnData, Dataset, Value};
use crate::tabular::Rng;

/// Draws `m` row indices: without replacement when `m <= n`, otherwise with
/// replacement.
pub fn sample_row_indices(dataset: &Dataset, m: usize, rng: &mut Rng) -> Vec<usize> {
    let n = dataset.n_rows();
    assert!(m >= 1, "sample size must be positive");
    if m <= n {
        // partial Fisher-Yates; consumes exactly m draws
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + rng.index(n - i);
            idx.swap(i, j);
        }
        idx.truncate(m);
        idx
    } else {
        (0..m).map(|_| rng.index(n)).collect()
    }
}

/// Empirical multiset of one column, grouped by distinct value, for drawing
/// replacement values that differ from the current one.
#[derive(Debug, Clone)]
pub struct ValuePool {
    groups: Vec<Value>,
    // cumulative counts; cum[g+1] - cum[g] = multiplicity of groups[g]
    cum: Vec<usize>,
    kind: PoolKind,
}

#[derive(Debug, Clone)]
enum PoolKind {
    // sorted distinct values
    Numeric(Vec<f64>),
    // one group per level that occurs
    Categorical,
}

impl ValuePool {
    pub fn new(dataset: &Dataset, feature: usize) -> Self {
        match &dataset.column(feature).data {
            ColumnData::Numeric(v) => {
                // +0.0 folds -0.0 into 0.0 so equal values share a group
                let mut sorted: Vec<f64> = v.iter().map(|x| x + 0.0).collect();
                sorted.sort_by(f64::total_cmp);
                let mut distinct: Vec<f64> = Vec::new();
                let mut cum = vec![0];
                for (i, x) in sorted.iter().enumerate() {
                    if distinct.last() != Some(x) {
                        if i > 0 {
                            cum.push(i);
                        }
                        distinct.push(*x);
                    }
                }
                cum.push(sorted.len());
                debug_assert_eq!(cum.len(), distinct.len() + 1);
                ValuePool {
                    groups: distinct.iter().map(|&x| Value::Num(x)).collect(),
                    cum,
                    kind: PoolKind::Numeric(distinct),
                }
            }
            ColumnData::Categorical { levels, codes } => {
                let mut counts = vec![0usize; levels.len()];
                for &c in codes {
                    counts[c as usize] += 1;
                }
                let mut groups = Vec::new();
                let mut cum = vec![0];
                for (code, &cnt) in counts.iter().enumerate() {
                    if cnt > 0 {
                        groups.push(Value::Cat(levels[code].clone()));
                        cum.push(cum.last().unwrap() + cnt);
                    }
                }
                ValuePool {
                    groups,
                    cum,
                    kind: PoolKind::Categorical,
                }
            }
        }
    }

    fn group_of(&self, value: &Value) -> Option<usize> {
        match (&self.kind, value) {
            (PoolKind::Numeric(d), Value::Num(x)) => {
                let x = x + 0.0;
                d.binary_search_by(|v| v.total_cmp(&x)).ok()
            },
            (PoolKind::Categorical, Value::Cat(s)) => {
                self.groups.iter().position(|g| g.as_cat() == Some(s))
            }
            _ => None,
        }
    }

    fn group_count(&self, g: usize) -> usize {
        self.cum[g + 1] - self.cum[g]
    }

    /// Uniform draw from the observed values that differ from `current`;
    /// `None` when every observed value equals `current`.
    pub fn sample_other(&self, current: &Value, rng: &mut Rng) -> Option<Value> {
        let total = *self.cum.last().unwrap();
        let excluded = self.group_of(current);
        let skip = excluded.map_or(0, |g| self.group_count(g));
        let eligible = total - skip;
        if eligible == 0 {
            return None;
        }
        let mut r = rng.index(eligible);
        if let Some(g) = excluded {
            if r >= self.cum[g] {
                r += skip;
            }
        }
        // largest g with cum[g] <= r
        let g = self.cum.partition_point(|&c| c <= r) - 1;
        Some(self.groups[g].clone())
    }
}

/// Draws a replacement for `current` from the empirical column multiset,
/// excluding every copy of `current`. `None` signals that no alternative
/// value exists.
pub fn sample_replacement_value(
    dataset: &Dataset,
    feature: usize,
    current: &Value,
    rng: &mut Rng,
) -> Option<Value> {
    ValuePool::new(dataset, feature).sample_other(current, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;
    use std::collections::HashSet;

    fn numeric(v: Vec<f64>) -> Dataset {
        Dataset::new(vec![Column::numeric("x", v)], None).unwrap()
    }

    #[test]
    fn exhaustive_without_replacement_is_permutation() {
        let ds = numeric(vec![0.0; 4]);
        let mut idx = sample_row_indices(&ds, 4, &mut Rng::new(1));
        idx.sort();
        assert_eq!(idx, [0, 1, 2, 3]);
    }

    #[test]
    fn oversampling_uses_replacement() {
        let ds = numeric(vec![0.0; 3]);
        let idx = sample_row_indices(&ds, 10, &mut Rng::new(1));
        assert_eq!(idx.len(), 10);
        assert!(idx.iter().all(|&i| i < 3));
    }

    #[test]
    fn sampling_is_deterministic() {
        let ds = numeric((0..100).map(f64::from).collect());
        let a = sample_row_indices(&ds, 10, &mut Rng::new(7));
        let b = sample_row_indices(&ds, 10, &mut Rng::new(7));
        assert_eq!(a, b);
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 10);
    }

    #[test]
    fn replacement_excludes_current_with_equal_odds() {
        // eligible multiset for current=1 in [1,1,2,3] is {2,3}
        let ds = numeric(vec![1.0, 1.0, 2.0, 3.0]);
        let pool = ValuePool::new(&ds, 0);
        let mut rng = Rng::new(11);
        let mut twos = 0;
        let draws = 20_000;
        for _ in 0..draws {
            match pool.sample_other(&Value::Num(1.0), &mut rng).unwrap() {
                Value::Num(2.0) => twos += 1,
                Value::Num(v) => assert_eq!(v, 3.0),
                other => panic!("{other:?}"),
            }
        }
        let frac = twos as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn replacement_respects_multiplicity() {
        // current=3: eligible {1,1,2} -> P(1)=2/3
        let ds = numeric(vec![1.0, 1.0, 2.0, 3.0]);
        let mut rng = Rng::new(5);
        let ones = (0..30_000)
            .filter(|_| {
                sample_replacement_value(&ds, 0, &Value::Num(3.0), &mut rng) == Some(Value::Num(1.0))
            })
            .count();
        assert!((ones as f64 / 30_000.0 - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn constant_column_has_no_alternative() {
        let ds = numeric(vec![5.0, 5.0, 5.0]);
        assert_eq!(
            sample_replacement_value(&ds, 0, &Value::Num(5.0), &mut Rng::new(0)),
            None
        );
    }

    #[test]
    fn categorical_single_alternative() {
        let ds = Dataset::new(vec![Column::categorical("c", &["a", "b"])], None).unwrap();
        let pool = ValuePool::new(&ds, 0);
        for s in 0..20 {
            let v = pool.sample_other(&Value::Cat("a".into()), &mut Rng::new(s)).unwrap();
            assert_eq!(v.as_cat(), Some("b"));
        }
    }

    #[test]
    fn value_absent_from_column_draws_from_everything() {
        let ds = numeric(vec![1.0, 2.0]);
        let v = sample_replacement_value(&ds, 0, &Value::Num(9.0), &mut Rng::new(0)).unwrap();
        assert!(v == Value::Num(1.0) || v == Value::Num(2.0));
    }
}
