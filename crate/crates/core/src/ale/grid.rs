use super::AleError;
use crate::tabular::Dataset;

/// Interval boundaries `z_0 < z_1 < ... < z_K` for one numeric feature.
///
/// A data value `x` belongs to interval `k` when `z_{k-1} < x <= z_k`; the
/// minimum `z_0` belongs to interval 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub feature: usize,
    pub boundaries: Vec<f64>,
    /// Data points per interval, `interval_counts[k-1]` for interval `k`.
    pub interval_counts: Vec<usize>,
    /// Set for a constant column: a single boundary and no intervals.
    pub degenerate: bool,
}

impl Grid {
    pub fn n_intervals(&self) -> usize {
        self.boundaries.len().saturating_sub(1)
    }

    /// 1-based interval index of `x`; values outside the range clamp to the
    /// first or last interval.
    pub fn interval_of(&self, x: f64) -> usize {
        let k = self.boundaries.partition_point(|b| *b < x);
        k.clamp(1, self.n_intervals())
    }

    /// Builds a grid from explicit boundaries and assigns `data` to it.
    pub fn from_boundaries(feature: usize, boundaries: Vec<f64>, data: &[f64]) -> Grid {
        debug_assert!(boundaries.windows(2).all(|w| w[0] < w[1]));
        let mut grid = Grid {
            feature,
            degenerate: boundaries.len() < 2,
            boundaries,
            interval_counts: Vec::new(),
        };
        if !grid.degenerate {
            grid.interval_counts = vec![0; grid.n_intervals()];
            for &x in data {
                let k = grid.interval_of(x);
                grid.interval_counts[k - 1] += 1;
            }
        }
        grid
    }
}

/// Empirical quantile with linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = h - lo as f64;
    if frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Quantile grid with `K = min(max_intervals, distinct - 1)` intervals.
///
/// When `K` reaches `distinct - 1` every distinct value becomes a boundary;
/// otherwise boundaries are the deduplicated quantiles at `k/K`.
pub fn build_grid(dataset: &Dataset, feature: usize, max_intervals: usize) -> Result<Grid, AleError> {
    let column = dataset
        .numeric_column(feature)
        .ok_or_else(|| AleError::NotNumeric(dataset.column(feature).name.clone()))?;
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let k_max = max_intervals.max(1).min(distinct.len() - 1);
    let boundaries = if k_max == 0 {
        vec![distinct[0]]
    } else if k_max == distinct.len() - 1 {
        distinct
    } else {
        let mut b: Vec<f64> = (0..=k_max)
            .map(|k| quantile(&sorted, k as f64 / k_max as f64))
            .collect();
        b.dedup();
        b
    };
    Ok(Grid::from_boundaries(feature, boundaries, column))
}
