use serde::Serialize;

use crate::ale::{eval_curve_column, AleCurve, AleError, CurveShape};
use crate::tabular::{ColumnData, Dataset};

/// One linear piece `intercept + slope * x` over `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub intercept: f64,
    pub slope: f64,
}

/// Piecewise-linear approximation of one main effect.
///
/// Segment `k` covers `breakpoints[k-1] < x <= breakpoints[k]`. For
/// categorical curves `x` is the position of a level in the effect order.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedFit {
    pub feature: usize,
    pub k: usize,
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
    pub r2: f64,
    /// r2 after each growth step; `r2_path[k-1]` is the fit with `k` segments
    /// before slope zeroing.
    pub r2_path: Vec<f64>,
    pub mec_j: usize,
    pub categorical: bool,
}

impl SegmentedFit {
    /// Fit reported for a zero-variance main effect.
    pub fn trivial(feature: usize, categorical: bool) -> Self {
        SegmentedFit {
            feature,
            k: 0,
            breakpoints: Vec::new(),
            segments: Vec::new(),
            r2: 1.0,
            r2_path: Vec::new(),
            mec_j: 0,
            categorical,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    start: usize,
    end: usize,
    mean_x: f64,
    mean_a: f64,
    slope: f64,
    sse: f64,
}

impl Piece {
    fn intercept(&self) -> f64 {
        self.mean_a - self.slope * self.mean_x
    }
}

/// Points sorted by `x`.
struct Problem<'a> {
    x: &'a [f64],
    a: &'a [f64],
}

impl Problem<'_> {
    /// Centered two-pass least squares over `x[start..end]`.
    fn fit(&self, start: usize, end: usize, flat: bool) -> Piece {
        let xs = &self.x[start..end];
        let as_ = &self.a[start..end];
        let m = xs.len() as f64;
        let mean_x = xs.iter().sum::<f64>() / m;
        let mean_a = as_.iter().sum::<f64>() / m;
        let slope = if flat || xs[0] == xs[xs.len() - 1] {
            0.0
        } else {
            let (mut sxx, mut sxa) = (0.0, 0.0);
            for (x, a) in xs.iter().zip(as_) {
                let dx = x - mean_x;
                sxx += dx * dx;
                sxa += dx * (a - mean_a);
            }
            if sxx > 0.0 {
                sxa / sxx
            } else {
                0.0
            }
        };
        let sse = xs
            .iter()
            .zip(as_)
            .map(|(x, a)| (a - mean_a - slope * (x - mean_x)).powi(2))
            .sum();
        Piece {
            start,
            end,
            mean_x,
            mean_a,
            slope,
            sse,
        }
    }
}

fn total_sse(pieces: &[Piece]) -> f64 {
    pieces.iter().map(|p| p.sse).sum()
}

/// Fits pairs `(x, a)` with at most `max_seg` segments whose breakpoints are
/// drawn from `candidates` (a segment is `x <= b` on its left side).
///
/// Returns `(breakpoints, pieces, r2, r2_path)`.
fn fit_points(
    x: &[f64],
    a: &[f64],
    candidates: &[f64],
    flat: bool,
    epsilon: f64,
    max_seg: usize,
) -> (Vec<f64>, Vec<Piece>, f64, Vec<f64>) {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&i, &j| x[i].total_cmp(&x[j]).then(i.cmp(&j)));
    let xs: Vec<f64> = order.iter().map(|&i| x[i]).collect();
    let as_: Vec<f64> = order.iter().map(|&i| a[i]).collect();
    let sst: f64 = as_.iter().map(|v| v * v).sum();
    let p = Problem { x: &xs, a: &as_ };
    let r2_of = |sse: f64| if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };

    let mut breakpoints: Vec<f64> = Vec::new();
    let mut pieces = vec![p.fit(0, xs.len(), flat)];
    let mut r2 = r2_of(total_sse(&pieces));
    let mut path = vec![r2];
    while pieces.len() < max_seg.max(1) && r2 < 1.0 - epsilon {
        // (candidate, piece index, split position, sse)
        let mut best: Option<(f64, usize, usize, f64)> = None;
        let base = total_sse(&pieces);
        for &b in candidates {
            if breakpoints.contains(&b) {
                continue;
            }
            let split = xs.partition_point(|v| *v <= b);
            let Some(pi) = pieces.iter().position(|q| q.start < split && split < q.end) else {
                continue;
            };
            let q = pieces[pi];
            if split - q.start < 2 || q.end - split < 2 {
                continue;
            }
            let sse = base - q.sse + p.fit(q.start, split, flat).sse + p.fit(split, q.end, flat).sse;
            if best.is_none_or(|(_, _, _, s)| sse < s) {
                best = Some((b, pi, split, sse));
            }
        }
        let Some((b, pi, split, _)) = best else { break };
        let q = pieces[pi];
        pieces.splice(pi..=pi, [p.fit(q.start, split, flat), p.fit(split, q.end, flat)]);
        let at = breakpoints.partition_point(|v| *v < b);
        breakpoints.insert(at, b);
        r2 = r2_of(total_sse(&pieces));
        path.push(r2);
    }

    if !flat {
        loop {
            let base = total_sse(&pieces);
            let mut best: Option<(usize, Piece, f64)> = None;
            for (i, q) in pieces.iter().enumerate() {
                if q.slope == 0.0 {
                    continue;
                }
                let zeroed = p.fit(q.start, q.end, true);
                let cand = r2_of(base - q.sse + zeroed.sse);
                if best.as_ref().is_none_or(|(_, _, r)| cand > *r) {
                    best = Some((i, zeroed, cand));
                }
            }
            match best {
                Some((i, zeroed, cand)) if cand >= 1.0 - epsilon => {
                    pieces[i] = zeroed;
                    r2 = cand;
                }
                _ => break,
            }
        }
    }
    (breakpoints, pieces, r2, path)
}

fn range(v: &[f64]) -> f64 {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

fn assemble(
    feature: usize,
    categorical: bool,
    x: &[f64],
    a: &[f64],
    fitted: (Vec<f64>, Vec<Piece>, f64, Vec<f64>),
) -> SegmentedFit {
    let (breakpoints, pieces, r2, r2_path) = fitted;
    let x_range = range(x);
    let threshold = if x_range > 0.0 { 1e-12 * range(a) / x_range } else { f64::INFINITY };
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let segments: Vec<Segment> = pieces
        .iter()
        .enumerate()
        .map(|(k, q)| Segment {
            lo: if k == 0 { lo } else { breakpoints[k - 1] },
            hi: breakpoints.get(k).copied().unwrap_or(hi),
            intercept: q.intercept(),
            slope: q.slope,
        })
        .collect();
    let nonzero = segments.iter().filter(|s| s.slope.abs() > threshold).count();
    SegmentedFit {
        feature,
        k: segments.len(),
        mec_j: segments.len() + nonzero - 1,
        breakpoints,
        segments,
        r2,
        r2_path,
        categorical,
    }
}

/// Segmented approximation of `curve` at every observed value of its
/// feature, with breakpoints restricted to interior grid boundaries (or
/// positions between ordered levels).
pub fn fit_segmented(
    curve: &AleCurve,
    dataset: &Dataset,
    epsilon: f64,
    max_seg: usize,
) -> Result<SegmentedFit, AleError> {
    let a = eval_curve_column(curve, dataset)?;
    match (&curve.shape, &dataset.column(curve.feature).data) {
        (CurveShape::Numeric { grid, .. }, ColumnData::Numeric(x)) => {
            let candidates = if grid.boundaries.len() > 2 {
                &grid.boundaries[1..grid.boundaries.len() - 1]
            } else {
                &[][..]
            };
            Ok(fit_numeric_points(curve.feature, x, &a, candidates, epsilon, max_seg))
        }
        (CurveShape::Categorical { levels, .. }, ColumnData::Categorical { levels: col_levels, codes }) => {
            let position: Vec<f64> = col_levels
                .iter()
                .map(|l| curve.level_position(l).map(|p| p as f64).unwrap_or(f64::NAN))
                .collect();
            let x: Vec<f64> = codes.iter().map(|&c| position[c as usize]).collect();
            let candidates: Vec<f64> = (0..levels.len().saturating_sub(1)).map(|p| p as f64).collect();
            let fitted = fit_points(&x, &a, &candidates, true, epsilon, max_seg);
            Ok(assemble(curve.feature, true, &x, &a, fitted))
        }
        _ => Err(AleError::WrongValueType {
            feature: curve.name.clone(),
            value: "column".into(),
        }),
    }
}

/// Segmented fit of explicit numeric pairs `(x_i, a_i)`.
pub fn fit_numeric_points(
    feature: usize,
    x: &[f64],
    a: &[f64],
    candidates: &[f64],
    epsilon: f64,
    max_seg: usize,
) -> SegmentedFit {
    assert_eq!(x.len(), a.len());
    let fitted = fit_points(x, a, candidates, false, epsilon, max_seg);
    assemble(feature, false, x, a, fitted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect()
    }

    fn interior(x: &[f64]) -> Vec<f64> {
        x[1..x.len() - 1].to_vec()
    }

    #[test]
    fn linear_curve_has_complexity_one() {
        let x = grid(21);
        let a: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let f = fit_numeric_points(0, &x, &a, &interior(&x), 0.05, 5);
        assert_eq!((f.k, f.mec_j), (1, 1));
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!((f.segments[0].slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn v_shape_needs_two_sloped_segments() {
        let x = grid(21);
        let mean = x.iter().map(|v| v.abs()).sum::<f64>() / 21.0;
        let a: Vec<f64> = x.iter().map(|v| v.abs() - mean).collect();
        let f = fit_numeric_points(0, &x, &a, &interior(&x), 0.05, 5);
        assert_eq!((f.k, f.mec_j), (2, 3));
        assert_eq!(f.breakpoints, [x[10]]);
        assert!(f.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn step_has_flat_segments() {
        let x = grid(20);
        let a: Vec<f64> = x.iter().map(|v| if *v <= 0.0 { -1.0 } else { 1.0 }).collect();
        let f = fit_numeric_points(0, &x, &a, &interior(&x), 0.05, 5);
        assert_eq!((f.k, f.mec_j), (2, 1));
        assert!(f.segments.iter().all(|s| s.slope == 0.0));
        assert_eq!(f.segments[0].intercept, -1.0);
    }

    #[test]
    fn growth_stops_at_max_seg() {
        let x = grid(41);
        let a: Vec<f64> = x.iter().map(|v| (9.0 * v).sin()).collect();
        let f = fit_numeric_points(0, &x, &a, &interior(&x), 0.0, 3);
        assert_eq!(f.k, 3);
        assert_eq!(f.r2_path.len(), 3);
        assert!(f.r2_path.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }

    #[test]
    fn segments_keep_two_points() {
        let x = vec![0.0, 1.0, 2.0];
        let a = vec![-1.0, 2.0, -1.0];
        let f = fit_numeric_points(0, &x, &a, &[1.0], 0.0, 5);
        assert_eq!(f.k, 1);
    }
}
