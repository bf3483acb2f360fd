//! First-order accumulated local effects.
//!
//! Numeric features use finite differences over a quantile grid; categorical
//! features use per-level interventional means centered by level frequency.

mod estimate;
mod grid;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value as Json};

use crate::predict::{check_schema, ConcurrencyClass, PredictError, Predictor};
use crate::tabular::{ColumnData, Dataset, Value};

pub use estimate::{estimate_ale_categorical, estimate_ale_numeric};
pub use grid::{build_grid, Grid};

pub const DEFAULT_MAX_INTERVALS: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum AleError {
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error("feature `{0}` is not numeric")]
    NotNumeric(String),
    #[error("feature `{0}` is not categorical")]
    NotCategorical(String),
    #[error("level `{level}` was not seen for feature `{feature}`")]
    UnseenLevel { feature: String, level: String },
    #[error("value {value} does not match the kind of feature `{feature}`")]
    WrongValueType { feature: String, value: String },
    #[error("grid for feature `{0}` is degenerate")]
    DegenerateGrid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CurveShape {
    /// Centered values `a_0..a_K` at the grid boundaries.
    Numeric { grid: Grid, values: Vec<f64> },
    /// Levels sorted ascending by effect, with their centered effects and
    /// empirical frequencies.
    Categorical {
        levels: Vec<String>,
        effects: Vec<f64>,
        weights: Vec<f64>,
    },
}

/// One feature's estimated main effect.
#[derive(Debug, Clone, PartialEq)]
pub struct AleCurve {
    pub feature: usize,
    pub name: String,
    pub shape: CurveShape,
    pub centering: f64,
    pub variance: f64,
}

impl AleCurve {
    /// Numeric curve from explicit boundaries and centered values. The
    /// variance is taken over `data`; the centering constant is left at 0.
    pub fn from_points(name: impl Into<String>, boundaries: Vec<f64>, values: Vec<f64>, data: &[f64]) -> AleCurve {
        assert_eq!(boundaries.len(), values.len(), "one value per boundary");
        let grid = Grid::from_boundaries(0, boundaries, data);
        let mut curve = AleCurve {
            feature: 0,
            name: name.into(),
            shape: CurveShape::Numeric { grid, values },
            centering: 0.0,
            variance: 0.0,
        };
        curve.variance = data.iter().map(|&x| curve.eval_num(x).powi(2)).sum::<f64>() / data.len().max(1) as f64;
        curve
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.shape, CurveShape::Numeric { .. })
    }

    /// Whether the curve is zero at every stored point.
    pub fn is_zero(&self) -> bool {
        match &self.shape {
            CurveShape::Numeric { values, .. } => values.iter().all(|v| *v == 0.0),
            CurveShape::Categorical { effects, .. } => effects.iter().all(|v| *v == 0.0),
        }
    }

    pub(crate) fn eval_num(&self, x: f64) -> f64 {
        match &self.shape {
            CurveShape::Numeric { grid, values } => interpolate(&grid.boundaries, values, x),
            CurveShape::Categorical { .. } => panic!("numeric evaluation of a categorical curve"),
        }
    }

    /// Position of `level` in the effect-sorted level order.
    pub fn level_position(&self, level: &str) -> Option<usize> {
        match &self.shape {
            CurveShape::Categorical { levels, .. } => levels.iter().position(|l| l == level),
            CurveShape::Numeric { .. } => None,
        }
    }

    /// Points `x` with values: boundaries for numeric curves, effect-sorted
    /// levels for categorical ones.
    pub fn to_json(&self) -> Json {
        let (kind, x, value) = match &self.shape {
            CurveShape::Numeric { grid, values } => ("numeric", json!(grid.boundaries), json!(values)),
            CurveShape::Categorical { levels, effects, .. } => ("categorical", json!(levels), json!(effects)),
        };
        json!({
            "feature": self.name,
            "kind": kind,
            "x": x,
            "value": value,
            "variance": self.variance,
            "centering": self.centering,
        })
    }
}

/// Piecewise-linear interpolation through `(xs, ys)`, clamped at both ends.
/// Exact at the knots.
pub(crate) fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() == 1 || x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|b| *b < x);
    if xs[k] == x {
        return ys[k];
    }
    let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
    ys[k - 1] + t * (ys[k] - ys[k - 1])
}

/// Evaluates a curve at one feature value. Numeric curves clamp outside the
/// grid; categorical curves reject levels they were not estimated on.
pub fn eval_curve(curve: &AleCurve, value: &Value) -> Result<f64, AleError> {
    match (&curve.shape, value) {
        (CurveShape::Numeric { grid, values }, Value::Num(x)) => Ok(interpolate(&grid.boundaries, values, *x)),
        (CurveShape::Categorical { levels, effects, .. }, Value::Cat(s)) => levels
            .iter()
            .position(|l| **l == **s)
            .map(|i| effects[i])
            .ok_or_else(|| AleError::UnseenLevel {
                feature: curve.name.clone(),
                level: s.to_string(),
            }),
        _ => Err(AleError::WrongValueType {
            feature: curve.name.clone(),
            value: value.to_string(),
        }),
    }
}

/// Evaluates a curve at every row of its feature column.
pub fn eval_curve_column(curve: &AleCurve, dataset: &Dataset) -> Result<Vec<f64>, AleError> {
    match (&curve.shape, &dataset.column(curve.feature).data) {
        (CurveShape::Numeric { grid, values }, ColumnData::Numeric(xs)) => {
            Ok(xs.iter().map(|&x| interpolate(&grid.boundaries, values, x)).collect())
        }
        (CurveShape::Categorical { .. }, ColumnData::Categorical { levels, codes }) => {
            let per_code: Vec<f64> = levels
                .iter()
                .map(|l| eval_curve(curve, &Value::Cat(l.clone())))
                .collect::<Result<_, _>>()?;
            Ok(codes.iter().map(|&c| per_code[c as usize]).collect())
        }
        _ => Err(AleError::WrongValueType {
            feature: curve.name.clone(),
            value: "column".into(),
        }),
    }
}

/// Constant plus one main effect per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct AleModel {
    pub f0: f64,
    pub curves: Vec<AleCurve>,
    pub fingerprint: String,
    pub max_intervals: usize,
}

impl AleModel {
    /// `f0 + Σ_j curve_j(x_j)` for one row.
    pub fn predict_row(&self, row: &[Value]) -> Result<f64, AleError> {
        let mut s = self.f0;
        for (c, v) in self.curves.iter().zip(row) {
            s += eval_curve(c, v)?;
        }
        Ok(s)
    }

    /// First-order surrogate evaluated at every row of `dataset`.
    pub fn predict_dataset(&self, dataset: &Dataset) -> Result<Vec<f64>, AleError> {
        let mut out = vec![self.f0; dataset.n_rows()];
        for c in &self.curves {
            for (o, v) in out.iter_mut().zip(eval_curve_column(c, dataset)?) {
                *o += v;
            }
        }
        Ok(out)
    }

    /// Curve export: one object per feature.
    pub fn curves_json(&self) -> Json {
        Json::Array(self.curves.iter().map(AleCurve::to_json).collect())
    }
}

/// Summary block of one curve, embedded in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSummary {
    pub feature: String,
    pub kind: &'static str,
    pub points: usize,
    pub variance: f64,
    pub centering: f64,
}

impl From<&AleCurve> for CurveSummary {
    fn from(c: &AleCurve) -> Self {
        let (kind, points) = match &c.shape {
            CurveShape::Numeric { values, .. } => ("numeric", values.len()),
            CurveShape::Categorical { levels, .. } => ("categorical", levels.len()),
        };
        CurveSummary {
            feature: c.name.clone(),
            kind,
            points,
            variance: c.variance,
            centering: c.centering,
        }
    }
}

fn zero_curve(dataset: &Dataset, feature: usize, grid: Grid) -> AleCurve {
    let k = grid.boundaries.len();
    AleCurve {
        feature,
        name: dataset.column(feature).name.clone(),
        shape: CurveShape::Numeric {
            grid,
            values: vec![0.0; k],
        },
        centering: 0.0,
        variance: 0.0,
    }
}

/// Curve for one feature, dispatching on its kind.
pub fn estimate_feature<P: Predictor + ?Sized>(
    predictor: &P,
    dataset: &Dataset,
    feature: usize,
    max_intervals: usize,
) -> Result<AleCurve, AleError> {
    match &dataset.column(feature).data {
        ColumnData::Numeric(_) => {
            let grid = build_grid(dataset, feature, max_intervals)?;
            if grid.degenerate {
                Ok(zero_curve(dataset, feature, grid))
            } else {
                estimate_ale_numeric(predictor, dataset, feature, &grid)
            }
        }
        ColumnData::Categorical { .. } => estimate_ale_categorical(predictor, dataset, feature),
    }
}

/// Estimates `f0` and every main effect. Features are processed in parallel
/// unless the predictor is serial-only; results do not depend on the
/// schedule.
pub fn build_ale_model<P: Predictor + ?Sized>(
    predictor: &P,
    dataset: &Dataset,
    max_intervals: usize,
) -> Result<AleModel, AleError> {
    check_schema(predictor.schema(), &dataset.schema())?;
    let preds = predictor.predict_batch(&dataset.rows())?;
    let f0 = preds.iter().sum::<f64>() / preds.len() as f64;
    let features = 0..dataset.n_features();
    let curves: Vec<AleCurve> = match predictor.concurrency() {
        ConcurrencyClass::ConcurrentSafe => features
            .into_par_iter()
            .map(|j| estimate_feature(predictor, dataset, j, max_intervals))
            .collect::<Result<_, _>>()?,
        ConcurrencyClass::SerialOnly => features
            .map(|j| estimate_feature(predictor, dataset, j, max_intervals))
            .collect::<Result<_, _>>()?,
    };
    Ok(AleModel {
        f0,
        curves,
        fingerprint: dataset.fingerprint(),
        max_intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_clamping() {
        let c = AleCurve::from_points("x", vec![0.0, 1.0], vec![-1.0, 1.0], &[0.0, 1.0]);
        assert_eq!(eval_curve(&c, &Value::Num(0.5)).unwrap(), 0.0);
        assert_eq!(eval_curve(&c, &Value::Num(-10.0)).unwrap(), -1.0);
        assert_eq!(eval_curve(&c, &Value::Num(10.0)).unwrap(), 1.0);
        assert_eq!(c.variance, 1.0);
        assert!(eval_curve(&c, &Value::Cat("a".into())).is_err());
    }

    #[test]
    fn unseen_level() {
        let c = AleCurve {
            feature: 0,
            name: "c".into(),
            shape: CurveShape::Categorical {
                levels: vec!["a".into(), "b".into()],
                effects: vec![-0.5, 0.5],
                weights: vec![0.5, 0.5],
            },
            centering: 0.5,
            variance: 0.25,
        };
        assert_eq!(eval_curve(&c, &Value::Cat("b".into())).unwrap(), 0.5);
        assert!(matches!(
            eval_curve(&c, &Value::Cat("c".into())),
            Err(AleError::UnseenLevel { .. })
        ));
    }
}
