use super::{interpolate, AleCurve, AleError, CurveShape, Grid};
use crate::predict::Predictor;
use crate::tabular::{ColumnData, Dataset, Row, Value};

/// Finite-difference main effect over `grid`.
///
/// Every row is predicted twice, with the feature set to the lower and the
/// upper boundary of its interval; the two copies go out as two batches.
pub fn estimate_ale_numeric<P: Predictor + ?Sized>(
    predictor: &P,
    dataset: &Dataset,
    feature: usize,
    grid: &Grid,
) -> Result<AleCurve, AleError> {
    let name = &dataset.column(feature).name;
    let xs = dataset
        .numeric_column(feature)
        .ok_or_else(|| AleError::NotNumeric(name.clone()))?;
    if grid.degenerate {
        return Err(AleError::DegenerateGrid(name.clone()));
    }
    let z = &grid.boundaries;
    let intervals: Vec<usize> = xs.iter().map(|&x| grid.interval_of(x)).collect();

    let rows = dataset.rows();
    let substituted = |side: usize| -> Vec<Row> {
        rows.iter()
            .zip(&intervals)
            .map(|(r, &k)| {
                let mut r = r.clone();
                r[feature] = Value::Num(z[k - side]);
                r
            })
            .collect()
    };
    let upper = predictor.predict_batch(&substituted(0))?;
    let lower = predictor.predict_batch(&substituted(1))?;

    let k_count = grid.n_intervals();
    let mut sums = vec![0.0; k_count];
    let mut counts = vec![0usize; k_count];
    for ((&k, u), l) in intervals.iter().zip(&upper).zip(&lower) {
        sums[k - 1] += u - l;
        counts[k - 1] += 1;
    }
    let mut acc = Vec::with_capacity(k_count + 1);
    acc.push(0.0);
    let mut running = 0.0;
    for (s, &c) in sums.iter().zip(&counts) {
        if c > 0 {
            running += s / c as f64;
        }
        acc.push(running);
    }

    let n = xs.len() as f64;
    let centering = xs.iter().map(|&x| interpolate(z, &acc, x)).sum::<f64>() / n;
    let values: Vec<f64> = acc.iter().map(|a| a - centering).collect();
    let variance = xs.iter().map(|&x| interpolate(z, &values, x).powi(2)).sum::<f64>() / n;
    Ok(AleCurve {
        feature,
        name: name.clone(),
        shape: CurveShape::Numeric {
            grid: grid.clone(),
            values,
        },
        centering,
        variance,
    })
}

/// Per-level interventional means centered by level frequency. Levels are
/// returned sorted by effect, ties kept in declaration order.
pub fn estimate_ale_categorical<P: Predictor + ?Sized>(
    predictor: &P,
    dataset: &Dataset,
    feature: usize,
) -> Result<AleCurve, AleError> {
    let column = dataset.column(feature);
    let ColumnData::Categorical { levels, codes } = &column.data else {
        return Err(AleError::NotCategorical(column.name.clone()));
    };
    let n = codes.len();
    let rows = dataset.rows();
    let mut batch = Vec::with_capacity(n * levels.len());
    for level in levels {
        for r in &rows {
            let mut r = r.clone();
            r[feature] = Value::Cat(level.clone());
            batch.push(r);
        }
    }
    let preds = predictor.predict_batch(&batch)?;
    let means: Vec<f64> = preds
        .chunks(n)
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();

    let mut weights = vec![0.0; levels.len()];
    for &c in codes {
        weights[c as usize] += 1.0;
    }
    for w in &mut weights {
        *w /= n as f64;
    }

    let all_equal = means.iter().all(|m| *m == means[0]);
    let centering: f64 = means.iter().zip(&weights).map(|(m, w)| m * w).sum();
    let effects: Vec<f64> = if all_equal {
        vec![0.0; means.len()]
    } else {
        means.iter().map(|m| m - centering).collect()
    };

    let mut order: Vec<usize> = (0..levels.len()).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
    let variance = weights.iter().zip(&effects).map(|(w, e)| w * e * e).sum();
    Ok(AleCurve {
        feature,
        name: column.name.clone(),
        shape: CurveShape::Categorical {
            levels: order.iter().map(|&i| levels[i].to_string()).collect(),
            effects: order.iter().map(|&i| effects[i]).collect(),
            weights: order.iter().map(|&i| weights[i]).collect(),
        },
        centering,
        variance,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{build_ale_model, build_grid, eval_curve};
    use super::*;
    use crate::predict::parse_expression;
    use crate::tabular::{Column, Rng};

    fn model(src: &str, ds: &Dataset) -> crate::predict::ExpressionModel {
        parse_expression(src, &ds.schema()).unwrap()
    }

    fn numeric_curve(src: &str, ds: &Dataset, j: usize) -> AleCurve {
        let g = build_grid(ds, j, 1000).unwrap();
        estimate_ale_numeric(&model(src, ds), ds, j, &g).unwrap()
    }

    fn values(c: &AleCurve) -> &[f64] {
        match &c.shape {
            CurveShape::Numeric { values, .. } => values,
            _ => panic!(),
        }
    }

    #[test]
    fn linear_hand_example() {
        let ds = Dataset::new(vec![Column::numeric("x1", vec![0.0, 1.0, 2.0, 3.0])], None).unwrap();
        let c = numeric_curve("2*x1", &ds, 0);
        assert_eq!(values(&c), [-3.0, -1.0, 1.0, 3.0]);
        assert_eq!(c.centering, 3.0);
        assert_eq!(c.variance, 5.0);
    }

    #[test]
    fn constant_and_irrelevant_features() {
        let mut rng = Rng::new(3);
        let ds = Dataset::new(
            vec![
                Column::numeric("x1", (0..50).map(|_| rng.normal()).collect()),
                Column::numeric("x2", (0..50).map(|_| rng.normal()).collect()),
            ],
            None,
        )
        .unwrap();
        let c = numeric_curve("7", &ds, 0);
        assert!(values(&c).iter().all(|v| *v == 0.0));
        assert_eq!(c.variance, 0.0);
        let c = numeric_curve("sin(x1) * 3", &ds, 1);
        assert!(values(&c).iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn additivity() {
        let mut rng = Rng::new(9);
        let ds = Dataset::new(
            vec![
                Column::numeric("x1", (0..80).map(|_| rng.normal()).collect()),
                Column::numeric("x2", (0..80).map(|_| rng.normal()).collect()),
            ],
            None,
        )
        .unwrap();
        let a = numeric_curve("x1^3 + exp(x2)", &ds, 0);
        let b = numeric_curve("x1^3", &ds, 0);
        for (u, v) in values(&a).iter().zip(values(&b)) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn categorical_indicator() {
        let ds = Dataset::new(vec![Column::categorical("x1", &["a", "b"])], None).unwrap();
        let c = estimate_ale_categorical(&model(r#"x1 == "b""#, &ds), &ds, 0).unwrap();
        assert_eq!(eval_curve(&c, &Value::Cat("a".into())).unwrap(), -0.5);
        assert_eq!(eval_curve(&c, &Value::Cat("b".into())).unwrap(), 0.5);
        assert_eq!(c.variance, 0.25);
    }

    #[test]
    fn categorical_ordering_and_degenerate_cases() {
        let ds = Dataset::new(
            vec![
                Column::categorical("c", &["a", "b", "c", "a"]),
                Column::numeric("x", vec![1.0, 2.0, 3.0, 4.0]),
            ],
            None,
        )
        .unwrap();
        let c = estimate_ale_categorical(&model(r#"-3*(c == "a") + 2*(c == "c") + x"#, &ds), &ds, 0).unwrap();
        let CurveShape::Categorical { levels, .. } = &c.shape else { panic!() };
        assert_eq!(levels, &["a", "b", "c"]);
        let c = estimate_ale_categorical(&model("x^2", &ds), &ds, 0).unwrap();
        assert!(c.is_zero());
        assert_eq!(c.variance, 0.0);

        let single = Dataset::new(vec![Column::categorical("c", &["z", "z"])], None).unwrap();
        let c = estimate_ale_categorical(&model(r#"5*(c == "z")"#, &single), &single, 0).unwrap();
        assert!(c.is_zero());
    }

    #[test]
    fn additive_model_is_reproduced_on_full_grid() {
        let mut rng = Rng::new(21);
        let ds = Dataset::new(
            vec![
                Column::numeric("x1", (0..100).map(|_| rng.uniform(-2.0, 2.0)).collect()),
                Column::numeric("x2", (0..100).map(|_| rng.uniform(-2.0, 2.0)).collect()),
            ],
            None,
        )
        .unwrap();
        let f = model("x1 + x2^2", &ds);
        let ale = build_ale_model(&f, &ds, 1000).unwrap();
        let surrogate = ale.predict_dataset(&ds).unwrap();
        let truth = f.predict_batch(&ds.rows()).unwrap();
        for (a, b) in surrogate.iter().zip(&truth) {
            assert!((a - b).abs() < 1e-10);
        }
        for c in &ale.curves {
            let mean: f64 = super::super::eval_curve_column(c, &ds).unwrap().iter().sum::<f64>() / 100.0;
            assert!(mean.abs() < 1e-8);
        }
    }

    #[test]
    fn constant_model_and_constant_column() {
        let ds = Dataset::new(
            vec![
                Column::numeric("x1", vec![1.0, 2.0, 3.0]),
                Column::numeric("k", vec![4.0, 4.0, 4.0]),
            ],
            None,
        )
        .unwrap();
        let ale = build_ale_model(&model("7", &ds), &ds, 100).unwrap();
        assert_eq!(ale.f0, 7.0);
        assert!(ale.curves.iter().all(|c| c.is_zero() && c.variance == 0.0));
        let ale = build_ale_model(&model("x1 * k", &ds), &ds, 100).unwrap();
        assert!(ale.curves[1].is_zero());
        assert_eq!(ale.curves[1].variance, 0.0);
    }
}
