use nalgebra::{DMatrix, DVector};

use super::{check_row_width, Encoder, FitError, PredictError, Predictor};
use crate::tabular::{Dataset, FeatureSpec, Row};

/// Affine model over the dummy-coded features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub(crate) encoder: Encoder,
    pub intercept: f64,
    /// One coefficient per encoded column, see [`Encoder::columns`].
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn encoder(&self) -> &Encoder {
        &self.encoder
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }

    /// Distinct original features with at least one nonzero coefficient.
    pub fn used_features(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self
            .encoder
            .columns()
            .iter()
            .zip(&self.coefficients)
            .filter(|(_, c)| **c != 0.0)
            .map(|((j, _), _)| *j)
            .collect();
        used.dedup();
        used
    }

    pub fn predict_row(&self, row: &[crate::tabular::Value]) -> Result<f64, PredictError> {
        let x = self.encoder.encode_row(row)?;
        Ok(self.intercept + x.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>())
    }
}

impl Predictor for LinearModel {
    fn schema(&self) -> &[FeatureSpec] {
        self.encoder.schema()
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        check_row_width(self.schema(), rows)?;
        rows.iter().map(|r| self.predict_row(r)).collect()
    }
}

/// L1-penalised linear model together with its penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoModel {
    pub linear: LinearModel,
    pub lambda: f64,
}

struct Standardized {
    z: Vec<Vec<f64>>,
    means: Vec<f64>,
    sds: Vec<f64>,
    y_centered: Vec<f64>,
    y_mean: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn standardize(columns: Vec<Vec<f64>>, y: &[f64]) -> Standardized {
    let n = y.len() as f64;
    let mut means = Vec::with_capacity(columns.len());
    let mut sds = Vec::with_capacity(columns.len());
    let mut z = Vec::with_capacity(columns.len());
    for col in columns {
        let m = mean(&col);
        let sd = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        // constant columns stay all-zero and never receive a coefficient
        let zc: Vec<f64> = if sd > 0.0 {
            col.iter().map(|x| (x - m) / sd).collect()
        } else {
            vec![0.0; col.len()]
        };
        means.push(m);
        sds.push(sd);
        z.push(zc);
    }
    let y_mean = mean(y);
    Standardized {
        z,
        means,
        sds,
        y_centered: y.iter().map(|v| v - y_mean).collect(),
        y_mean,
    }
}

fn destandardize(encoder: Encoder, st: &Standardized, beta: &[f64]) -> LinearModel {
    let coefficients: Vec<f64> = beta
        .iter()
        .zip(&st.sds)
        .map(|(b, sd)| if *b == 0.0 { 0.0 } else { b / sd })
        .collect();
    let intercept = st.y_mean
        - coefficients
            .iter()
            .zip(&st.means)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    LinearModel {
        encoder,
        intercept,
        coefficients,
    }
}

/// Ordinary least squares with dummy-coded categoricals.
pub fn fit_ols(dataset: &Dataset) -> Result<LinearModel, FitError> {
    let y = dataset.require_target()?;
    let encoder = Encoder::new(&dataset.schema());
    let st = standardize(encoder.design_columns(dataset), y);
    let names = || -> Vec<String> {
        encoder
            .columns()
            .iter()
            .map(|(j, l)| match l {
                Some(l) => format!("{}={}", dataset.column(*j).name, l),
                None => dataset.column(*j).name.clone(),
            })
            .collect()
    };
    if let Some(k) = st.sds.iter().position(|sd| *sd == 0.0) {
        return Err(FitError::RankDeficient(format!(
            "column `{}` is constant",
            names()[k]
        )));
    }
    let q = st.z.len();
    if q == 0 {
        return Ok(destandardize(encoder, &st, &[]));
    }
    let n = y.len();
    let x = DMatrix::from_fn(n, q, |i, k| st.z[k][i]);
    let svd = x.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if n <= q || s_min <= 1e-10 * s_max {
        return Err(FitError::RankDeficient(format!(
            "design over [{}] is singular (condition {:.3e})",
            names().join(", "),
            s_max / s_min
        )));
    }
    let b = DVector::from_column_slice(&st.y_centered);
    let beta = svd
        .solve(&b, 0.0)
        .map_err(|e| FitError::RankDeficient(e.to_string()))?;
    Ok(destandardize(encoder, &st, beta.as_slice()))
}

fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

const LASSO_TOL: f64 = 1e-10;
const LASSO_MAX_SWEEPS: usize = 200_000;

/// Cyclic coordinate descent on standardized columns for
/// `(1/2n)·||y - Xb||² + lambda·||b||₁`; coefficients are reported on the
/// original scale.
pub fn fit_lasso(dataset: &Dataset, lambda: f64) -> Result<LassoModel, FitError> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(FitError::InvalidParameter(format!("lambda = {lambda}")));
    }
    let y = dataset.require_target()?;
    let encoder = Encoder::new(&dataset.schema());
    let st = standardize(encoder.design_columns(dataset), y);
    let n = y.len() as f64;
    let q = st.z.len();
    let mut beta = vec![0.0; q];
    let mut resid = st.y_centered.clone();
    let active: Vec<bool> = st.sds.iter().map(|sd| *sd > 0.0).collect();
    for _ in 0..LASSO_MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for k in 0..q {
            if !active[k] {
                continue;
            }
            let zk = &st.z[k];
            let rho = zk.iter().zip(&resid).map(|(a, r)| a * r).sum::<f64>() / n + beta[k];
            let updated = soft_threshold(rho, lambda);
            let delta = updated - beta[k];
            if delta != 0.0 {
                for (r, a) in resid.iter_mut().zip(zk) {
                    *r -= a * delta;
                }
                beta[k] = updated;
                max_change = max_change.max(delta.abs());
            }
        }
        if max_change < LASSO_TOL {
            break;
        }
    }
    Ok(LassoModel {
        linear: destandardize(encoder, &st, &beta),
        lambda,
    })
}
