use serde::Serialize;

use super::MeasureError;
use crate::ale::AleModel;
use crate::predict::{check_schema, Predictor};
use crate::tabular::Dataset;

/// Share of the prediction variance not captured by the first-order model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IasResult {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
}

/// `Σ(f − f_ale)² / Σ(f − f0)²` over the rows of `dataset`; 0 when the
/// predictions are constant.
///
/// `ale_model` must come from the same dataset and predictor: the dataset
/// fingerprint and the mean prediction are both checked.
pub fn compute_ias<P: Predictor + ?Sized>(
    predictor: &P,
    dataset: &Dataset,
    ale_model: &AleModel,
) -> Result<IasResult, MeasureError> {
    check_schema(predictor.schema(), &dataset.schema())?;
    if ale_model.fingerprint != dataset.fingerprint() {
        return Err(MeasureError::Mismatch("ALE model was built on a different dataset".into()));
    }
    let f = predictor.predict_batch(&dataset.rows())?;
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let scale = f.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if (mean - ale_model.f0).abs() > 1e-9 * scale {
        return Err(MeasureError::Mismatch(format!(
            "mean prediction {mean} differs from the ALE model constant {}",
            ale_model.f0
        )));
    }
    let surrogate = ale_model.predict_dataset(dataset)?;
    let numerator: f64 = f.iter().zip(&surrogate).map(|(a, b)| (a - b).powi(2)).sum();
    let denominator: f64 = f.iter().map(|a| (a - ale_model.f0).powi(2)).sum();
    let constant = f.iter().all(|v| *v == f[0]);
    let value = if constant || denominator == 0.0 {
        0.0
    } else {
        numerator / denominator
    };
    Ok(IasResult {
        value,
        numerator,
        denominator,
    })
}
