use rayon::prelude::*;
use serde::Serialize;

use super::MeasureError;
use crate::predict::{check_schema, ConcurrencyClass, Predictor};
use crate::tabular::{sample_row_indices, Dataset, Rng, ValuePool};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NfConfig {
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for NfConfig {
    fn default() -> Self {
        NfConfig {
            samples: 500,
            tolerance: 0.0,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NfResult {
    pub count: usize,
    pub used: Vec<bool>,
    pub names: Vec<String>,
    pub config: NfConfig,
}

fn feature_used<P: Predictor + ?Sized>(
    predictor: &P,
    dataset: &Dataset,
    feature: usize,
    config: &NfConfig,
) -> Result<bool, MeasureError> {
    let mut rng = Rng::new(config.seed).substream("nf", feature as u64);
    let idx = sample_row_indices(dataset, config.samples, &mut rng);
    let pool = ValuePool::new(dataset, feature);
    let mut original = Vec::with_capacity(idx.len());
    let mut perturbed = Vec::with_capacity(idx.len());
    for i in idx {
        let row = dataset.row(i);
        if let Some(v) = pool.sample_other(&row[feature], &mut rng) {
            let mut p = row.clone();
            p[feature] = v;
            original.push(row);
            perturbed.push(p);
        }
    }
    if original.is_empty() {
        return Ok(false);
    }
    let before = predictor.predict_batch(&original)?;
    let after = predictor.predict_batch(&perturbed)?;
    Ok(before
        .iter()
        .zip(&after)
        .any(|(b, a)| (a - b).abs() > config.tolerance))
}

/// Counts features whose random perturbation changes at least one of
/// `config.samples` predictions by more than `config.tolerance`.
pub fn compute_nf<P: Predictor + ?Sized>(
    predictor: &P,
    dataset: &Dataset,
    config: &NfConfig,
) -> Result<NfResult, MeasureError> {
    if config.samples == 0 || config.tolerance.is_nan() || config.tolerance < 0.0 {
        return Err(MeasureError::Config(
            "nf samples must be positive and tolerance nonnegative".into(),
        ));
    }
    check_schema(predictor.schema(), &dataset.schema())?;
    let features = 0..dataset.n_features();
    let used: Vec<bool> = match predictor.concurrency() {
        ConcurrencyClass::ConcurrentSafe => features
            .into_par_iter()
            .map(|j| feature_used(predictor, dataset, j, config))
            .collect::<Result<_, _>>()?,
        ConcurrencyClass::SerialOnly => features
            .map(|j| feature_used(predictor, dataset, j, config))
            .collect::<Result<_, _>>()?,
    };
    Ok(NfResult {
        count: used.iter().filter(|u| **u).count(),
        used,
        names: dataset.feature_names().iter().map(|s| s.to_string()).collect(),
        config: config.clone(),
    })
}
