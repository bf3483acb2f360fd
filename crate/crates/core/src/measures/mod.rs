//! Number of features used (NF), interaction strength (IAS) and main effect
//! complexity (MEC), plus the combined report.

mod ias;
mod nf;
mod segmented;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value as Json};

use crate::ale::{build_ale_model, AleError, AleModel, CurveSummary, DEFAULT_MAX_INTERVALS};
use crate::predict::{PredictError, Predictor};
use crate::tabular::Dataset;

pub use ias::{compute_ias, IasResult};
pub use nf::{compute_nf, NfConfig, NfResult};
pub use segmented::{fit_numeric_points, fit_segmented, Segment, SegmentedFit};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_MAX_SEG: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Ale(#[from] AleError),
    #[error("inconsistent inputs: {0}")]
    Mismatch(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMec {
    pub name: String,
    pub variance: f64,
    pub fit: SegmentedFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MecResult {
    pub value: f64,
    pub per_feature: Vec<FeatureMec>,
    pub epsilon: f64,
    pub max_seg: usize,
}

/// Variance-weighted mean of per-feature segment complexities. Features
/// with zero variance get complexity 0 and weight 0.
pub fn compute_mec(
    ale_model: &AleModel,
    dataset: &Dataset,
    epsilon: f64,
    max_seg: usize,
) -> Result<MecResult, MeasureError> {
    if max_seg == 0 || !(0.0..1.0).contains(&epsilon) {
        return Err(MeasureError::Config(
            "max_seg must be positive and epsilon in [0, 1)".into(),
        ));
    }
    if ale_model.fingerprint != dataset.fingerprint() {
        return Err(MeasureError::Mismatch("ALE model was built on a different dataset".into()));
    }
    let per_feature: Vec<FeatureMec> = ale_model
        .curves
        .par_iter()
        .map(|c| {
            let fit = if c.variance > 0.0 {
                fit_segmented(c, dataset, epsilon, max_seg)?
            } else {
                SegmentedFit::trivial(c.feature, !c.is_numeric())
            };
            Ok(FeatureMec {
                name: c.name.clone(),
                variance: c.variance,
                fit,
            })
        })
        .collect::<Result<_, AleError>>()?;
    let total: f64 = per_feature.iter().map(|f| f.variance).sum();
    let value = if total > 0.0 {
        per_feature
            .iter()
            .map(|f| f.variance * f.fit.mec_j as f64)
            .sum::<f64>()
            / total
    } else {
        0.0
    };
    Ok(MecResult {
        value,
        per_feature,
        epsilon,
        max_seg,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub grid_size: usize,
    pub epsilon: f64,
    pub max_seg: usize,
    pub nf_samples: usize,
    pub nf_tol: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            seed: 42,
            grid_size: DEFAULT_MAX_INTERVALS,
            epsilon: DEFAULT_EPSILON,
            max_seg: DEFAULT_MAX_SEG,
            nf_samples: 500,
            nf_tol: 0.0,
        }
    }
}

impl ReportConfig {
    pub fn nf_config(&self) -> NfConfig {
        NfConfig {
            samples: self.nf_samples,
            tolerance: self.nf_tol,
            seed: self.seed,
        }
    }
}

/// Wall-clock time per stage. Not part of the serialized report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timing {
    pub ale: Duration,
    pub nf: Duration,
    pub ias: Duration,
    pub mec: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport {
    pub f0: f64,
    pub nf: NfResult,
    pub ias: IasResult,
    pub mec: MecResult,
    pub curves: Vec<CurveSummary>,
    pub config: ReportConfig,
    pub timing: Timing,
}

impl ComplexityReport {
    pub fn to_json(&self) -> Json {
        let used: Map<String, Json> = self
            .nf
            .names
            .iter()
            .zip(&self.nf.used)
            .map(|(n, u)| (n.clone(), Json::Bool(*u)))
            .collect();
        let per_feature: Vec<Json> = self
            .mec
            .per_feature
            .iter()
            .map(|f| {
                json!({
                    "feature": f.name,
                    "mec_j": f.fit.mec_j,
                    "variance": f.variance,
                    "segments": f.fit.segments,
                    "r2": f.fit.r2,
                })
            })
            .collect();
        json!({
            "f0": self.f0,
            "nf": { "count": self.nf.count, "used": used },
            "ias": self.ias,
            "mec": {
                "value": self.mec.value,
                "per_feature": per_feature,
                "epsilon": self.mec.epsilon,
                "max_seg": self.mec.max_seg,
            },
            "curves": self.curves,
            "config": self.config,
        })
    }

    /// Pretty JSON with a trailing newline; identical across runs with the
    /// same inputs.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report is serializable");
        s.push('\n');
        s
    }
}

/// Builds the ALE model and computes all three measures.
pub fn compute_report<P: Predictor + ?Sized>(
    predictor: &P,
    dataset: &Dataset,
    config: &ReportConfig,
) -> Result<(ComplexityReport, AleModel), MeasureError> {
    if config.grid_size == 0 {
        return Err(MeasureError::Config("grid size must be positive".into()));
    }
    let t = Instant::now();
    let ale = build_ale_model(predictor, dataset, config.grid_size)?;
    let ale_time = t.elapsed();

    let t = Instant::now();
    let nf = compute_nf(predictor, dataset, &config.nf_config())?;
    let nf_time = t.elapsed();

    let t = Instant::now();
    let ias = compute_ias(predictor, dataset, &ale)?;
    let ias_time = t.elapsed();

    let t = Instant::now();
    let mec = compute_mec(&ale, dataset, config.epsilon, config.max_seg)?;
    let mec_time = t.elapsed();

    let report = ComplexityReport {
        f0: ale.f0,
        nf,
        ias,
        mec,
        curves: ale.curves.iter().map(CurveSummary::from).collect(),
        config: config.clone(),
        timing: Timing {
            ale: ale_time,
            nf: nf_time,
            ias: ias_time,
            mec: mec_time,
        },
    };
    Ok((report, ale))
}
