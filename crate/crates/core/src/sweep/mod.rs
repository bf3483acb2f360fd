//! Random hyperparameter search over the built-in learners with
//! cross-validated MAE and the three complexity measures as objectives.

mod pareto;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};

use crate::measures::{compute_report, MeasureError, ReportConfig};
use crate::predict::{fit_cart, fit_lasso, fit_ols, serialize_model, BuiltinModel, FitError, PredictError, Predictor};
use crate::tabular::{DataError, Dataset, Rng};

pub use pareto::{dominates, pareto_front};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("{k}-fold cross-validation needs k >= 2 and at least k rows (have {n})")]
    Folds { k: usize, n: usize },
    #[error("fitting failed on fold {fold}: {source}")]
    FoldFit { fold: usize, source: FitError },
    #[error("fitting failed: {0}")]
    Fit(#[from] FitError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid search space: {0}")]
    Space(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Learner {
    Ols,
    Lasso,
    Cart,
}

impl Learner {
    pub fn name(self) -> &'static str {
        match self {
            Learner::Ols => "ols",
            Learner::Lasso => "lasso",
            Learner::Cart => "cart",
        }
    }
}

impl std::str::FromStr for Learner {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ols" => Ok(Learner::Ols),
            "lasso" => Ok(Learner::Lasso),
            "cart" => Ok(Learner::Cart),
            other => Err(format!("unknown learner `{other}` (expected ols, lasso or cart)")),
        }
    }
}

/// A learner with concrete hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "learner", rename_all = "lowercase")]
pub enum LearnerSpec {
    Ols,
    Lasso { lambda: f64 },
    Cart { max_depth: usize, min_leaf: usize },
}

impl LearnerSpec {
    pub fn learner(&self) -> Learner {
        match self {
            LearnerSpec::Ols => Learner::Ols,
            LearnerSpec::Lasso { .. } => Learner::Lasso,
            LearnerSpec::Cart { .. } => Learner::Cart,
        }
    }

    pub fn params(&self) -> Json {
        match self {
            LearnerSpec::Ols => json!({}),
            LearnerSpec::Lasso { lambda } => json!({ "lambda": lambda }),
            LearnerSpec::Cart { max_depth, min_leaf } => json!({ "max_depth": max_depth, "min_leaf": min_leaf }),
        }
    }

    pub fn fit(&self, dataset: &Dataset) -> Result<BuiltinModel, FitError> {
        Ok(match *self {
            LearnerSpec::Ols => BuiltinModel::Ols(fit_ols(dataset)?),
            LearnerSpec::Lasso { lambda } => BuiltinModel::Lasso(fit_lasso(dataset, lambda)?),
            LearnerSpec::Cart { max_depth, min_leaf } => BuiltinModel::Cart(fit_cart(dataset, max_depth, min_leaf)?),
        })
    }
}

/// Learners to draw from and their hyperparameter ranges (inclusive).
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub learners: Vec<Learner>,
    pub cart_depth: (usize, usize),
    pub cart_min_leaf: (usize, usize),
    pub lasso_lambda: (f64, f64),
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace::new(vec![Learner::Ols, Learner::Lasso, Learner::Cart])
    }
}

impl SearchSpace {
    pub fn new(learners: Vec<Learner>) -> Self {
        SearchSpace {
            learners,
            cart_depth: (1, 30),
            cart_min_leaf: (1, 50),
            lasso_lambda: (1e-4, 1e2),
        }
    }

    fn validate(&self) -> Result<(), SweepError> {
        let (d0, d1) = self.cart_depth;
        let (l0, l1) = self.cart_min_leaf;
        let (a, b) = self.lasso_lambda;
        if self.learners.is_empty() {
            return Err(SweepError::Space("no learners".into()));
        }
        if d0 == 0 || d0 > d1 || l0 == 0 || l0 > l1 {
            return Err(SweepError::Space("empty or zero-based cart range".into()));
        }
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(SweepError::Space("lambda range must be positive and finite".into()));
        }
        Ok(())
    }

    /// Uniform learner, then uniform integers or log-uniform lambda.
    pub fn sample(&self, rng: &mut Rng) -> LearnerSpec {
        let int = |rng: &mut Rng, (lo, hi): (usize, usize)| lo + rng.index(hi - lo + 1);
        match self.learners[rng.index(self.learners.len())] {
            Learner::Ols => LearnerSpec::Ols,
            Learner::Lasso => {
                let (a, b) = self.lasso_lambda;
                LearnerSpec::Lasso {
                    lambda: rng.uniform(a.ln(), b.ln()).exp(),
                }
            }
            Learner::Cart => LearnerSpec::Cart {
                max_depth: int(rng, self.cart_depth),
                min_leaf: int(rng, self.cart_min_leaf),
            },
        }
    }
}

/// Mean absolute error over all held-out rows of a shuffled `k`-fold split.
pub fn kfold_mae(spec: &LearnerSpec, dataset: &Dataset, k: usize, rng: &mut Rng) -> Result<f64, SweepError> {
    let n = dataset.n_rows();
    if k < 2 || n < k {
        return Err(SweepError::Folds { k, n });
    }
    let y = dataset.require_target()?;
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut fold_of = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold_of[i] = pos % k;
    }
    let mut total = 0.0;
    for fold in 0..k {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| fold_of[i] == fold);
        let model = spec
            .fit(&dataset.select_rows(&train))
            .map_err(|source| SweepError::FoldFit { fold, source })?;
        let rows: Vec<_> = test.iter().map(|&i| dataset.row(i)).collect();
        let pred = model.predict_batch(&rows)?;
        total += test.iter().zip(&pred).map(|(&i, p)| (y[i] - p).abs()).sum::<f64>();
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub iterations: usize,
    pub folds: usize,
    pub seed: u64,
    pub measures: ReportConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            iterations: 100,
            folds: 5,
            seed: 42,
            measures: ReportConfig::default(),
        }
    }
}

/// Objective values of a successful candidate, all to be minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Objectives {
    pub mae: f64,
    pub nf: usize,
    pub mec: f64,
    pub ias: f64,
}

impl Objectives {
    pub fn as_array(&self) -> [f64; 4] {
        [self.mae, self.nf as f64, self.mec, self.ias]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub iteration: usize,
    pub spec: LearnerSpec,
    pub objectives: Option<Objectives>,
    /// SHA-256 of the serialized full-data model.
    pub fingerprint: Option<String>,
    pub pareto: bool,
    pub error: Option<String>,
}

impl Candidate {
    pub fn to_json(&self) -> Json {
        let o = self.objectives;
        let mut v = json!({
            "learner": self.spec.learner().name(),
            "params": self.spec.params(),
            "mae": o.map(|o| o.mae),
            "nf": o.map(|o| o.nf),
            "mec": o.map(|o| o.mec),
            "ias": o.map(|o| o.ias),
            "pareto": self.pareto,
            "iteration": self.iteration,
            "fingerprint": self.fingerprint,
        });
        if let Some(e) = &self.error {
            v["error"] = json!(e);
        }
        v
    }
}

/// Candidates as a pretty JSON array with a trailing newline.
pub fn candidates_json(candidates: &[Candidate]) -> String {
    let arr = Json::Array(candidates.iter().map(Candidate::to_json).collect());
    let mut s = serde_json::to_string_pretty(&arr).expect("candidates are serializable");
    s.push('\n');
    s
}

fn evaluate(spec: &LearnerSpec, dataset: &Dataset, config: &SweepConfig) -> Result<(Objectives, String), SweepError> {
    let mut folds = Rng::new(config.seed).substream("folds", 0);
    let mae = kfold_mae(spec, dataset, config.folds, &mut folds)?;
    let model = spec.fit(dataset)?;
    let (report, _) = compute_report(&model, dataset, &config.measures)?;
    let fingerprint = Sha256::digest(serialize_model(&model)).iter().map(|b| format!("{b:02x}")).collect();
    Ok((
        Objectives {
            mae,
            nf: report.nf.count,
            mec: report.mec.value,
            ias: report.ias.value,
        },
        fingerprint,
    ))
}

/// Samples `config.iterations` candidates, evaluates them in parallel and
/// flags the Pareto front. All candidates share one fold assignment.
pub fn run_sweep(dataset: &Dataset, space: &SearchSpace, config: &SweepConfig) -> Result<Vec<Candidate>, SweepError> {
    space.validate()?;
    dataset.require_target()?;
    let n = dataset.n_rows();
    if config.folds < 2 || n < config.folds {
        return Err(SweepError::Folds { k: config.folds, n });
    }
    let root = Rng::new(config.seed);
    let mut candidates: Vec<Candidate> = (0..config.iterations)
        .into_par_iter()
        .map(|i| {
            let spec = space.sample(&mut root.substream("sweep", i as u64));
            let (objectives, fingerprint, error) = match evaluate(&spec, dataset, config) {
                Ok((o, f)) => (Some(o), Some(f), None),
                Err(e) => (None, None, Some(e.to_string())),
            };
            Candidate {
                iteration: i,
                spec,
                objectives,
                fingerprint,
                pareto: false,
                error,
            }
        })
        .collect();
    let ok: Vec<usize> = (0..candidates.len())
        .filter(|&i| candidates[i].objectives.is_some())
        .collect();
    let points: Vec<[f64; 4]> = ok
        .iter()
        .map(|&i| candidates[i].objectives.expect("filtered").as_array())
        .collect();
    for f in pareto_front(&points) {
        candidates[ok[f]].pareto = true;
    }
    Ok(candidates)
}
