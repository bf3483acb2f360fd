//! Model-agnostic complexity measures for black-box prediction functions.
//!
//! A prediction function is decomposed into a constant, first-order
//! accumulated local effects (ALE) and an interaction remainder. Three
//! measures summarise the decomposition:
//!
//! * **NF**, the number of features whose perturbation changes a prediction;
//! * **IAS**, the share of prediction variance the additive ALE model misses;
//! * **MEC**, the variance-weighted number of parameters of piecewise-linear
//!   approximations to the ALE main effects.
//!
//! [`sweep`] runs a random hyperparameter search over the built-in learners
//! and extracts the Pareto front over (MAE, NF, MEC, IAS).

pub mod ale;
pub mod measures;
pub mod predict;
pub mod sweep;
pub mod tabular;

pub use ale::{AleCurve, AleError, AleModel, Grid};
pub use measures::{compute_report, ComplexityReport, MeasureError, ReportConfig};
pub use predict::{BuiltinModel, ConcurrencyClass, ExpressionModel, HttpPredictor, PredictError, Predictor};
pub use sweep::{pareto_front, run_sweep, Candidate, LearnerSpec, SearchSpace, SweepConfig};
pub use tabular::{Dataset, FeatureKind, FeatureSpec, Rng, Row, Value};
