//! The black-box prediction contract and its backends.
//!
//! Everything downstream (ALE, the complexity measures, the sweep) sees a
//! model only through [`Predictor::predict_batch`]. Three backends exist:
//! parsed arithmetic expressions ([`ExpressionModel`]), built-in learners
//! ([`BuiltinModel`]) and a remote JSON endpoint ([`HttpPredictor`]).

mod cart;
mod encode;
mod expr;
mod http;
mod linear;
mod model;
mod server;

use crate::tabular::{DataError, FeatureKind, FeatureSpec, Row};

pub use cart::{fit_cart, CartModel, Node, SplitRule};
pub use encode::Encoder;
pub use expr::{parse_expression, BinOp, EvalError, Expr, ExpressionModel, Func, ParseError};
pub use http::{http_predict, HttpConfig, HttpPredictor};
pub use linear::{fit_lasso, fit_ols, LassoModel, LinearModel};
pub use model::{deserialize_model, serialize_model, BuiltinModel, ModelError};
pub use server::{MockServer, ServerError};

/// Training failures of the built-in learners.
#[derive(Debug, thiserror::Error)]
pub enum FitError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("rank-deficient design: {0}")]
    RankDeficient(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Whether a predictor may be called from several threads at once.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConcurrencyClass {
    ConcurrentSafe,
    SerialOnly,
}

#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("feature `{feature}`: unknown level `{level}`")]
    UnknownLevel { feature: String, level: String },
    #[error("feature `{feature}`: expected a {expected} value")]
    WrongValueType {
        feature: String,
        expected: &'static str,
    },
    #[error("row {row} has {found} values, schema has {expected}")]
    RowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("evaluation failed at row {row}: {source}")]
    Eval { row: usize, source: EvalError },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("server returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("server returned {found} predictions for {expected} rows")]
    LengthMismatch { expected: usize, found: usize },
    #[error("prediction {index} is not a finite number")]
    NonFinite { index: usize },
    #[error("malformed response: {0}")]
    Protocol(String),
}

/// A black-box prediction function over rows of a fixed schema.
///
/// Implementations must be pure: the same batch yields the same outputs,
/// output length equals input length and every output is finite.
pub trait Predictor: Send + Sync {
    fn schema(&self) -> &[FeatureSpec];

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError>;

    fn concurrency(&self) -> ConcurrencyClass {
        ConcurrencyClass::ConcurrentSafe
    }
}

impl<P: Predictor + ?Sized> Predictor for &P {
    fn schema(&self) -> &[FeatureSpec] {
        (**self).schema()
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        (**self).predict_batch(rows)
    }

    fn concurrency(&self) -> ConcurrencyClass {
        (**self).concurrency()
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn schema(&self) -> &[FeatureSpec] {
        (**self).schema()
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        (**self).predict_batch(rows)
    }

    fn concurrency(&self) -> ConcurrencyClass {
        (**self).concurrency()
    }
}

impl<P: Predictor + ?Sized> Predictor for std::sync::Arc<P> {
    fn schema(&self) -> &[FeatureSpec] {
        (**self).schema()
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        (**self).predict_batch(rows)
    }

    fn concurrency(&self) -> ConcurrencyClass {
        (**self).concurrency()
    }
}

/// Checks that a predictor can consume rows of `data`: same feature names in
/// the same order, numeric where numeric and categorical where categorical.
pub fn check_schema(predictor: &[FeatureSpec], data: &[FeatureSpec]) -> Result<(), PredictError> {
    if predictor.len() != data.len() {
        return Err(PredictError::SchemaMismatch(format!(
            "predictor expects {} features, data has {}",
            predictor.len(),
            data.len()
        )));
    }
    for (a, b) in predictor.iter().zip(data) {
        if a.name != b.name {
            return Err(PredictError::SchemaMismatch(format!(
                "expected feature `{}`, found `{}`",
                a.name, b.name
            )));
        }
        if a.kind.is_numeric() != b.kind.is_numeric() {
            return Err(PredictError::SchemaMismatch(format!(
                "feature `{}` is {} in the predictor but {} in the data",
                a.name,
                kind_word(&a.kind),
                kind_word(&b.kind)
            )));
        }
    }
    Ok(())
}

fn kind_word(kind: &FeatureKind) -> &'static str {
    match kind {
        FeatureKind::Numeric => "numeric",
        FeatureKind::Categorical { .. } => "categorical",
    }
}

pub(crate) fn check_row_width(schema: &[FeatureSpec], rows: &[Row]) -> Result<(), PredictError> {
    for (i, r) in rows.iter().enumerate() {
        if r.len() != schema.len() {
            return Err(PredictError::RowWidth {
                row: i,
                expected: schema.len(),
                found: r.len(),
            });
        }
    }
    Ok(())
}

/// Wraps any closure as a predictor; handy for analytic test functions.
pub struct FnPredictor<F> {
    schema: Vec<FeatureSpec>,
    f: F,
}

impl<F> FnPredictor<F>
where
    F: Fn(&Row) -> f64 + Send + Sync,
{
    pub fn new(schema: Vec<FeatureSpec>, f: F) -> Self {
        FnPredictor { schema, f }
    }
}

impl<F> Predictor for FnPredictor<F>
where
    F: Fn(&Row) -> f64 + Send + Sync,
{
    fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        check_row_width(&self.schema, rows)?;
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                let v = (self.f)(r);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(PredictError::NonFinite { index: i })
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(name: &str, kind: FeatureKind) -> FeatureSpec {
        FeatureSpec {
            name: name.into(),
            kind,
        }
    }

    #[test]
    fn schema_check_names_and_kinds() {
        let a = vec![spec("x", FeatureKind::Numeric)];
        assert!(check_schema(&a, &a).is_ok());
        let b = vec![spec("y", FeatureKind::Numeric)];
        assert!(check_schema(&a, &b).is_err());
        let c = vec![spec(
            "x",
            FeatureKind::Categorical {
                levels: vec!["a".into()],
            },
        )];
        assert!(check_schema(&a, &c).is_err());
    }

    #[test]
    fn fn_predictor_rejects_non_finite() {
        let p = FnPredictor::new(vec![spec("x", FeatureKind::Numeric)], |r| {
            1.0 / r[0].as_num().unwrap()
        });
        assert!(p.predict_batch(&[vec![crate::tabular::Value::Num(0.0)]]).is_err());
        assert_eq!(p.predict_batch(&[]).unwrap(), Vec::<f64>::new());
    }
}
