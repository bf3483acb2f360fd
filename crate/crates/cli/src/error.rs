use fdc_core::ale::AleError;
use fdc_core::measures::MeasureError;
use fdc_core::predict::{FitError, ModelError, ParseError, PredictError, ServerError};
use fdc_core::sweep::SweepError;
use fdc_core::tabular::DataError;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Usage = 1,
    Data = 2,
    Predictor = 3,
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { exit: Exit::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError { exit: Exit::Data, message: message.into() }
    }

    pub fn predictor(message: impl Into<String>) -> Self {
        CliError { exit: Exit::Predictor, message: message.into() }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::data(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::data(format!("invalid model: {e}"))
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::usage(format!("invalid expression: {e}"))
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::InvalidParameter(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<PredictError> for CliError {
    fn from(e: PredictError) -> Self {
        match e {
            PredictError::SchemaMismatch(_)
            | PredictError::UnknownLevel { .. }
            | PredictError::WrongValueType { .. }
            | PredictError::RowWidth { .. } => CliError::data(e.to_string()),
            _ => CliError::predictor(e.to_string()),
        }
    }
}

impl From<AleError> for CliError {
    fn from(e: AleError) -> Self {
        match e {
            AleError::Predict(p) => p.into(),
            other => CliError::data(other.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Predict(p) => p.into(),
            MeasureError::Ale(a) => a.into(),
            MeasureError::Config(m) => CliError::usage(m),
            MeasureError::Mismatch(m) => CliError::predictor(m),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Folds { .. } | SweepError::Space(_) => CliError::usage(e.to_string()),
            SweepError::Fit(f) => f.into(),
            SweepError::Predict(p) => p.into(),
            SweepError::Measure(m) => m.into(),
            SweepError::Data(d) => d.into(),
            SweepError::FoldFit { .. } => CliError::data(e.to_string()),
        }
    }
}

impl From<ServerError> for CliError {
    fn from(e: ServerError) -> Self {
        CliError::predictor(e.to_string())
    }
}
