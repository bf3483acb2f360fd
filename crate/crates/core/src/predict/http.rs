//! Client side of the JSON predict protocol.
//!
//! `POST {endpoint}/predict` with body `{"instances": [[v1, v2, ...], ...]}`,
//! numeric features as JSON numbers and categorical features as strings, in
//! schema order. A `200` response carries `{"predictions": [p1, ...]}`.

use std::time::Duration;

use serde_json::{json, Value as Json};

use super::{check_row_width, ConcurrencyClass, PredictError, Predictor};
use crate::tabular::{FeatureSpec, Row, Value};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    pub batch_size: usize,
    pub timeout_ms: u64,
    pub retries: usize,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            batch_size: 256,
            timeout_ms: 30_000,
            retries: 2,
        }
    }
}

/// Remote predictor. Requests are issued one at a time, so it reports
/// [`ConcurrencyClass::SerialOnly`].
pub struct HttpPredictor {
    url: String,
    schema: Vec<FeatureSpec>,
    config: HttpConfig,
    agent: ureq::Agent,
}

impl std::fmt::Debug for HttpPredictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpPredictor")
            .field("url", &self.url)
            .field("config", &self.config)
            .finish()
    }
}

impl HttpPredictor {
    pub fn new(endpoint: &str, schema: Vec<FeatureSpec>, config: HttpConfig) -> Self {
        assert!(config.batch_size >= 1, "batch_size must be positive");
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpPredictor {
            url: format!("{}/predict", endpoint.trim_end_matches('/')),
            schema,
            config,
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn config(&self) -> &HttpConfig {
        &self.config
    }

    fn encode(&self, rows: &[Row]) -> Vec<u8> {
        let instances: Vec<Json> = rows
            .iter()
            .map(|r| {
                Json::Array(
                    r.iter()
                        .map(|v| match v {
                            Value::Num(x) => json!(x),
                            Value::Cat(s) => Json::String(s.to_string()),
                        })
                        .collect(),
                )
            })
            .collect();
        serde_json::to_vec(&json!({ "instances": instances })).expect("request is serializable")
    }

    fn post_chunk(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        let body = self.encode(rows);
        let attempts = self.config.retries + 1;
        let mut last_err = String::new();
        for _ in 0..attempts {
            let sent = self
                .agent
                .post(&self.url)
                .header("content-type", "application/json")
                .send(&body[..]);
            let resp = match sent {
                Ok(r) => r,
                Err(e) => {
                    last_err = e.to_string();
                    continue;
                }
            };
            let status = resp.status().as_u16();
            let text = resp
                .into_body()
                .read_to_string()
                .map_err(|e| PredictError::Protocol(e.to_string()))?;
            if status != 200 {
                return Err(PredictError::Status { status, body: text });
            }
            return decode_predictions(&text, rows.len());
        }
        Err(PredictError::Transport {
            attempts,
            message: last_err,
        })
    }
}

fn decode_predictions(text: &str, expected: usize) -> Result<Vec<f64>, PredictError> {
    let v: Json = serde_json::from_str(text).map_err(|e| PredictError::Protocol(e.to_string()))?;
    let preds = v
        .get("predictions")
        .and_then(Json::as_array)
        .ok_or_else(|| PredictError::Protocol("missing `predictions` array".into()))?;
    if preds.len() != expected {
        return Err(PredictError::LengthMismatch {
            expected,
            found: preds.len(),
        });
    }
    preds
        .iter()
        .enumerate()
        .map(|(i, p)| match p.as_f64() {
            Some(x) if x.is_finite() => Ok(x),
            _ => Err(PredictError::NonFinite { index: i }),
        })
        .collect()
}

impl Predictor for HttpPredictor {
    fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        check_row_width(&self.schema, rows)?;
        let mut out = Vec::with_capacity(rows.len());
        for (k, chunk) in rows.chunks(self.config.batch_size).enumerate() {
            let preds = self.post_chunk(chunk).map_err(|e| match e {
                PredictError::NonFinite { index } => PredictError::NonFinite {
                    index: k * self.config.batch_size + index,
                },
                other => other,
            })?;
            out.extend(preds);
        }
        Ok(out)
    }

    fn concurrency(&self) -> ConcurrencyClass {
        ConcurrencyClass::SerialOnly
    }
}

/// Chunked remote prediction; see [`HttpPredictor`].
pub fn http_predict(predictor: &HttpPredictor, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
    predictor.predict_batch(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_checks_length_and_finiteness() {
        assert_eq!(decode_predictions(r#"{"predictions":[1,2.5]}"#, 2).unwrap(), [1.0, 2.5]);
        assert!(matches!(
            decode_predictions(r#"{"predictions":[1,2,3]}"#, 2),
            Err(PredictError::LengthMismatch { expected: 2, found: 3 })
        ));
        assert!(matches!(
            decode_predictions(r#"{"predictions":[1,null]}"#, 2),
            Err(PredictError::NonFinite { index: 1 })
        ));
        assert!(matches!(
            decode_predictions(r#"{"preds":[]}"#, 0),
            Err(PredictError::Protocol(_))
        ));
    }

    #[test]
    fn unreachable_server_is_transport_error() {
        // port 9 (discard) is essentially never listening on test hosts
        let p = HttpPredictor::new(
            "http://127.0.0.1:9",
            vec![FeatureSpec {
                name: "x".into(),
                kind: crate::tabular::FeatureKind::Numeric,
            }],
            HttpConfig {
                batch_size: 10,
                timeout_ms: 2_000,
                retries: 1,
            },
        );
        let err = p.predict_batch(&[vec![Value::Num(1.0)]]).unwrap_err();
        assert!(matches!(err, PredictError::Transport { attempts: 2, .. }), "{err}");
        assert!(p.predict_batch(&[]).unwrap().is_empty());
    }
}
