//! Mock predict server speaking the same protocol as [`super::HttpPredictor`].
//!
//! Requests are handled sequentially on one background thread.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value as Json};
use tiny_http::{Header, Method, Response, Server};

use super::Predictor;
use crate::tabular::{FeatureKind, FeatureSpec, Row, Value};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {message}")]
    Bind { addr: String, message: String },
}

pub struct MockServer {
    server: Arc<Server>,
    port: u16,
    requests: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Binds `addr` (e.g. `127.0.0.1:0` for an ephemeral port) and starts
    /// serving `model`.
    pub fn start(model: Arc<dyn Predictor>, addr: &str) -> Result<MockServer, ServerError> {
        let server = Server::http(addr).map_err(|e| ServerError::Bind {
            addr: addr.to_string(),
            message: e.to_string(),
        })?;
        let port = server
            .server_addr()
            .to_ip()
            .map(|a| a.port())
            .unwrap_or_default();
        let server = Arc::new(server);
        let requests = Arc::new(AtomicUsize::new(0));
        let handle = {
            let server = Arc::clone(&server);
            let requests = Arc::clone(&requests);
            std::thread::spawn(move || serve(&server, model.as_ref(), &requests))
        };
        Ok(MockServer {
            server,
            port,
            requests,
            handle: Some(handle),
        })
    }

    pub fn port(&self) -> u16 {
        self.port
    }

    pub fn endpoint(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    /// Number of `/predict` requests received so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn serve(server: &Server, model: &dyn Predictor, requests: &AtomicUsize) {
    let json_header = Header::from_bytes("Content-Type", "application/json").expect("static header");
    // recv() fails or yields None once unblock() is called
    while let Ok(mut req) = server.recv() {
        let (status, body) = if req.url() != "/predict" {
            (404, json!({ "error": "not found" }))
        } else if *req.method() != Method::Post {
            (405, json!({ "error": "use POST" }))
        } else {
            requests.fetch_add(1, Ordering::SeqCst);
            let mut text = String::new();
            match req.as_reader().read_to_string(&mut text) {
                Err(e) => (400, json!({ "error": e.to_string() })),
                Ok(_) => handle_predict(&text, model),
            }
        };
        let resp = Response::from_string(body.to_string())
            .with_status_code(status)
            .with_header(json_header.clone());
        let _ = req.respond(resp);
    }
}

fn handle_predict(body: &str, model: &dyn Predictor) -> (u16, Json) {
    let rows = match parse_instances(body, model.schema()) {
        Ok(r) => r,
        Err(msg) => return (400, json!({ "error": msg })),
    };
    match model.predict_batch(&rows) {
        Ok(p) => (200, json!({ "predictions": p })),
        Err(e) => (422, json!({ "error": e.to_string() })),
    }
}

fn parse_instances(body: &str, schema: &[FeatureSpec]) -> Result<Vec<Row>, String> {
    let v: Json = serde_json::from_str(body).map_err(|e| format!("malformed json: {e}"))?;
    let instances = v
        .get("instances")
        .and_then(Json::as_array)
        .ok_or("missing `instances` array")?;
    instances
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            let cells = inst
                .as_array()
                .ok_or_else(|| format!("instance {i} is not an array"))?;
            if cells.len() != schema.len() {
                return Err(format!(
                    "instance {i} has {} values, expected {}",
                    cells.len(),
                    schema.len()
                ));
            }
            cells
                .iter()
                .zip(schema)
                .map(|(c, f)| match (&f.kind, c) {
                    (FeatureKind::Numeric, Json::Number(n)) => n
                        .as_f64()
                        .map(Value::Num)
                        .ok_or_else(|| format!("instance {i}: `{}` out of range", f.name)),
                    (FeatureKind::Categorical { .. }, Json::String(s)) => Ok(Value::Cat(s.as_str().into())),
                    _ => Err(format!("instance {i}: wrong type for `{}`", f.name)),
                })
                .collect()
        })
        .collect()
}
