use std::sync::Arc;
use std::thread;

use fdc_core::predict::{parse_expression, HttpConfig, HttpPredictor, MockServer, PredictError};
use fdc_core::tabular::{Column, Dataset, FeatureSpec};
use fdc_core::Predictor;

fn data(n: usize) -> Dataset {
    let x: Vec<f64> = (0..n).map(|i| i as f64 * 0.5).collect();
    let c: Vec<&str> = (0..n).map(|i| if i % 3 == 0 { "u" } else { "v" }).collect();
    Dataset::new(vec![Column::numeric("x", x), Column::categorical("c", &c)], None).unwrap()
}

fn client(endpoint: &str, schema: Vec<FeatureSpec>, batch_size: usize) -> HttpPredictor {
    HttpPredictor::new(
        endpoint,
        schema,
        HttpConfig {
            batch_size,
            timeout_ms: 5_000,
            retries: 0,
        },
    )
}

#[test]
fn chunked_requests_preserve_order() {
    let ds = data(250);
    let model = parse_expression(r#"x^2 - 3*(c == "u")"#, &ds.schema()).unwrap();
    let local = model.predict_batch(&ds.rows()).unwrap();
    let server = MockServer::start(Arc::new(model), "127.0.0.1:0").unwrap();
    let remote = client(&server.endpoint(), ds.schema(), 100);
    assert_eq!(remote.predict_batch(&ds.rows()).unwrap(), local);
    assert_eq!(server.request_count(), 3);
}

#[test]
fn server_reports_predictor_failures() {
    let ds = data(4);
    let model = parse_expression("log(x)", &ds.schema()).unwrap();
    let server = MockServer::start(Arc::new(model), "127.0.0.1:0").unwrap();
    let remote = client(&server.endpoint(), ds.schema(), 10);
    // x = 0 in the first row
    match remote.predict_batch(&ds.rows()) {
        Err(PredictError::Status { status: 422, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_path_and_method() {
    let ds = data(2);
    let model = parse_expression("x", &ds.schema()).unwrap();
    let server = MockServer::start(Arc::new(model), "127.0.0.1:0").unwrap();
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .http_status_as_error(false)
        .build()
        .into();
    let r = agent.get(format!("{}/predict", server.endpoint())).call().unwrap();
    assert_eq!(r.status().as_u16(), 405);
    let r = agent.post(format!("{}/other", server.endpoint())).send("{}").unwrap();
    assert_eq!(r.status().as_u16(), 404);
    let r = agent.post(format!("{}/predict", server.endpoint())).send("not json").unwrap();
    assert_eq!(r.status().as_u16(), 400);
}

#[test]
fn wrong_prediction_count_is_rejected() {
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let port = server.server_addr().to_ip().unwrap().port();
    let handle = thread::spawn(move || {
        let req = server.recv().unwrap();
        req.respond(tiny_http::Response::from_string(r#"{"predictions": [1.0]}"#)).unwrap();
    });
    let ds = data(3);
    let remote = client(&format!("http://127.0.0.1:{port}"), ds.schema(), 10);
    match remote.predict_batch(&ds.rows()) {
        Err(PredictError::LengthMismatch { expected: 3, found: 1 }) => {}
        other => panic!("{other:?}"),
    }
    handle.join().unwrap();
}

#[test]
fn port_in_use_is_a_bind_error() {
    let ds = data(2);
    let model = Arc::new(parse_expression("x", &ds.schema()).unwrap());
    let first = MockServer::start(model.clone(), "127.0.0.1:0").unwrap();
    let addr = format!("127.0.0.1:{}", first.port());
    assert!(MockServer::start(model, &addr).is_err());
}

#[test]
fn empty_batch_gives_empty_predictions() {
    let ds = data(2);
    let model = parse_expression("x", &ds.schema()).unwrap();
    let server = MockServer::start(Arc::new(model), "127.0.0.1:0").unwrap();
    let body: serde_json::Value = ureq::post(format!("{}/predict", server.endpoint()))
        .send_json(serde_json::json!({"instances": []}))
        .unwrap()
        .body_mut()
        .read_json()
        .unwrap();
    assert_eq!(body, serde_json::json!({"predictions": []}));
    let remote = client(&server.endpoint(), ds.schema(), 10);
    assert!(remote.predict_batch(&[]).unwrap().is_empty());
}
