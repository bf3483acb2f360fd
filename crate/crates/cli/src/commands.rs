use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::{mpsc, Arc};

use fdc_core::ale::{build_ale_model, estimate_feature};
use fdc_core::measures::{compute_report, ReportConfig};
use fdc_core::predict::{
    check_schema, deserialize_model, parse_expression, serialize_model, BuiltinModel, HttpConfig, HttpPredictor,
    MockServer,
};
use fdc_core::sweep::{candidates_json, run_sweep, Candidate, LearnerSpec, SearchSpace, SweepConfig};
use fdc_core::tabular::{load_csv, Dataset, FeatureKind};
use fdc_core::Predictor;
use serde_json::Value as Json;

use crate::args::{AleArgs, DataArgs, HttpArgs, LearnerArg, MeasureArgs, MeasureConfigArgs, ServerArgs, SourceArgs, SweepArgs, TrainArgs};
use crate::error::CliError;

fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::data(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::data(format!("cannot write to standard output: {e}")))
        }
    }
}

fn pretty(v: &Json) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn read_model(path: &Path) -> Result<BuiltinModel, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    Ok(deserialize_model(&bytes)?)
}

fn load_data(data: &DataArgs, overrides: &HashMap<String, FeatureKind>) -> Result<Dataset, CliError> {
    Ok(load_csv(&data.data, Some(&data.target), overrides)?)
}

/// Loads the dataset and resolves exactly one model source against it.
fn load_source(
    data: &DataArgs,
    source: &SourceArgs,
    http: &HttpArgs,
) -> Result<(Dataset, Box<dyn Predictor>), CliError> {
    if let Some(path) = &source.model {
        let model = read_model(path)?;
        let overrides = model
            .schema()
            .iter()
            .map(|f| (f.name.clone(), f.kind.clone()))
            .collect();
        let ds = load_data(data, &overrides)?;
        check_schema(model.schema(), &ds.schema())?;
        return Ok((ds, Box::new(model)));
    }
    let ds = load_data(data, &HashMap::new())?;
    let predictor: Box<dyn Predictor> = match (&source.expr, &source.endpoint) {
        (Some(src), _) => Box::new(parse_expression(src, &ds.schema())?),
        (None, Some(url)) => Box::new(HttpPredictor::new(
            url,
            ds.schema(),
            HttpConfig {
                batch_size: http.batch_size as usize,
                timeout_ms: http.timeout_ms,
                retries: http.retries,
            },
        )),
        (None, None) => return Err(CliError::usage("one of --expr, --model or --endpoint is required")),
    };
    Ok((ds, predictor))
}

fn report_config(c: &MeasureConfigArgs) -> ReportConfig {
    ReportConfig {
        seed: c.seed,
        grid_size: c.grid_size as usize,
        epsilon: c.epsilon,
        max_seg: c.max_seg as usize,
        nf_samples: c.nf_samples as usize,
        nf_tol: c.nf_tol,
    }
}

pub fn measure(args: MeasureArgs) -> Result<(), CliError> {
    let (ds, predictor) = load_source(&args.data, &args.source, &args.http)?;
    let (report, ale) = compute_report(&*predictor, &ds, &report_config(&args.config))?;
    let t = &report.timing;
    eprintln!(
        "timing: ale {:.1} ms, nf {:.1} ms, ias {:.1} ms, mec {:.1} ms",
        t.ale.as_secs_f64() * 1e3,
        t.nf.as_secs_f64() * 1e3,
        t.ias.as_secs_f64() * 1e3,
        t.mec.as_secs_f64() * 1e3
    );
    if let Some(path) = &args.curves {
        write_output(Some(path), &pretty(&ale.curves_json()))?;
    }
    write_output(args.out.as_deref(), &report.to_json_string())
}

pub fn ale(args: AleArgs) -> Result<(), CliError> {
    let (ds, predictor) = load_source(&args.data, &args.source, &args.http)?;
    let grid = args.grid_size as usize;
    let curves = match &args.feature {
        Some(name) => {
            let j = ds
                .feature_index(name)
                .ok_or_else(|| CliError::usage(format!("unknown feature `{name}`")))?;
            check_schema(predictor.schema(), &ds.schema())?;
            Json::Array(vec![estimate_feature(&*predictor, &ds, j, grid)?.to_json()])
        }
        None => build_ale_model(&*predictor, &ds, grid)?.curves_json(),
    };
    write_output(args.out.as_deref(), &pretty(&curves))
}

pub fn train(args: TrainArgs) -> Result<(), CliError> {
    let spec = match args.learner {
        LearnerArg::Ols => LearnerSpec::Ols,
        LearnerArg::Lasso => LearnerSpec::Lasso {
            lambda: args.lambda.ok_or_else(|| CliError::usage("--lambda is required for lasso"))?,
        },
        LearnerArg::Cart => LearnerSpec::Cart {
            max_depth: args
                .max_depth
                .ok_or_else(|| CliError::usage("--max-depth is required for cart"))?,
            min_leaf: args.min_leaf,
        },
    };
    let ds = load_data(&args.data, &HashMap::new())?;
    let model = spec.fit(&ds)?;
    let y = ds.require_target()?;
    let pred = model.predict_batch(&ds.rows())?;
    let mse = y.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
    eprintln!("training MSE: {mse}");
    let bytes = serialize_model(&model);
    write_output(args.out.as_deref(), std::str::from_utf8(&bytes).expect("model JSON is UTF-8"))
}

fn params_text(spec: &LearnerSpec) -> String {
    match spec {
        LearnerSpec::Ols => "-".into(),
        LearnerSpec::Lasso { lambda } => format!("lambda={lambda:.4e}"),
        LearnerSpec::Cart { max_depth, min_leaf } => format!("max_depth={max_depth} min_leaf={min_leaf}"),
    }
}

fn pareto_table(candidates: &[Candidate]) -> String {
    let mut front: Vec<&Candidate> = candidates.iter().filter(|c| c.pareto).collect();
    front.sort_by(|a, b| {
        let (a, b) = (a.objectives.unwrap(), b.objectives.unwrap());
        a.mae.total_cmp(&b.mae)
    });
    let mut s = format!(
        "{:>5}  {:<7} {:<28} {:>10} {:>4} {:>7} {:>7}\n",
        "iter", "learner", "params", "mae", "nf", "mec", "ias"
    );
    for c in front {
        let o = c.objectives.expect("front members have objectives");
        s += &format!(
            "{:>5}  {:<7} {:<28} {:>10.4} {:>4} {:>7.2} {:>7.3}\n",
            c.iteration,
            c.spec.learner().name(),
            params_text(&c.spec),
            o.mae,
            o.nf,
            o.mec,
            o.ias
        );
    }
    s
}

pub fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let ds = load_data(&args.data, &HashMap::new())?;
    let mut learners = args.learners.clone();
    learners.dedup();
    let config = SweepConfig {
        iterations: args.iterations as usize,
        folds: args.folds,
        seed: args.config.seed,
        measures: report_config(&args.config),
    };
    let candidates = run_sweep(&ds, &SearchSpace::new(learners), &config)?;
    write_output(Some(&args.out), &candidates_json(&candidates))?;
    let failed = candidates.iter().filter(|c| c.error.is_some()).count();
    let front = candidates.iter().filter(|c| c.pareto).count();
    eprintln!(
        "{} candidates, {front} on the Pareto front, {failed} failed; wrote {}",
        candidates.len(),
        args.out.display()
    );
    write_output(None, &pareto_table(&candidates))
}

pub fn mock_server(args: ServerArgs) -> Result<(), CliError> {
    let model = read_model(&args.model)?;
    let server = MockServer::start(Arc::new(model), &format!("127.0.0.1:{}", args.port))?;
    let (tx, rx) = mpsc::channel();
    ctrlc::set_handler(move || {
        let _ = tx.send(());
    })
    .map_err(|e| CliError::predictor(format!("cannot install signal handler: {e}")))?;
    eprintln!("listening on {}", server.endpoint());
    let _ = rx.recv();
    let _ = writeln!(std::io::stderr(), "shutting down after {} requests", server.request_count());
    server.shutdown();
    Ok(())
}
