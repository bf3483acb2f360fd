//! Built-in learners as one enum, plus their JSON form.
//!
//! ```json
//! {"kind": "ols",   "schema": [...], "intercept": 1.0,
//!  "coefficients": [{"feature": "x1", "value": 2.0},
//!                   {"feature": "c", "level": "b", "value": 0.5}]}
//! {"kind": "lasso", ...same as ols..., "lambda": 0.1}
//! {"kind": "cart",  "schema": [...], "max_depth": 3, "min_leaf": 5,
//!  "tree": {"feature": "x1", "threshold": 0.5,
//!           "left": {"value": 1.0, "count": 10}, "right": {...}}}
//! ```
//!
//! Schema entries are `{"name": .., "kind": "numeric"}` or
//! `{"name": .., "kind": "categorical", "levels": [..]}`. Categorical splits
//! carry `"left_levels"` instead of `"threshold"`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::cart::{CartModel, Node, SplitRule};
use super::linear::{LassoModel, LinearModel};
use super::{Encoder, PredictError, Predictor};
use crate::tabular::{FeatureKind, FeatureSpec, Row};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("malformed model json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid model: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinModel {
    Ols(LinearModel),
    Lasso(LassoModel),
    Cart(CartModel),
}

impl BuiltinModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            BuiltinModel::Ols(_) => "ols",
            BuiltinModel::Lasso(_) => "lasso",
            BuiltinModel::Cart(_) => "cart",
        }
    }

    /// Features the model structurally depends on.
    pub fn used_features(&self) -> Vec<usize> {
        match self {
            BuiltinModel::Ols(m) => m.used_features(),
            BuiltinModel::Lasso(m) => m.linear.used_features(),
            BuiltinModel::Cart(m) => m.used_features(),
        }
    }
}

impl Predictor for BuiltinModel {
    fn schema(&self) -> &[FeatureSpec] {
        match self {
            BuiltinModel::Ols(m) => m.schema(),
            BuiltinModel::Lasso(m) => m.linear.schema(),
            BuiltinModel::Cart(m) => m.schema(),
        }
    }

    fn predict_batch(&self, rows: &[Row]) -> Result<Vec<f64>, PredictError> {
        match self {
            BuiltinModel::Ols(m) => m.predict_batch(rows),
            BuiltinModel::Lasso(m) => m.linear.predict_batch(rows),
            BuiltinModel::Cart(m) => m.predict_batch(rows),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ModelJson {
    Ols {
        schema: Vec<FeatureSpec>,
        intercept: f64,
        coefficients: Vec<CoefJson>,
    },
    Lasso {
        schema: Vec<FeatureSpec>,
        intercept: f64,
        coefficients: Vec<CoefJson>,
        lambda: f64,
    },
    Cart {
        schema: Vec<FeatureSpec>,
        max_depth: usize,
        min_leaf: usize,
        tree: NodeJson,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefJson {
    feature: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level: Option<String>,
    value: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeJson {
    Split {
        feature: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        left_levels: Option<Vec<String>>,
        left: Box<NodeJson>,
        right: Box<NodeJson>,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

fn coefs_to_json(m: &LinearModel) -> Vec<CoefJson> {
    m.encoder
        .columns()
        .iter()
        .zip(&m.coefficients)
        .map(|((j, level), v)| CoefJson {
            feature: m.encoder.schema()[*j].name.clone(),
            level: level.clone(),
            value: *v,
        })
        .collect()
}

fn node_to_json(node: &Node, schema: &[FeatureSpec]) -> NodeJson {
    match node {
        Node::Leaf { value, count } => NodeJson::Leaf {
            value: *value,
            count: *count,
        },
        Node::Split {
            feature,
            rule,
            left,
            right,
        } => {
            let (threshold, left_levels) = match rule {
                SplitRule::Threshold(t) => (Some(*t), None),
                SplitRule::Levels(l) => (None, Some(l.clone())),
            };
            NodeJson::Split {
                feature: schema[*feature].name.clone(),
                threshold,
                left_levels,
                left: Box::new(node_to_json(left, schema)),
                right: Box::new(node_to_json(right, schema)),
            }
        }
    }
}

/// Pretty-printed JSON; the same model always yields the same bytes.
pub fn serialize_model(model: &BuiltinModel) -> Vec<u8> {
    let json = match model {
        BuiltinModel::Ols(m) => ModelJson::Ols {
            schema: m.encoder.schema().to_vec(),
            intercept: m.intercept,
            coefficients: coefs_to_json(m),
        },
        BuiltinModel::Lasso(m) => ModelJson::Lasso {
            schema: m.linear.encoder.schema().to_vec(),
            intercept: m.linear.intercept,
            coefficients: coefs_to_json(&m.linear),
            lambda: m.lambda,
        },
        BuiltinModel::Cart(m) => ModelJson::Cart {
            schema: m.schema.clone(),
            max_depth: m.max_depth,
            min_leaf: m.min_leaf,
            tree: node_to_json(&m.root, &m.schema),
        },
    };
    let mut out = serde_json::to_vec_pretty(&json).expect("model json is always serializable");
    out.push(b'\n');
    out
}

fn invalid(msg: impl Into<String>) -> ModelError {
    ModelError::Invalid(msg.into())
}

fn validate_schema(schema: &[FeatureSpec]) -> Result<(), ModelError> {
    if schema.is_empty() {
        return Err(invalid("schema is empty"));
    }
    let mut names = HashSet::new();
    for f in schema {
        if !names.insert(f.name.as_str()) {
            return Err(invalid(format!("duplicate feature `{}`", f.name)));
        }
        if let FeatureKind::Categorical { levels } = &f.kind {
            let set: HashSet<&String> = levels.iter().collect();
            if levels.is_empty() || set.len() != levels.len() {
                return Err(invalid(format!("feature `{}`: levels must be non-empty and unique", f.name)));
            }
        }
    }
    Ok(())
}

fn finite(v: f64, what: &str) -> Result<f64, ModelError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(format!("{what} is not finite")))
    }
}

fn linear_from_json(
    schema: Vec<FeatureSpec>,
    intercept: f64,
    coefficients: Vec<CoefJson>,
) -> Result<LinearModel, ModelError> {
    validate_schema(&schema)?;
    let encoder = Encoder::new(&schema);
    if coefficients.len() != encoder.width() {
        return Err(invalid(format!(
            "expected {} coefficients, found {}",
            encoder.width(),
            coefficients.len()
        )));
    }
    for ((j, level), c) in encoder.columns().iter().zip(&coefficients) {
        if schema[*j].name != c.feature || *level != c.level {
            return Err(invalid(format!(
                "coefficient for `{}`{} out of place",
                c.feature,
                c.level.as_deref().map(|l| format!("={l}")).unwrap_or_default()
            )));
        }
        finite(c.value, "coefficient")?;
    }
    Ok(LinearModel {
        encoder,
        intercept: finite(intercept, "intercept")?,
        coefficients: coefficients.iter().map(|c| c.value).collect(),
    })
}

fn node_from_json(node: NodeJson, schema: &[FeatureSpec]) -> Result<Node, ModelError> {
    match node {
        NodeJson::Leaf { value, count } => Ok(Node::Leaf {
            value: finite(value, "leaf value")?,
            count,
        }),
        NodeJson::Split {
            feature,
            threshold,
            left_levels,
            left,
            right,
        } => {
            let j = schema
                .iter()
                .position(|f| f.name == feature)
                .ok_or_else(|| invalid(format!("split on unknown feature `{feature}`")))?;
            let rule = match (&schema[j].kind, threshold, left_levels) {
                (FeatureKind::Numeric, Some(t), None) => SplitRule::Threshold(finite(t, "threshold")?),
                (FeatureKind::Categorical { levels }, None, Some(left)) => {
                    if let Some(bad) = left.iter().find(|l| !levels.contains(l)) {
                        return Err(invalid(format!("split on `{feature}` names unknown level `{bad}`")));
                    }
                    SplitRule::Levels(left)
                }
                _ => {
                    return Err(invalid(format!(
                        "split on `{feature}` must use {}",
                        if schema[j].kind.is_numeric() {
                            "`threshold`"
                        } else {
                            "`left_levels`"
                        }
                    )))
                }
            };
            Ok(Node::Split {
                feature: j,
                rule,
                left: Box::new(node_from_json(*left, schema)?),
                right: Box::new(node_from_json(*right, schema)?),
            })
        }
    }
}

/// Parses and validates a model produced by [`serialize_model`].
pub fn deserialize_model(bytes: &[u8]) -> Result<BuiltinModel, ModelError> {
    let json: ModelJson = serde_json::from_slice(bytes)?;
    match json {
        ModelJson::Ols {
            schema,
            intercept,
            coefficients,
        } => Ok(BuiltinModel::Ols(linear_from_json(schema, intercept, coefficients)?)),
        ModelJson::Lasso {
            schema,
            intercept,
            coefficients,
            lambda,
        } => {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(invalid("lambda must be a finite non-negative number"));
            }
            Ok(BuiltinModel::Lasso(LassoModel {
                linear: linear_from_json(schema, intercept, coefficients)?,
                lambda,
            }))
        }
        ModelJson::Cart {
            schema,
            max_depth,
            min_leaf,
            tree,
        } => {
            validate_schema(&schema)?;
            if max_depth == 0 || min_leaf == 0 {
                return Err(invalid("max_depth and min_leaf must be positive"));
            }
            let root = node_from_json(tree, &schema)?;
            if root.depth() > max_depth {
                return Err(invalid(format!(
                    "tree depth {} exceeds max_depth {max_depth}",
                    root.depth()
                )));
            }
            if let Some((_, c)) = root.leaves().iter().find(|(_, c)| *c < min_leaf) {
                return Err(invalid(format!("leaf with {c} rows is below min_leaf {min_leaf}")));
            }
            Ok(BuiltinModel::Cart(CartModel {
                schema,
                root,
                max_depth,
                min_leaf,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::{fit_cart, fit_lasso, fit_ols};
    use crate::tabular::{Column, Dataset, Rng};

    fn data() -> Dataset {
        let mut rng = Rng::new(4);
        let n = 60;
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let levels = ["a", "b", "c"];
        let c: Vec<&str> = (0..n).map(|i| levels[i % 3]).collect();
        let y = (0..n)
            .map(|i| 1.5 * x[i] + if c[i] == "b" { 2.0 } else { 0.0 } + 0.1 * rng.normal())
            .collect();
        Dataset::new(
            vec![Column::numeric("x", x), Column::categorical("c", &c)],
            Some(("y".into(), y)),
        )
        .unwrap()
    }

    #[test]
    fn round_trips() {
        let ds = data();
        let models = [
            BuiltinModel::Ols(fit_ols(&ds).unwrap()),
            BuiltinModel::Lasso(fit_lasso(&ds, 0.05).unwrap()),
            BuiltinModel::Cart(fit_cart(&ds, 3, 4).unwrap()),
        ];
        for m in models {
            let bytes = serialize_model(&m);
            let back = deserialize_model(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(serialize_model(&back), bytes);
        }
    }

    #[test]
    fn truncated_json_is_parse_error() {
        let bytes = serialize_model(&BuiltinModel::Ols(fit_ols(&data()).unwrap()));
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(deserialize_model(cut), Err(ModelError::Json(_))));
    }

    #[test]
    fn cart_deeper_than_declared_is_rejected() {
        let m = BuiltinModel::Cart(fit_cart(&data(), 3, 2).unwrap());
        let mut v: serde_json::Value = serde_json::from_slice(&serialize_model(&m)).unwrap();
        v["max_depth"] = serde_json::json!(1);
        let err = deserialize_model(v.to_string().as_bytes()).unwrap_err();
        assert!(matches!(err, ModelError::Invalid(ref s) if s.contains("exceeds")), "{err}");
    }

    #[test]
    fn misplaced_coefficient_is_rejected() {
        let m = BuiltinModel::Ols(fit_ols(&data()).unwrap());
        let mut v: serde_json::Value = serde_json::from_slice(&serialize_model(&m)).unwrap();
        v["coefficients"][0]["feature"] = serde_json::json!("c");
        assert!(matches!(
            deserialize_model(v.to_string().as_bytes()),
            Err(ModelError::Invalid(_))
        ));
    }

    #[test]
    fn unknown_kind_is_rejected() {
        assert!(deserialize_model(br#"{"kind": "svm", "schema": []}"#).is_err());
    }
}
