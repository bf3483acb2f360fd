use super::PredictError;
use crate::tabular::{ColumnData, Dataset, FeatureKind, FeatureSpec, Value};

/// Dummy coding of a schema: numeric features map to one column, a
/// categorical feature with `L` levels maps to `L - 1` indicator columns
/// (the first level is the reference).
#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    schema: Vec<FeatureSpec>,
    // (feature index, level name for indicator columns)
    columns: Vec<(usize, Option<String>)>,
}

impl Encoder {
    pub fn new(schema: &[FeatureSpec]) -> Self {
        let mut columns = Vec::new();
        for (j, f) in schema.iter().enumerate() {
            match &f.kind {
                FeatureKind::Numeric => columns.push((j, None)),
                FeatureKind::Categorical { levels } => {
                    for l in levels.iter().skip(1) {
                        columns.push((j, Some(l.clone())));
                    }
                }
            }
        }
        Encoder {
            schema: schema.to_vec(),
            columns,
        }
    }

    pub fn schema(&self) -> &[FeatureSpec] {
        &self.schema
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    /// `(feature index, level)` per encoded column.
    pub fn columns(&self) -> &[(usize, Option<String>)] {
        &self.columns
    }

    pub fn encode_row(&self, row: &[Value]) -> Result<Vec<f64>, PredictError> {
        let mut out = Vec::with_capacity(self.columns.len());
        for (j, f) in self.schema.iter().enumerate() {
            match (&f.kind, &row[j]) {
                (FeatureKind::Numeric, Value::Num(v)) => out.push(*v),
                (FeatureKind::Categorical { levels }, Value::Cat(s)) => {
                    let code = levels.iter().position(|l| l.as_str() == &**s).ok_or_else(|| {
                        PredictError::UnknownLevel {
                            feature: f.name.clone(),
                            level: s.to_string(),
                        }
                    })?;
                    out.extend((1..levels.len()).map(|k| if k == code { 1.0 } else { 0.0 }));
                }
                (FeatureKind::Numeric, _) => {
                    return Err(PredictError::WrongValueType {
                        feature: f.name.clone(),
                        expected: "numeric",
                    })
                }
                (FeatureKind::Categorical { .. }, _) => {
                    return Err(PredictError::WrongValueType {
                        feature: f.name.clone(),
                        expected: "categorical",
                    })
                }
            }
        }
        Ok(out)
    }

    /// Column-major design matrix for a dataset sharing this schema.
    pub fn design_columns(&self, dataset: &Dataset) -> Vec<Vec<f64>> {
        let n = dataset.n_rows();
        self.columns
            .iter()
            .map(|(j, level)| match (&dataset.column(*j).data, level) {
                (ColumnData::Numeric(v), _) => v.clone(),
                (ColumnData::Categorical { levels, codes }, Some(level)) => {
                    match levels.iter().position(|l| &**l == level.as_str()) {
                        Some(code) => codes
                            .iter()
                            .map(|&c| if c as usize == code { 1.0 } else { 0.0 })
                            .collect(),
                        None => vec![0.0; n],
                    }
                }
                (ColumnData::Categorical { .. }, None) => vec![0.0; n],
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::Column;

    #[test]
    fn one_hot_with_first_level_reference() {
        let ds = Dataset::new(
            vec![
                Column::numeric("x", vec![1.0, 2.0, 3.0]),
                Column::categorical("c", &["a", "b", "c"]),
            ],
            None,
        )
        .unwrap();
        let enc = Encoder::new(&ds.schema());
        assert_eq!(enc.width(), 3);
        assert_eq!(enc.encode_row(&ds.row(2)).unwrap(), [3.0, 0.0, 1.0]);
        assert_eq!(enc.encode_row(&ds.row(0)).unwrap(), [1.0, 0.0, 0.0]);
        let cols = enc.design_columns(&ds);
        assert_eq!(cols[1], [0.0, 1.0, 0.0]);
        let bad = vec![Value::Num(1.0), Value::Cat("zz".into())];
        assert!(matches!(enc.encode_row(&bad), Err(PredictError::UnknownLevel { .. })));
    }
}
