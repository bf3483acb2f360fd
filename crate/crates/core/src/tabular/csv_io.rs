use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Column, ColumnData, DataError, Dataset, FeatureKind};

/// Loads a CSV file with a header row.
///
/// A column is numeric when every cell parses as a real number, unless
/// `kind_overrides` says otherwise; other columns become categorical with
/// levels in first-appearance order. The named target column is split off
/// and must be numeric.
pub fn load_csv(
    path: impl AsRef<Path>,
    target_name: Option<&str>,
    kind_overrides: &HashMap<String, FeatureKind>,
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| DataError::MissingFile {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(file, target_name, kind_overrides)
}

pub fn read_csv<R: Read>(
    reader: R,
    target_name: Option<&str>,
    kind_overrides: &HashMap<String, FeatureKind>,
) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let width = header.len();
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); width];
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        // row numbers are 1-based data rows
        if record.len() != width {
            return Err(DataError::RaggedRow {
                row: i + 1,
                expected: width,
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            cells[j].push(field.trim().to_string());
        }
    }
    if cells.first().is_none_or(|c| c.is_empty()) {
        return Err(DataError::EmptyBody);
    }
    let mut seen = std::collections::HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(DataError::DuplicateName(h.clone()));
        }
    }
    for (name, col) in header.iter().zip(&cells) {
        if let Some(row) = col.iter().position(|c| c.is_empty()) {
            return Err(DataError::MissingValue {
                column: name.clone(),
                row: row + 1,
            });
        }
    }

    let target_idx = match target_name {
        Some(t) => Some(
            header
                .iter()
                .position(|h| h == t)
                .ok_or_else(|| DataError::UnknownTarget(t.to_string()))?,
        ),
        None => None,
    };

    let mut columns = Vec::with_capacity(width);
    let mut target = None;
    for (j, (name, col)) in header.iter().zip(cells).enumerate() {
        if Some(j) == target_idx {
            let values = parse_numeric(name, &col).map_err(|e| match e {
                DataError::NotNumeric { row, value, .. } => DataError::NonNumericTarget {
                    name: name.clone(),
                    row,
                    value,
                },
                other => other,
            })?;
            target = Some((name.clone(), values));
            continue;
        }
        let column = match kind_overrides.get(name) {
            Some(FeatureKind::Numeric) => Column::numeric(name.clone(), parse_numeric(name, &col)?),
            Some(FeatureKind::Categorical { levels }) => {
                Column::categorical_with_levels(name.clone(), levels, &col)?
            }
            None => {
                if col.iter().all(|c| c.parse::<f64>().is_ok()) {
                    Column::numeric(name.clone(), parse_numeric(name, &col)?)
                } else {
                    Column::categorical(name.clone(), &col)
                }
            }
        };
        columns.push(column);
    }
    Dataset::new(columns, target)
}

fn parse_numeric(name: &str, cells: &[String]) -> Result<Vec<f64>, DataError> {
    cells
        .iter()
        .enumerate()
        .map(|(i, c)| match c.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            Ok(_) => Err(DataError::NonFinite {
                column: name.to_string(),
                row: i + 1,
                value: c.clone(),
            }),
            Err(_) => Err(DataError::NotNumeric {
                column: name.to_string(),
                row: i + 1,
                value: c.clone(),
            }),
        })
        .collect()
}

/// Writes features (then the target, if any) as CSV. Numbers use the
/// shortest representation that parses back to the same value.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| DataError::Csv(e.to_string());
    let mut header: Vec<&str> = dataset.feature_names();
    if let Some(t) = dataset.target_name() {
        header.push(t);
    }
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..dataset.n_rows() {
        let mut record: Vec<String> = dataset
            .columns()
            .iter()
            .map(|c| match &c.data {
                ColumnData::Numeric(v) => v[i].to_string(),
                ColumnData::Categorical { levels, codes } => levels[codes[i] as usize].to_string(),
            })
            .collect();
        if let Some(t) = dataset.target() {
            record.push(t[i].to_string());
        }
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, target: Option<&str>) -> Result<Dataset, DataError> {
        read_csv(text.as_bytes(), target, &HashMap::new())
    }

    #[test]
    fn mixed_columns_with_target() {
        let ds = parse("a,b,y\n1,red,3\n2,blue,4\n", Some("y")).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.schema()[0].kind, FeatureKind::Numeric);
        assert_eq!(
            ds.schema()[1].kind,
            FeatureKind::Categorical {
                levels: vec!["red".into(), "blue".into()]
            }
        );
        assert_eq!(ds.target(), Some(&[3.0, 4.0][..]));
    }

    #[test]
    fn header_only_is_empty_body() {
        assert!(matches!(parse("a\n", None), Err(DataError::EmptyBody)));
    }

    #[test]
    fn mixed_parse_forces_categorical() {
        let ds = parse("c\n1\n2\nx\n", None).unwrap();
        assert_eq!(
            ds.schema()[0].kind,
            FeatureKind::Categorical {
                levels: vec!["1".into(), "2".into(), "x".into()]
            }
        );
    }

    #[test]
    fn ragged_row() {
        assert!(matches!(
            parse("a,b\n1,2\n3\n", None),
            Err(DataError::RaggedRow { row: 2, .. })
        ));
    }

    #[test]
    fn non_numeric_target() {
        assert!(matches!(
            parse("a,y\n1,2\n2,z\n", Some("y")),
            Err(DataError::NonNumericTarget { row: 2, .. })
        ));
    }

    #[test]
    fn nan_and_inf_rejected() {
        assert!(matches!(
            parse("a\n1\nNaN\n", None),
            Err(DataError::NonFinite { row: 2, .. })
        ));
        assert!(matches!(
            parse("a\n1\ninf\n", None),
            Err(DataError::NonFinite { .. })
        ));
    }

    #[test]
    fn empty_cell_is_missing() {
        assert!(matches!(
            parse("a,b\n1,\n2,x\n", None),
            Err(DataError::MissingValue { row: 1, .. })
        ));
    }

    #[test]
    fn missing_file() {
        let err = load_csv("/nonexistent/file.csv", None, &HashMap::new()).unwrap_err();
        assert!(matches!(err, DataError::MissingFile { .. }));
    }

    #[test]
    fn quoted_fields_and_scientific_notation() {
        let ds = parse("\"a b\",c\n1e3,\"x, y\"\n-2.5E-1,z\n", None).unwrap();
        assert_eq!(ds.numeric_column(0).unwrap(), &[1000.0, -0.25]);
        assert_eq!(ds.value(0, 1).as_cat(), Some("x, y"));
    }

    #[test]
    fn override_to_categorical() {
        let mut ov = HashMap::new();
        ov.insert(
            "a".to_string(),
            FeatureKind::Categorical {
                levels: vec!["2".into(), "1".into()],
            },
        );
        let ds = read_csv("a\n1\n2\n".as_bytes(), None, &ov).unwrap();
        assert_eq!(ds.schema()[0].kind, ov["a"]);
    }

    #[test]
    fn unknown_target() {
        assert!(matches!(
            parse("a\n1\n", Some("y")),
            Err(DataError::UnknownTarget(_))
        ));
    }
}
