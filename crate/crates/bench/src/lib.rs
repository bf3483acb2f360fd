//! Shared fixtures for the benchmarks.

use fdc_core::tabular::Column;
use fdc_core::{Dataset, Rng};

/// `n` rows of `p` standard-normal features plus one three-level categorical column.
pub fn fixture(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = Rng::new(seed);
    let mut columns: Vec<Column> = (0..p)
        .map(|j| Column::numeric(format!("x{}", j + 1), (0..n).map(|_| rng.normal()).collect()))
        .collect();
    let levels: Vec<&str> = (0..n).map(|_| ["a", "b", "c"][rng.index(3)]).collect();
    columns.push(Column::categorical("c", &levels));
    Dataset::new(columns, None).expect("fixture columns share a length")
}

/// A nonlinear expression with an interaction, over the fixture's first three features.
pub const EXPRESSION: &str = r#"sin(x1) + x2^2 + x1*x3 + 2*(c == "b")"#;
