//! Tabular data: ingest, descriptive statistics and correlation tables.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::dist::pearson_p;
use crate::error::{Error, Result};

/// Named numeric columns of equal length.
///
/// Immutable once built; every value is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl Dataset {
    pub fn new<S: Into<String>>(columns: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let mut names = Vec::with_capacity(columns.len());
        let mut values = Vec::with_capacity(columns.len());
        let mut seen = HashSet::new();
        for (name, col) in columns {
            let name = name.into();
            if name.trim().is_empty() {
                return Err(Error::Schema("empty column name".into()));
            }
            if !seen.insert(name.clone()) {
                return Err(Error::Schema(format!("duplicate column name '{name}'")));
            }
            if let Some(v) = col.iter().find(|v| !v.is_finite()) {
                return Err(Error::Schema(format!("column '{name}' holds non-finite value {v}")));
            }
            names.push(name);
            values.push(col);
        }
        let n = values.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::EmptyData { dropped: 0 });
        }
        if let Some(i) = values.iter().position(|c| c.len() != n) {
            return Err(Error::Schema(format!("column '{}' has {} values, expected {n}", names[i], values[i].len())));
        }
        Ok(Self { names, columns: values })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.names.iter().any(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Result<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Returns a copy with one more column appended.
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Self> {
        let mut cols: Vec<(String, Vec<f64>)> = self.names.iter().cloned().zip(self.columns.iter().cloned()).collect();
        cols.push((name.to_string(), values));
        Self::new(cols)
    }

    /// Returns a copy holding the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            names: self.names.clone(),
            columns: self.columns.iter().map(|c| rows.iter().map(|&r| c[r]).collect()).collect(),
        }
    }
}

/// Options for [`load_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { delimiter: b',', has_header: true }
    }
}

/// A loaded dataset together with the number of incomplete rows skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedDataset {
    pub dataset: Dataset,
    pub dropped: usize,
}

/// Reads a CSV stream. Rows with any missing or non-numeric cell are dropped
/// whole and counted.
pub fn load_csv<R: Read>(source: R, options: &CsvOptions) -> Result<LoadedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(false)
        .from_reader(source);

    let names: Vec<String> = if options.has_header {
        let header = reader.headers().map_err(csv_error)?;
        header.iter().map(|h| h.trim().to_string()).collect()
    } else {
        Vec::new()
    };
    if options.has_header {
        let mut seen = HashSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::Schema("empty header field".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate header '{name}'")));
            }
        }
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut width = names.len();
    let mut dropped = 0;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        if width == 0 {
            width = record.len();
            columns = vec![Vec::new(); width];
        }
        let parsed: Option<Vec<f64>> =
            record.iter().map(|cell| cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())).collect();
        match parsed {
            Some(row) => {
                for (col, v) in columns.iter_mut().zip(row) {
                    col.push(v);
                }
            }
            None => dropped += 1,
        }
    }

    if columns.first().is_none_or(Vec::is_empty) {
        return Err(Error::EmptyData { dropped });
    }
    let names = if options.has_header { names } else { (1..=width).map(|i| format!("V{i}")).collect() };
    let dataset = Dataset::new(names.into_iter().zip(columns).collect())?;
    Ok(LoadedDataset { dataset, dropped })
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    Error::Parse { line, message: err.to_string() }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample covariance with divisor n - 1.
pub(crate) fn covariance(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let s: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    s / (x.len() as f64 - 1.0)
}

/// Pearson correlation; `None` when either input has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson coefficients with two-sided p-values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub names: Vec<String>,
    pub r: Vec<Vec<f64>>,
    /// `None` on the diagonal, where the test is undefined.
    pub p: Vec<Vec<Option<f64>>>,
    pub n: usize,
}

impl CorrelationReport {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.r[self.index_of(a)?][self.index_of(b)?])
    }
}

pub fn pearson_matrix(d: &Dataset, cols: &[&str]) -> Result<CorrelationReport> {
    let n = d.n();
    if n < 3 {
        return Err(Error::Argument(format!("correlation needs at least 3 observations, got {n}")));
    }
    let data: Vec<&[f64]> = cols.iter().map(|c| d.column(c)).collect::<Result<_>>()?;
    for (name, col) in cols.iter().zip(&data) {
        if column_stats_of(col).variance <= 0.0 {
            return Err(Error::DegenerateColumn(name.to_string()));
        }
    }
    let k = cols.len();
    let mut r = vec![vec![1.0; k]; k];
    let mut p = vec![vec![None; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let rij = pearson(data[i], data[j]).ok_or_else(|| Error::DegenerateColumn(cols[i].to_string()))?;
            let pij = pearson_p(rij, n);
            r[i][j] = rij;
            r[j][i] = rij;
            p[i][j] = Some(pij);
            p[j][i] = Some(pij);
        }
    }
    Ok(CorrelationReport { names: cols.iter().map(|s| s.to_string()).collect(), r, p, n })
}

/// Minimum, quartiles, mean and maximum of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q25: f64,
    pub mean: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuartileSummary {
    pub columns: Vec<(String, FiveNumber)>,
}

impl QuartileSummary {
    pub fn get(&self, name: &str) -> Option<&FiveNumber> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * prob;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number(values: &[f64]) -> FiveNumber {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    FiveNumber {
        min: sorted[0],
        q25: quantile_sorted(&sorted, 0.25),
        mean: mean(values).clamp(sorted[0], sorted[sorted.len() - 1]),
        q75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    }
}

pub fn quartiles(d: &Dataset) -> QuartileSummary {
    QuartileSummary { columns: d.names.iter().zip(&d.columns).map(|(n, c)| (n.clone(), five_number(c))).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance; 0 for a single observation (see `singleton`).
    pub variance: f64,
    pub min: f64,
    pub max: f64,
    pub singleton: bool,
}

fn column_stats_of(values: &[f64]) -> ColumnStats {
    let n = values.len();
    let m = mean(values);
    let variance = if n > 1 { values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n as f64 - 1.0) } else { 0.0 };
    ColumnStats {
        n,
        mean: m,
        variance,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        singleton: n == 1,
    }
}

pub fn column_stats(d: &Dataset, col: &str) -> Result<ColumnStats> {
    Ok(column_stats_of(d.column(col)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<LoadedDataset> {
        load_csv(text.as_bytes(), &CsvOptions::default())
    }

    #[test]
    fn parses_simple_csv() {
        let loaded = load("y,x\n1,2\n3,4").unwrap();
        assert_eq!(loaded.dropped, 0);
        assert_eq!(loaded.dataset.n(), 2);
        assert_eq!(loaded.dataset.column("y").unwrap(), &[1.0, 3.0]);
        assert_eq!(loaded.dataset.column("x").unwrap(), &[2.0, 4.0]);
    }

    #[test]
    fn all_rows_missing_is_empty_data() {
        assert_eq!(load("y,x\n1,NA").unwrap_err(), Error::EmptyData { dropped: 1 });
    }

    #[test]
    fn incomplete_rows_are_dropped_and_counted() {
        let loaded = load("y,x\n1,2\n,4\n5,abc\n7,8\n").unwrap();
        assert_eq!(loaded.dropped, 2);
        assert_eq!(loaded.dataset.column("y").unwrap(), &[1.0, 7.0]);
    }

    #[test]
    fn duplicate_header_is_schema_error() {
        assert!(matches!(load("y,y\n1,2"), Err(Error::Schema(_))));
    }

    #[test]
    fn ragged_row_reports_line() {
        match load("y,x\n1,2\n3,4,5\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn custom_delimiter_without_header() {
        let opts = CsvOptions { delimiter: b';', has_header: false };
        let loaded = load_csv("1;2\n3;4\n".as_bytes(), &opts).unwrap();
        assert_eq!(loaded.dataset.names(), &["V1".to_string(), "V2".to_string()]);
    }

    #[test]
    fn nineteen_rows_thirteen_columns() {
        let header = ["Y", "CO", "NO2", "PM", "CH2O", "Pb", "Xylol", "SO2", "C1", "C2", "C3", "C4", "C5"];
        let mut text = header.join(",");
        text.push('\n');
        for i in 0..19 {
            let row: Vec<String> = (0..13).map(|j| format!("{}", (i * 13 + j) as f64 * 0.37)).collect();
            text.push_str(&row.join(","));
            text.push('\n');
        }
        let loaded = load(&text).unwrap();
        assert_eq!(loaded.dataset.n(), 19);
        assert_eq!(loaded.dataset.names().len(), 13);
    }

    #[test]
    fn correlation_p_values_at_n19() {
        assert!((pearson_p(0.578, 19) - 0.010).abs() < 0.001);
        assert!((pearson_p(0.121, 19) - 0.622).abs() < 0.002);
    }

    #[test]
    fn diagonal_is_unit_with_no_p() {
        let d = Dataset::new(vec![("a", vec![1.0, 2.0, 4.0]), ("b", vec![3.0, 1.0, 2.0])]).unwrap();
        let rep = pearson_matrix(&d, &["a", "a", "b"]).unwrap();
        assert_eq!(rep.r[0][0], 1.0);
        assert_eq!(rep.p[0][0], None);
        assert!((rep.r[0][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_column_is_named() {
        let d = Dataset::new(vec![("a", vec![1.0, 2.0, 4.0]), ("c", vec![3.0, 3.0, 3.0])]).unwrap();
        assert_eq!(pearson_matrix(&d, &["a", "c"]).unwrap_err(), Error::DegenerateColumn("c".into()));
    }

    #[test]
    fn quartiles_of_small_columns() {
        let s = five_number(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!((s.min, s.q25, s.mean, s.q75, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let c = five_number(&[7.0, 7.0, 7.0]);
        assert_eq!((c.min, c.q25, c.mean, c.q75, c.max), (7.0, 7.0, 7.0, 7.0, 7.0));
    }

    #[test]
    fn quartiles_reproduce_constructed_order_statistics() {
        // n = 9 puts q25 and q75 exactly on the 3rd and 7th order statistics.
        // The free points are chosen so the mean is also the target 63.8.
        let (min, q25, q75, max) = (39.3, 57.8, 69.3, 80.7);
        let fixed = min + q25 + q75 + max;
        let lower_fill = 50.0;
        let upper_fill = 75.0;
        let mid_total = 9.0 * 63.8 - fixed - lower_fill - upper_fill;
        let mid = mid_total / 3.0;
        let data = vec![max, mid, lower_fill, q25, min, mid, q75, upper_fill, mid];
        let s = five_number(&data);
        assert!((s.min - min).abs() < 1e-12);
        assert!((s.q25 - q25).abs() < 1e-12);
        assert!((s.q75 - q75).abs() < 1e-12);
        assert!((s.max - max).abs() < 1e-12);
        assert!((s.mean - 63.8).abs() < 1e-12);
    }

    #[test]
    fn column_stats_cases() {
        let d = Dataset::new(vec![("a", vec![2.0, 4.0])]).unwrap();
        let s = column_stats(&d, "a").unwrap();
        assert_eq!((s.mean, s.variance), (3.0, 2.0));

        let d = Dataset::new(vec![("a", vec![5.0])]).unwrap();
        let s = column_stats(&d, "a").unwrap();
        assert_eq!((s.mean, s.variance, s.singleton), (5.0, 0.0, true));

        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        let d = Dataset::new(vec![("a", xs)]).unwrap();
        let s = column_stats(&d, "a").unwrap();
        // mean (n+1)/2, variance n(n+1)/12
        let n = 100.0;
        assert!((s.mean - (n + 1.0) / 2.0).abs() < 1e-12);
        assert!((s.variance - n * (n + 1.0) / 12.0).abs() < 1e-9);

        assert_eq!(column_stats(&d, "zz").unwrap_err(), Error::UnknownColumn("zz".into()));
    }

    #[test]
    fn rejects_non_finite_and_ragged_columns() {
        assert!(Dataset::new(vec![("a", vec![f64::NAN])]).is_err());
        assert!(Dataset::new(vec![("a", vec![1.0]), ("b", vec![1.0, 2.0])]).is_err());
    }
}
