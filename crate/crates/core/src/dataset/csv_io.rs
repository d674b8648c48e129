use std::fs::File;
use std::path::Path;

use ndarray::Array2;

use super::{Class, Dataset};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// The two textual label values accepted in the label column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelValues {
    pub stable: String,
    pub unstable: String,
}

impl Default for LabelValues {
    fn default() -> Self {
        LabelValues {
            stable: "0".into(),
            unstable: "1".into(),
        }
    }
}

impl LabelValues {
    fn parse(&self, raw: &str) -> Option<Class> {
        let raw = raw.trim();
        if raw == self.stable {
            Some(Class::Stable)
        } else if raw == self.unstable {
            Some(Class::Unstable)
        } else {
            None
        }
    }

    fn render(&self, c: Class) -> &str {
        match c {
            Class::Stable => &self.stable,
            Class::Unstable => &self.unstable,
        }
    }
}

/// Reads a headered CSV with labels `0`/`1`.
pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset<T>> {
    load_csv_with(path, label_column, &LabelValues::default())
}

/// Reads a headered CSV; every column other than `label_column` becomes a
/// feature, in header order. Row numbers in errors are 1-based data rows.
pub fn load_csv_with<T: Scalar>(
    path: impl AsRef<Path>,
    label_column: &str,
    label_values: &LabelValues,
) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_idx = header
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut flat: Vec<T> = Vec::new();
    let mut labels = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        for (c, cell) in record.iter().enumerate() {
            if c == label_idx {
                let class = label_values.parse(cell).ok_or_else(|| Error::BadLabel {
                    row,
                    value: cell.to_string(),
                    stable: label_values.stable.clone(),
                    unstable: label_values.unstable.clone(),
                })?;
                labels.push(class);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| Error::NonNumeric {
                    row,
                    column: header[c].clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row,
                        column: header[c].clone(),
                    });
                }
                flat.push(T::of(v));
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Empty("CSV has no data rows"));
    }
    let values = Array2::from_shape_vec((labels.len(), feature_names.len()), flat)
        .map_err(|e| Error::Shape(e.to_string()))?;
    Dataset::new(values, labels, feature_names)
}

/// Writes features then the label column. Values use Rust's shortest
/// round-trip formatting so reloading reproduces them exactly.
pub fn write_csv<T: Scalar>(
    d: &Dataset<T>,
    path: impl AsRef<Path>,
    label_column: &str,
    label_values: &LabelValues,
) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = d.feature_names().iter().map(String::as_str).collect();
    header.push(label_column);
    w.write_record(&header)?;
    for (row, &label) in d.values().rows().into_iter().zip(d.labels()) {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        rec.push(label_values.render(label).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}
