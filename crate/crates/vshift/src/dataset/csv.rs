//! Plain numeric CSV readers and writers.
//!
//! Input format: comma-separated finite numbers, UTF-8, with an optional
//! single header line (detected by a non-numeric first row). Labeled output
//! uses the header `f0,...,f{n-1},label`; target samples drop the label.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::dataset::{LabeledDataset, TargetSample};
use crate::error::{Error, Result};

pub fn load_csv(path: impl AsRef<Path>, label_column: usize) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_labeled_csv(BufReader::new(file), label_column)
}

pub fn load_target_csv(path: impl AsRef<Path>) -> Result<TargetSample> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_target_csv(BufReader::new(file))
}

/// Parse a labeled CSV. The label column is removed from the features; its
/// two distinct raw values map to `{0, 1}` by sorted order.
pub fn parse_labeled_csv<R: BufRead>(reader: R, label_column: usize) -> Result<LabeledDataset> {
    let rows = read_numeric_rows(reader)?;
    let width = rows[0].1.len();
    if label_column >= width {
        return Err(Error::Schema(format!(
            "label column {label_column} out of range for {width} columns"
        )));
    }
    if width < 2 {
        return Err(Error::Schema(
            "labeled data needs at least one feature column besides the label".into(),
        ));
    }

    let mut raw_labels = Vec::with_capacity(rows.len());
    let n_features = width - 1;
    let mut features = Vec::with_capacity(rows.len() * n_features);
    for (_, row) in &rows {
        for (k, &v) in row.iter().enumerate() {
            if k == label_column {
                raw_labels.push(v);
            } else {
                features.push(v);
            }
        }
    }

    let mut distinct: Vec<f64> = raw_labels.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() != 2 {
        return Err(Error::Schema(format!(
            "label column has {} distinct values, expected 2",
            distinct.len()
        )));
    }
    let labels = raw_labels
        .iter()
        .map(|&v| u8::from(v == distinct[1]))
        .collect();

    let matrix = DMatrix::from_row_iterator(rows.len(), n_features, features);
    LabeledDataset::new(matrix, labels)
}

pub fn parse_target_csv<R: BufRead>(reader: R) -> Result<TargetSample> {
    let rows = read_numeric_rows(reader)?;
    let width = rows[0].1.len();
    let matrix =
        DMatrix::from_row_iterator(rows.len(), width, rows.iter().flat_map(|(_, r)| r).copied());
    TargetSample::new(matrix)
}

/// Read all data rows as finite f64 vectors, skipping one leading header
/// line if its cells do not all parse. Returns `(line_number, values)`.
fn read_numeric_rows<R: BufRead>(reader: R) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut width = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() {
            continue;
        }
        match parse_row(trimmed) {
            Ok(values) => {
                if let Some(w) = width {
                    if values.len() != w {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("expected {w} columns, found {}", values.len()),
                        });
                    }
                } else {
                    width = Some(values.len());
                }
                rows.push((line_no, values));
            }
            Err(msg) => {
                // Only the very first line may be a header.
                if rows.is_empty() && width.is_none() && line_no == 1 {
                    continue;
                }
                return Err(Error::Parse { line: line_no, msg });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }
    Ok(rows)
}

fn parse_row(line: &str) -> std::result::Result<Vec<f64>, String> {
    line.split(',')
        .enumerate()
        .map(|(col, cell)| {
            let cell = cell.trim();
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(format!("column {col}: not a finite number: {cell:?}")),
            }
        })
        .collect()
}

pub fn write_labeled_csv<W: Write>(mut w: W, data: &LabeledDataset) -> std::io::Result<()> {
    let n = data.n_features();
    for k in 0..n {
        write!(w, "f{k},")?;
    }
    writeln!(w, "label")?;
    for i in 0..data.n_rows() {
        for k in 0..n {
            write!(w, "{},", fmt_csv_value(data.features()[(i, k)]))?;
        }
        writeln!(w, "{}", data.labels()[i])?;
    }
    Ok(())
}

pub fn write_target_csv<W: Write>(mut w: W, target: &TargetSample) -> std::io::Result<()> {
    let n = target.n_features();
    let header: Vec<String> = (0..n).map(|k| format!("f{k}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..target.n_rows() {
        let row: Vec<String> = (0..n).map(|k| fmt_csv_value(target.features()[(i, k)])).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_labeled_csv(path: impl AsRef<Path>, data: &LabeledDataset) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_labeled_csv(BufWriter::new(file), data).map_err(|e| Error::io(path, e))
}

pub fn save_target_csv(path: impl AsRef<Path>, target: &TargetSample) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_target_csv(BufWriter::new(file), target).map_err(|e| Error::io(path, e))
}

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_csv_value(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn readback_two_rows() {
        let data = parse_labeled_csv(Cursor::new("0.1,0.2,1\n0.3,0.4,0\n"), 2).unwrap();
        assert_eq!(data.n_rows(), 2);
        assert_eq!(data.n_features(), 2);
        assert_eq!(data.labels(), &[1, 0]);
        assert_eq!(data.features()[(1, 0)], 0.3);
    }

    #[test]
    fn empty_file_is_schema_error() {
        assert!(matches!(
            parse_labeled_csv(Cursor::new(""), 0),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            parse_target_csv(Cursor::new("f0,f1\n")),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn plus_minus_one_labels_map_by_sorted_order() {
        let data = parse_labeled_csv(Cursor::new("0.5,-1\n0.6,1\n0.7,-1\n"), 1).unwrap();
        assert_eq!(data.labels(), &[0, 1, 0]);
    }

    #[test]
    fn header_detected_and_skipped() {
        let data = parse_labeled_csv(Cursor::new("f0,f1,label\n1,2,0\n3,4,1\n"), 2).unwrap();
        assert_eq!(data.n_rows(), 2);
        assert_eq!(data.labels(), &[0, 1]);
    }

    #[test]
    fn malformed_cell_names_line() {
        let err = parse_labeled_csv(Cursor::new("1,2,0\n3,x,1\n"), 2).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_row_names_line() {
        let err = parse_target_csv(Cursor::new("1,2\n3\n")).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_cells_rejected() {
        assert!(parse_target_csv(Cursor::new("1,2\nNaN,3\n")).is_err());
        assert!(parse_target_csv(Cursor::new("1,inf\n")).is_err());
    }

    #[test]
    fn single_distinct_label_rejected() {
        assert!(matches!(
            parse_labeled_csv(Cursor::new("1,0\n2,0\n"), 1),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn roundtrip_through_writers() {
        let data = parse_labeled_csv(Cursor::new("0.125,7.25,1\n-3.5,0.1,0\n"), 2).unwrap();
        let mut buf = Vec::new();
        write_labeled_csv(&mut buf, &data).unwrap();
        let back = parse_labeled_csv(Cursor::new(buf), 2).unwrap();
        assert_eq!(back.features(), data.features());
        assert_eq!(back.labels(), data.labels());
    }
}
