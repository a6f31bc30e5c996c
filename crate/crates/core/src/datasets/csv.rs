//! Comma-separated ingestion for tabular datasets.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::LabeledDataset;
use crate::error::{Error, Result};

/// A column addressed by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRef {
    Name(String),
    Index(usize),
}

impl FromStr for ColumnRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::param("empty column reference"));
        }
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Name(n) => f.write_str(n),
            ColumnRef::Index(i) => write!(f, "{i}"),
        }
    }
}

fn resolve(col: &ColumnRef, header: Option<&[String]>, width: usize) -> Result<usize> {
    let idx = match col {
        ColumnRef::Index(i) => *i,
        ColumnRef::Name(name) => {
            let header = header.ok_or_else(|| {
                Error::param(format!("column '{name}' referenced by name but the file has no header"))
            })?;
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::param(format!("no column named '{name}'")))?
        }
    };
    if idx >= width {
        return Err(Error::param(format!("column {col} is out of range ({width} columns)")));
    }
    Ok(idx)
}

fn parse_cell(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a labeled dataset from a CSV file.
///
/// The first row is treated as a header when the label column is named or
/// when any of its feature cells is not a number. Rows holding an exact zero in
/// any of `drop_zero` are removed before assembly. Labels are re-indexed
/// densely from 0 (numeric order when every label is numeric, lexicographic
/// otherwise) and the original values are kept as class names.
pub fn load_csv(path: impl AsRef<Path>, label: &ColumnRef, drop_zero: &[ColumnRef]) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push(rec.iter().map(str::to_string).collect());
    }
    if records.is_empty() {
        return Err(Error::data(format!("{} contains no rows", path.display())));
    }
    let width = records[0].len();
    let first_label = match label {
        ColumnRef::Index(i) => Some(*i),
        ColumnRef::Name(_) => None,
    };
    let has_header = first_label.is_none()
        || records[0]
            .iter()
            .enumerate()
            .any(|(j, cell)| Some(j) != first_label && parse_cell(cell).is_none());
    let header = if has_header { Some(records.remove(0)) } else { None };
    let label_idx = resolve(label, header.as_deref(), width)?;
    let drop_idx: Vec<usize> = drop_zero
        .iter()
        .map(|c| resolve(c, header.as_deref(), width))
        .collect::<Result<_>>()?;
    let column_name = |j: usize| -> String {
        header
            .as_ref()
            .map_or_else(|| j.to_string(), |h| h[j].clone())
    };
    let row_offset = if has_header { 2 } else { 1 };

    let dim = width - 1;
    if dim == 0 {
        return Err(Error::data("a dataset needs at least one feature column"));
    }
    let mut samples = Vec::with_capacity(records.len() * dim);
    let mut raw_labels = Vec::with_capacity(records.len());
    'rows: for (r, rec) in records.iter().enumerate() {
        let row = r + row_offset;
        let mut values = Vec::with_capacity(dim);
        for (j, cell) in rec.iter().enumerate() {
            if j == label_idx {
                continue;
            }
            let v = parse_cell(cell).ok_or_else(|| Error::Ingest {
                row,
                column: column_name(j),
                message: format!("cannot parse '{cell}' as a finite number"),
            })?;
            values.push(v);
        }
        for &j in &drop_idx {
            if j != label_idx && parse_cell(&rec[j]) == Some(0.0) {
                continue 'rows;
            }
        }
        let lab = rec[label_idx].clone();
        if lab.is_empty() {
            return Err(Error::Ingest {
                row,
                column: column_name(label_idx),
                message: "empty label".into(),
            });
        }
        samples.extend(values);
        raw_labels.push(lab);
    }
    if raw_labels.is_empty() {
        return Err(Error::data(format!(
            "{} has no rows left after filtering",
            path.display()
        )));
    }

    let mut distinct: Vec<String> = raw_labels.clone();
    distinct.sort();
    distinct.dedup();
    if distinct.iter().all(|l| parse_cell(l).is_some()) {
        distinct.sort_by(|a, b| parse_cell(a).unwrap().total_cmp(&parse_cell(b).unwrap()));
    }
    let labels: Vec<usize> = raw_labels
        .iter()
        .map(|l| distinct.iter().position(|d| d == l).unwrap())
        .collect();
    let class_count = distinct.len();
    LabeledDataset::new(samples, dim, labels, class_count)?.with_class_names(distinct)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if let Some(pos) = e.position() {
        return Error::Ingest {
            row: pos.line() as usize,
            column: "-".into(),
            message: e.to_string(),
        };
    }
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::data(format!("{}: {other:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_and_categorical_labels() {
        let f = write_tmp("a,b,kind\n1,2,dog\n3,4,cat\n5,6,dog\n");
        let ds = load_csv(f.path(), &ColumnRef::Name("kind".into()), &[]).unwrap();
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels(), &[1, 0, 1]);
        assert_eq!(ds.class_names().unwrap(), &["cat".to_string(), "dog".to_string()]);
        assert_eq!(ds.sample(1), &[3.0, 4.0]);
    }

    #[test]
    fn headerless_numeric_labels_reindexed() {
        let f = write_tmp("7,1.5,10\n2,2.5,3\n");
        let ds = load_csv(f.path(), &ColumnRef::Index(2), &[]).unwrap();
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.sample(0), &[7.0, 1.5]);
    }

    #[test]
    fn drop_zero_rows() {
        let f = write_tmp("g,i,y\n1,0,0\n0,2,1\n3,4,0\n5,6,1\n");
        let ds = load_csv(
            f.path(),
            &ColumnRef::Name("y".into()),
            &[ColumnRef::Name("g".into()), ColumnRef::Name("i".into())],
        )
        .unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.sample(0), &[3.0, 4.0]);
    }

    #[test]
    fn bad_cell_names_row_and_column() {
        let f = write_tmp("a,b,y\n1,2,0\n1,oops,1\n");
        let err = load_csv(f.path(), &ColumnRef::Name("y".into()), &[]).unwrap_err();
        match err {
            Error::Ingest { row, column, .. } => {
                assert_eq!(row, 3);
                assert_eq!(column, "b");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_data_error() {
        let f = write_tmp("");
        assert!(matches!(
            load_csv(f.path(), &ColumnRef::Index(0), &[]),
            Err(Error::Data(_))
        ));
        let g = write_tmp("a,y\n0,1\n0,0\n");
        assert!(matches!(
            load_csv(g.path(), &ColumnRef::Name("y".into()), &[ColumnRef::Name("a".into())]),
            Err(Error::Data(_))
        ));
    }
}
