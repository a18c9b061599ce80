//! Plain-text file formats.
//!
//! * prediction CSV: `instance_id,<classifier_1>,...,<classifier_M>`
//! * bag-group sidecar: one `classifier_id<TAB>group` per line
//! * labels CSV: `instance_id,label`
//! * dataset CSV: `instance_id,<features...>,label` with label in `{0,1,?}`
//!
//! Readers skip lines starting with `#`; writers can emit one such comment
//! line ahead of the header.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::data::{Dataset, LabelVector, PredictionMatrix};
use crate::error::{Error, Result};

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_err(path: &str, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

/// Reads a prediction CSV. `groups` maps classifier id to bag group; columns
/// absent from the map form singleton groups named after themselves.
pub fn read_predictions<R: Read>(
    input: R,
    source: &str,
    groups: Option<&HashMap<String, String>>,
) -> Result<PredictionMatrix> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if header.is_empty() || &header[0] != "instance_id" {
        return Err(parse_err(source, 1, "header must start with instance_id"));
    }
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut instance_ids = Vec::new();
    let mut columns = vec![Vec::new(); ids.len()];
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != ids.len() + 1 {
            return Err(parse_err(
                source,
                line,
                format!("expected {} fields, found {}", ids.len() + 1, record.len()),
            ));
        }
        instance_ids.push(record[0].to_string());
        for (j, field) in record.iter().skip(1).enumerate() {
            if field.is_empty() || field == "NA" || field == "?" {
                return Err(parse_err(source, line, format!("missing value for {}", ids[j])));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(source, line, format!("invalid number {field:?}")))?;
            columns[j].push(v);
        }
    }
    let group_vec = ids
        .iter()
        .map(|id| {
            groups
                .and_then(|g| g.get(id).cloned())
                .unwrap_or_else(|| id.clone())
        })
        .collect();
    PredictionMatrix::new(instance_ids, ids, group_vec, columns)
}

pub fn read_predictions_file(
    path: &Path,
    groups: Option<&HashMap<String, String>>,
) -> Result<PredictionMatrix> {
    read_predictions(File::open(path)?, &path.display().to_string(), groups)
}

pub fn write_predictions<W: Write>(
    out: W,
    matrix: &PredictionMatrix,
    comment: Option<&str>,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    write!(out, "instance_id")?;
    for id in matrix.classifier_ids() {
        write!(out, ",{id}")?;
    }
    writeln!(out)?;
    for (i, inst) in matrix.instance_ids().iter().enumerate() {
        write!(out, "{inst}")?;
        for j in 0..matrix.n_classifiers() {
            write!(out, ",{}", matrix.value(i, j))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `classifier_id<TAB>group` lines. Blank lines and `#` comments are
/// ignored.
pub fn read_groups<R: Read>(input: R, source: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (n, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim_end_matches(['\r', '\n']);
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (id, group) = trimmed
            .split_once('\t')
            .ok_or_else(|| parse_err(source, n + 1, "expected classifier_id<TAB>group"))?;
        if map.insert(id.to_string(), group.to_string()).is_some() {
            return Err(parse_err(source, n + 1, format!("duplicate classifier id {id:?}")));
        }
    }
    Ok(map)
}

pub fn read_groups_file(path: &Path) -> Result<HashMap<String, String>> {
    read_groups(File::open(path)?, &path.display().to_string())
}

pub fn write_groups<W: Write>(out: W, matrix: &PredictionMatrix, comment: Option<&str>) -> Result<()> {
    let mut out = BufWriter::new(out);
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    for (id, group) in matrix.classifier_ids().iter().zip(matrix.groups()) {
        writeln!(out, "{id}\t{group}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a labels CSV, returning instance ids alongside the labels.
pub fn read_labels<R: Read>(input: R, source: &str) -> Result<(Vec<String>, LabelVector)> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "instance_id" || &header[1] != "label" {
        return Err(parse_err(source, 1, "header must be instance_id,label"));
    }
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        ids.push(record[0].to_string());
        match &record[1] {
            "0" => labels.push(0),
            "1" => labels.push(1),
            _ => return Err(Error::NonBinaryLabel { index: labels.len() }),
        }
    }
    Ok((ids, LabelVector::new(labels)?))
}

pub fn read_labels_file(path: &Path) -> Result<(Vec<String>, LabelVector)> {
    read_labels(File::open(path)?, &path.display().to_string())
}

/// Reads labels and checks they list the matrix's instances in the same order.
pub fn read_aligned_labels(path: &Path, matrix: &PredictionMatrix) -> Result<LabelVector> {
    let (ids, labels) = read_labels_file(path)?;
    if ids.len() != matrix.n_instances() {
        return Err(Error::Dimension(format!(
            "{} has {} labels for {} instances",
            path.display(),
            ids.len(),
            matrix.n_instances()
        )));
    }
    if let Some(i) = ids.iter().zip(matrix.instance_ids()).position(|(a, b)| a != b) {
        return Err(Error::Dimension(format!(
            "{}: instance {:?} at row {i} does not match prediction row {:?}",
            path.display(),
            ids[i],
            matrix.instance_ids()[i]
        )));
    }
    Ok(labels)
}

pub fn write_labels<W: Write>(
    out: W,
    ids: &[String],
    labels: &LabelVector,
    comment: Option<&str>,
) -> Result<()> {
    let mut out = BufWriter::new(out);
    if let Some(c) = comment {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "instance_id,label")?;
    for (id, l) in ids.iter().zip(labels.iter()) {
        writeln!(out, "{id},{l}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: Read>(input: R, source: &str) -> Result<Dataset> {
    let mut rdr = reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "instance_id" || &header[header.len() - 1] != "label" {
        return Err(parse_err(source, 1, "header must be instance_id,<features...>,label"));
    }
    let width = header.len();
    let feature_names: Vec<String> = header.iter().skip(1).take(width - 2).map(str::to_string).collect();
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != width {
            return Err(parse_err(
                source,
                line,
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        ids.push(record[0].to_string());
        let row = record
            .iter()
            .skip(1)
            .take(width - 2)
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(source, line, format!("invalid feature value {f:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        labels.push(match &record[width - 1] {
            "0" => Some(0),
            "1" => Some(1),
            "?" => None,
            other => {
                return Err(parse_err(source, line, format!("label must be 0, 1 or ?, got {other:?}")))
            }
        });
    }
    Dataset::new(ids, feature_names, rows, labels)
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset> {
    read_dataset(File::open(path)?, &path.display().to_string())
}

pub fn write_dataset<W: Write>(out: W, dataset: &Dataset) -> Result<()> {
    let mut out = BufWriter::new(out);
    write!(out, "instance_id")?;
    for f in &dataset.feature_names {
        write!(out, ",{f}")?;
    }
    writeln!(out, ",label")?;
    for ((id, row), label) in dataset.instance_ids.iter().zip(&dataset.rows).zip(&dataset.labels) {
        write!(out, "{id}")?;
        for v in row {
            write!(out, ",{v}")?;
        }
        match label {
            Some(l) => writeln!(out, ",{l}")?,
            None => writeln!(out, ",?")?,
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_predictions_with_comment_and_groups() {
        let text = "# produced by test\ninstance_id,svm.0,svm.1,rf.0\na,0.1,0.2,0.3\nb,1,0,0.5\n";
        let groups = read_groups("svm.0\tsvm\nsvm.1\tsvm\n".as_bytes(), "g").unwrap();
        let m = read_predictions(text.as_bytes(), "p", Some(&groups)).unwrap();
        assert_eq!(m.n_instances(), 2);
        assert_eq!(m.groups(), &["svm", "svm", "rf.0"]);
        assert_eq!(m.value(1, 0), 1.0);
    }

    #[test]
    fn missing_value_is_rejected() {
        let text = "instance_id,a\nx,\n";
        let err = read_predictions(text.as_bytes(), "p", None).unwrap_err();
        assert!(err.to_string().contains("missing value"), "{err}");
    }

    #[test]
    fn out_of_range_value_surfaces_from_reader() {
        let text = "instance_id,a,b\nx,0.2,0.1\ny,0.3,1.2\n";
        let err = read_predictions(text.as_bytes(), "p", None).unwrap_err();
        assert!(matches!(err, Error::OutOfRange { row: 1, col: 1, .. }));
    }

    #[test]
    fn labels_reject_non_binary() {
        let err = read_labels("instance_id,label\na,1\nb,0\nc,2\n".as_bytes(), "l").unwrap_err();
        assert_eq!(err.to_string(), "non-binary label at index 2");
    }

    #[test]
    fn dataset_accepts_unlabeled_rows() {
        let text = "instance_id,f1,f2,label\na,0.5,1,1\nb,0.1,2,0\nc,3,4,?\n";
        let d = read_dataset(text.as_bytes(), "d").unwrap();
        assert_eq!(d.labels, vec![Some(1), Some(0), None]);
        let (labeled, labels) = d.labeled();
        assert_eq!(labeled.rows.len(), 2);
        assert_eq!(labels.as_slice(), &[1, 0]);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &d).unwrap();
        assert_eq!(read_dataset(buf.as_slice(), "d").unwrap(), d);
    }
}
