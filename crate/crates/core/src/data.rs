//! In-memory prediction matrices, label vectors and raw feature datasets.
//!
//! All types here validate their invariants on construction and are
//! immutable afterwards. Instances are addressed by position (file order);
//! identifiers are carried for I/O only.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Instances × classifiers matrix of positive-class probabilities.
///
/// Stored column-major: nearly every consumer (AUC per column, column means,
/// meta-feature construction) walks one classifier at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionMatrix {
    instance_ids: Vec<String>,
    classifier_ids: Vec<String>,
    groups: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl PredictionMatrix {
    /// Builds a matrix, checking every invariant. `groups[j]` is the bag
    /// group of column `j`.
    pub fn new(
        instance_ids: Vec<String>,
        classifier_ids: Vec<String>,
        groups: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let matrix = PredictionMatrix {
            instance_ids,
            classifier_ids,
            groups,
            columns,
        };
        matrix.check()?;
        Ok(matrix)
    }

    /// Builds a matrix with generated ids (`i0..`, `c0..`) and one singleton
    /// bag group per column.
    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        let ids: Vec<String> = (0..columns.len()).map(|j| format!("c{j}")).collect();
        PredictionMatrix::new(default_instance_ids(n), ids.clone(), ids, columns)
    }

    /// Like [`PredictionMatrix::from_columns`] with explicit column ids and groups.
    pub fn with_ids(
        classifier_ids: Vec<String>,
        groups: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        PredictionMatrix::new(default_instance_ids(n), classifier_ids, groups, columns)
    }

    pub(crate) fn check(&self) -> Result<()> {
        let m = self.columns.len();
        if self.classifier_ids.len() != m {
            return Err(Error::Dimension(format!(
                "{} classifier ids for {} columns",
                self.classifier_ids.len(),
                m
            )));
        }
        if self.groups.len() != m {
            return Err(Error::Dimension(format!(
                "{} bag groups for {} columns",
                self.groups.len(),
                m
            )));
        }
        let n = self.instance_ids.len();
        let mut seen = HashSet::with_capacity(m);
        for (j, (id, column)) in self.classifier_ids.iter().zip(&self.columns).enumerate() {
            if !seen.insert(id.as_str()) {
                return Err(Error::DuplicateId(id.clone()));
            }
            if column.len() != n {
                return Err(Error::Dimension(format!(
                    "column {j} ({id}) has {} rows, expected {n}",
                    column.len()
                )));
            }
            for (i, &v) in column.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn n_instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn n_classifiers(&self) -> usize {
        self.columns.len()
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn classifier_ids(&self) -> &[String] {
        &self.classifier_ids
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn group_of(&self, column: usize) -> &str {
        &self.groups[column]
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    pub fn column_index(&self, id: &str) -> Option<usize> {
        self.classifier_ids.iter().position(|c| c == id)
    }

    /// Resolves ids to column positions, failing on the first unknown id.
    pub fn column_indices<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.column_index(id.as_ref())
                    .ok_or_else(|| Error::UnknownId(id.as_ref().to_string()))
            })
            .collect()
    }

    /// Distinct bag groups in order of first appearance.
    pub fn group_names(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.groups
            .iter()
            .filter(|g| seen.insert(g.as_str()))
            .cloned()
            .collect()
    }

    /// Row subset (rows may repeat).
    pub fn select_rows(&self, rows: &[usize]) -> PredictionMatrix {
        PredictionMatrix {
            instance_ids: rows.iter().map(|&i| self.instance_ids[i].clone()).collect(),
            classifier_ids: self.classifier_ids.clone(),
            groups: self.groups.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| rows.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }

    /// Column subset; columns must be distinct.
    pub fn select_columns(&self, cols: &[usize]) -> Result<PredictionMatrix> {
        PredictionMatrix::new(
            self.instance_ids.clone(),
            cols.iter().map(|&j| self.classifier_ids[j].clone()).collect(),
            cols.iter().map(|&j| self.groups[j].clone()).collect(),
            cols.iter().map(|&j| self.columns[j].clone()).collect(),
        )
    }

    /// Replaces the bag-group assignment.
    pub fn with_groups(self, groups: Vec<String>) -> Result<PredictionMatrix> {
        PredictionMatrix::new(self.instance_ids, self.classifier_ids, groups, self.columns)
    }

    /// Appends the columns of `other` (same instances, disjoint ids).
    pub fn hstack(&self, other: &PredictionMatrix) -> Result<PredictionMatrix> {
        if other.n_instances() != self.n_instances() {
            return Err(Error::Dimension(format!(
                "cannot join matrices with {} and {} rows",
                self.n_instances(),
                other.n_instances()
            )));
        }
        let mut ids = self.classifier_ids.clone();
        ids.extend(other.classifier_ids.iter().cloned());
        let mut groups = self.groups.clone();
        groups.extend(other.groups.iter().cloned());
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        PredictionMatrix::new(self.instance_ids.clone(), ids, groups, columns)
    }
}

fn default_instance_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("i{i}")).collect()
}

/// Binary ground truth aligned with the rows of a [`PredictionMatrix`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(index) = labels.iter().position(|&l| l > 1) {
            return Err(Error::NonBinaryLabel { index });
        }
        Ok(LabelVector(labels))
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(labels: I) -> Self {
        LabelVector(labels.into_iter().map(u8::from).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().copied()
    }

    pub fn positives(&self) -> usize {
        self.0.iter().filter(|&&l| l == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn has_both_classes(&self) -> bool {
        let p = self.positives();
        p > 0 && p < self.len()
    }

    /// Indices of instances carrying `label`, in order.
    pub fn indices_of(&self, label: u8) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn select(&self, rows: &[usize]) -> LabelVector {
        LabelVector(rows.iter().map(|&i| self.0[i]).collect())
    }

    /// Labels with classes swapped.
    pub fn flipped(&self) -> LabelVector {
        LabelVector(self.0.iter().map(|&l| 1 - l).collect())
    }
}

/// Re-checks every invariant of a matrix/label pair and their alignment.
/// Validating an already validated pair never fails.
pub fn validate_matrix(
    matrix: PredictionMatrix,
    labels: LabelVector,
) -> Result<(PredictionMatrix, LabelVector)> {
    matrix.check()?;
    if let Some(index) = labels.0.iter().position(|&l| l > 1) {
        return Err(Error::NonBinaryLabel { index });
    }
    if labels.len() != matrix.n_instances() {
        return Err(Error::Dimension(format!(
            "{} labels for {} instances",
            labels.len(),
            matrix.n_instances()
        )));
    }
    Ok((matrix, labels))
}

/// Raw feature table for the native learners. Rows whose label is `None`
/// are prediction-only.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub instance_ids: Vec<String>,
    pub feature_names: Vec<String>,
    /// Row-major features.
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Option<u8>>,
}

impl Dataset {
    pub fn new(
        instance_ids: Vec<String>,
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<Option<u8>>,
    ) -> Result<Self> {
        if instance_ids.len() != rows.len() || labels.len() != rows.len() {
            return Err(Error::Dimension(format!(
                "{} ids, {} rows, {} labels",
                instance_ids.len(),
                rows.len(),
                labels.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::Dimension(format!(
                    "row {i} has {} features, expected {}",
                    row.len(),
                    feature_names.len()
                )));
            }
            if let Some(col) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    path: "<dataset>".into(),
                    line: i + 2,
                    message: format!("non-finite feature in column {}", col + 1),
                });
            }
        }
        if let Some(index) = labels.iter().position(|l| matches!(l, Some(v) if *v > 1)) {
            return Err(Error::NonBinaryLabel { index });
        }
        Ok(Dataset {
            instance_ids,
            feature_names,
            rows,
            labels,
        })
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// The labeled subset, with its labels.
    pub fn labeled(&self) -> (Dataset, LabelVector) {
        let keep: Vec<usize> = (0..self.rows.len())
            .filter(|&i| self.labels[i].is_some())
            .collect();
        let labels = LabelVector(keep.iter().map(|&i| self.labels[i].unwrap()).collect());
        let subset = Dataset {
            instance_ids: keep.iter().map(|&i| self.instance_ids[i].clone()).collect(),
            feature_names: self.feature_names.clone(),
            rows: keep.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: keep.iter().map(|&i| self.labels[i]).collect(),
        };
        (subset, labels)
    }
}
