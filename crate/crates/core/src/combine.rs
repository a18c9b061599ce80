//! Mean aggregation of prediction columns.

use crate::data::PredictionMatrix;
use crate::error::{Error, Result};

/// Per-instance mean of the columns at `cols` (repeats count with
/// multiplicity).
pub fn mean_of_columns(matrix: &PredictionMatrix, cols: &[usize]) -> Result<Vec<f64>> {
    if cols.is_empty() {
        return Err(Error::Empty("aggregation subset"));
    }
    let mut state = RunningMean::new(matrix.n_instances());
    for &j in cols {
        state.push(matrix.column(j))?;
    }
    state.current()
}

/// Per-instance mean of the named columns.
pub fn mean_aggregate<S: AsRef<str>>(matrix: &PredictionMatrix, subset: &[S]) -> Result<Vec<f64>> {
    let cols = matrix.column_indices(subset)?;
    mean_of_columns(matrix, &cols)
}

/// Collapses each bag group to the mean of its columns. Output columns are
/// named after their group, in order of first appearance.
pub fn bag_aggregate(matrix: &PredictionMatrix) -> Result<PredictionMatrix> {
    let names = matrix.group_names();
    let columns = names
        .iter()
        .map(|g| {
            let members: Vec<usize> = (0..matrix.n_classifiers())
                .filter(|&j| matrix.group_of(j) == g)
                .collect();
            mean_of_columns(matrix, &members)
        })
        .collect::<Result<Vec<_>>>()?;
    PredictionMatrix::new(
        matrix.instance_ids().to_vec(),
        names.clone(),
        names,
        columns,
    )
}

/// Cumulative mean over pushed columns, kept as a running sum.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningMean {
    sum: Vec<f64>,
    count: usize,
}

impl RunningMean {
    pub fn new(n_instances: usize) -> RunningMean {
        RunningMean {
            sum: vec![0.0; n_instances],
            count: 0,
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, column: &[f64]) -> Result<()> {
        if column.len() != self.sum.len() {
            return Err(Error::Dimension(format!(
                "column of length {} pushed onto running mean of length {}",
                column.len(),
                self.sum.len()
            )));
        }
        for (s, v) in self.sum.iter_mut().zip(column) {
            *s += v;
        }
        self.count += 1;
        Ok(())
    }

    pub fn current(&self) -> Result<Vec<f64>> {
        if self.count == 0 {
            return Err(Error::Empty("running mean has no columns"));
        }
        let n = self.count as f64;
        Ok(self.sum.iter().map(|s| s / n).collect())
    }

    /// Mean that would result from pushing `column`, without mutating.
    pub fn preview(&self, column: &[f64], out: &mut Vec<f64>) {
        let n = (self.count + 1) as f64;
        out.clear();
        out.extend(self.sum.iter().zip(column).map(|(s, v)| (s + v) / n));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pool() -> PredictionMatrix {
        PredictionMatrix::with_ids(
            vec!["A".into(), "B".into(), "C".into()],
            vec!["g1".into(), "g2".into(), "g1".into()],
            vec![vec![0.2, 0.4], vec![0.6, 0.0], vec![0.9, 0.3]],
        )
        .unwrap()
    }

    #[test]
    fn mean_examples() {
        let m = pool();
        assert_eq!(mean_aggregate(&m, &["A"]).unwrap(), vec![0.2, 0.4]);
        let ab = mean_aggregate(&m, &["A", "B"]).unwrap();
        assert!((ab[0] - 0.4).abs() < 1e-15 && (ab[1] - 0.2).abs() < 1e-15);
        let aab = mean_aggregate(&m, &["A", "A", "B"]).unwrap();
        for i in 0..2 {
            let expected = (2.0 * m.value(i, 0) + m.value(i, 1)) / 3.0;
            assert!((aab[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn mean_errors() {
        let m = pool();
        assert!(matches!(mean_aggregate::<&str>(&m, &[]), Err(Error::Empty(_))));
        assert!(matches!(mean_aggregate(&m, &["Z"]), Err(Error::UnknownId(_))));
    }

    #[test]
    fn bag_aggregate_groups() {
        let agg = bag_aggregate(&pool()).unwrap();
        assert_eq!(agg.classifier_ids(), &["g1", "g2"]);
        assert_eq!(agg.groups(), agg.classifier_ids());
        assert!((agg.value(0, 0) - 0.55).abs() < 1e-15);
        assert_eq!(agg.column(1), &[0.6, 0.0]);
    }

    #[test]
    fn singleton_groups_are_identity() {
        let m = PredictionMatrix::from_columns(vec![vec![0.1, 0.7], vec![0.3, 0.2]]).unwrap();
        assert_eq!(bag_aggregate(&m).unwrap(), m);
    }

    #[test]
    fn identical_bags_collapse_to_the_column() {
        let c = vec![0.13, 0.77, 0.5];
        let m = PredictionMatrix::with_ids(
            (0..10).map(|b| format!("svm.{b}")).collect(),
            vec!["svm".into(); 10],
            vec![c.clone(); 10],
        )
        .unwrap();
        let agg = bag_aggregate(&m).unwrap();
        for (a, b) in agg.column(0).iter().zip(&c) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn running_mean_examples() {
        let mut r = RunningMean::new(2);
        assert!(r.current().is_err());
        r.push(&[0.2, 0.4]).unwrap();
        assert_eq!(r.current().unwrap(), vec![0.2, 0.4]);
        r.push(&[0.2, 0.4]).unwrap();
        assert_eq!(r.current().unwrap(), vec![0.2, 0.4]);
        assert!(r.push(&[0.1]).is_err());
    }

    proptest! {
        #[test]
        fn running_mean_matches_batch_mean(
            cols in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 8), 1..12),
            order_seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let m = PredictionMatrix::from_columns(cols.clone()).unwrap();
            let mut idx: Vec<usize> = (0..cols.len()).collect();
            idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(order_seed));
            let mut r = RunningMean::new(8);
            for &j in &idx {
                r.push(&cols[j]).unwrap();
            }
            let running = r.current().unwrap();
            for i in 0..8 {
                let batch = cols.iter().map(|c| c[i]).sum::<f64>() / cols.len() as f64;
                prop_assert!((running[i] - batch).abs() <= 1e-12);
                prop_assert!((0.0..=1.0).contains(&running[i]) || (running[i] - 1.0).abs() < 1e-15);
            }
            let all: Vec<usize> = (0..cols.len()).collect();
            let via_mean = mean_of_columns(&m, &all).unwrap();
            for i in 0..8 {
                prop_assert!((via_mean[i] - running[i]).abs() <= 1e-12);
            }
        }
    }
}
