//! Agglomerative clustering of classifier columns and cluster-based
//! stacking.
//!
//! Intra-cluster stacking fits one logistic model per cluster and averages
//! their probabilities. Inter-cluster stacking averages the columns of each
//! cluster and fits a single logistic model over the cluster means.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::data::{LabelVector, PredictionMatrix};
use crate::error::{Error, Result};
use crate::metrics::{auc, correlation_distance_matrix, diversity_matrix};
use crate::stack::{fit_logistic, normalize_magnitudes, predict_logistic, LogisticConfig, LogisticModel};

/// One agglomeration step. Leaves are nodes `0..M`; the cluster created by
/// merge `t` is node `M + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaves: usize,
}

/// Average-linkage (UPGMA) clustering of a dissimilarity matrix.
///
/// Among equally close pairs the one whose (smaller min-leaf, larger
/// min-leaf) is lexicographically smallest merges first.
pub fn hcluster(distance: &[Vec<f64>]) -> Result<Dendrogram> {
    let m = distance.len();
    for (i, row) in distance.iter().enumerate() {
        if row.len() != m {
            return Err(Error::Dimension(format!("distance row {i} has {} entries, expected {m}", row.len())));
        }
        if row[i] != 0.0 {
            return Err(Error::InvalidParam(format!("distance diagonal at {i} is {}", row[i])));
        }
        for (j, &d) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&d) {
                return Err(Error::InvalidParam(format!("distance ({i}, {j}) = {d} outside [0, 1]")));
            }
            if (d - distance[j][i]).abs() > 1e-12 {
                return Err(Error::NotSymmetric(i, j));
            }
        }
    }

    // active clusters: (node id, min leaf, size)
    let mut active: Vec<(usize, usize, usize)> = (0..m).map(|i| (i, i, 1)).collect();
    let mut d: Vec<Vec<f64>> = distance.to_vec();
    let mut merges = Vec::with_capacity(m.saturating_sub(1));

    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for x in 0..active.len() {
            for y in x + 1..active.len() {
                let dist = d[x][y];
                let key = ordered_leaves(&active, x, y);
                let better = match best {
                    None => true,
                    Some((bd, bx, by)) => {
                        dist < bd || (dist == bd && key < ordered_leaves(&active, bx, by))
                    }
                };
                if better {
                    best = Some((dist, x, y));
                }
            }
        }
        let (height, x, y) = best.expect("at least two active clusters");
        let (first, second) = if active[x].1 < active[y].1 { (x, y) } else { (y, x) };
        let (nx, ny) = (active[x].2 as f64, active[y].2 as f64);
        let size = active[x].2 + active[y].2;
        merges.push(Merge {
            a: active[first].0,
            b: active[second].0,
            height,
            size,
        });

        // Lance–Williams update for average linkage, stored in slot x
        for z in 0..active.len() {
            if z != x && z != y {
                let v = (nx * d[x][z] + ny * d[y][z]) / (nx + ny);
                d[x][z] = v;
                d[z][x] = v;
            }
        }
        active[x] = (m + merges.len() - 1, active[x].1.min(active[y].1), size);
        active.remove(y);
        d.remove(y);
        for row in &mut d {
            row.remove(y);
        }
    }
    Ok(Dendrogram { merges, leaves: m })
}

fn ordered_leaves(active: &[(usize, usize, usize)], x: usize, y: usize) -> (usize, usize) {
    let (a, b) = (active[x].1, active[y].1);
    (a.min(b), a.max(b))
}

/// Cuts the dendrogram into `k` clusters by undoing its last `k - 1` merges.
/// Clusters are numbered `1..=k` in order of their smallest leaf.
pub fn cut_k(dendrogram: &Dendrogram, k: usize) -> Result<Vec<usize>> {
    let m = dendrogram.leaves;
    if k < 1 || k > m {
        return Err(Error::InvalidParam(format!("k = {k} outside [1, {m}]")));
    }
    let mut parent: Vec<usize> = (0..m + dendrogram.merges.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (t, merge) in dendrogram.merges.iter().take(m - k).enumerate() {
        let node = m + t;
        let ra = find(&mut parent, merge.a);
        let rb = find(&mut parent, merge.b);
        parent[ra] = node;
        parent[rb] = node;
    }
    let mut label_of_root = std::collections::HashMap::new();
    let mut assignment = Vec::with_capacity(m);
    for leaf in 0..m {
        let root = find(&mut parent, leaf);
        let next = label_of_root.len() + 1;
        assignment.push(*label_of_root.entry(root).or_insert(next));
    }
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterMode {
    Intra,
    Inter,
}

impl fmt::Display for ClusterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClusterMode::Intra => "intra",
            ClusterMode::Inter => "inter",
        })
    }
}

impl FromStr for ClusterMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "intra" => Ok(ClusterMode::Intra),
            "inter" => Ok(ClusterMode::Inter),
            other => Err(Error::InvalidParam(format!("cluster mode {other:?}, expected intra or inter"))),
        }
    }
}

/// Dissimilarity used to cluster columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceKind {
    /// `1 - |Pearson ρ|` between prediction columns.
    #[default]
    Pearson,
    /// `1 - |Q|` between thresholded correctness indicators.
    QStat,
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceKind::Pearson => "pearson",
            DistanceKind::QStat => "qstat",
        })
    }
}

impl FromStr for DistanceKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(DistanceKind::Pearson),
            "qstat" => Ok(DistanceKind::QStat),
            other => Err(Error::InvalidParam(format!("distance {other:?}, expected pearson or qstat"))),
        }
    }
}

pub fn column_distances(
    val: &PredictionMatrix,
    labels: &LabelVector,
    kind: DistanceKind,
) -> Result<Vec<Vec<f64>>> {
    match kind {
        DistanceKind::Pearson => Ok(correlation_distance_matrix(val)),
        DistanceKind::QStat if val.n_classifiers() < 2 => Ok(vec![vec![0.0]; val.n_classifiers()]),
        DistanceKind::QStat => diversity_matrix(val, labels),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStackModel {
    pub mode: ClusterMode,
    pub k: usize,
    pub column_ids: Vec<String>,
    /// Cluster (1-based) of each entry in `column_ids`.
    pub assignment: Vec<usize>,
    /// One model per cluster (intra) or a single model over cluster means
    /// (inter).
    pub models: Vec<LogisticModel>,
}

impl ClusterStackModel {
    /// Column positions of cluster `c` (1-based) within `column_ids`.
    fn members(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &a)| a == c)
            .map(|(j, _)| j)
    }

    pub fn predict(&self, matrix: &PredictionMatrix) -> Result<Vec<f64>> {
        let cols = matrix.column_indices(&self.column_ids)?;
        let cluster_columns = |c: usize| -> Vec<Vec<f64>> {
            self.members(c).map(|j| matrix.column(cols[j]).to_vec()).collect()
        };
        match self.mode {
            ClusterMode::Intra => {
                let mut sum = vec![0.0; matrix.n_instances()];
                for (c, model) in (1..=self.k).zip(&self.models) {
                    let p = predict_logistic(model, &cluster_columns(c))
                        .map_err(|e| Error::Cluster { cluster: c, source: Box::new(e) })?;
                    for (s, v) in sum.iter_mut().zip(p) {
                        *s += v;
                    }
                }
                Ok(sum.into_iter().map(|s| s / self.k as f64).collect())
            }
            ClusterMode::Inter => {
                let means: Vec<Vec<f64>> = (1..=self.k).map(|c| column_mean(&cluster_columns(c))).collect();
                predict_logistic(&self.models[0], &means)
            }
        }
    }

    /// Normalised coefficient magnitudes spread over base columns: within a
    /// cluster model for intra (each cluster carrying 1/k), and evenly across
    /// a cluster's columns for inter.
    pub fn member_weights(&self) -> Vec<(String, f64)> {
        let mut weights = vec![0.0; self.column_ids.len()];
        match self.mode {
            ClusterMode::Intra => {
                for (c, model) in (1..=self.k).zip(&self.models) {
                    let norm = normalize_magnitudes(&model.coefficients);
                    for (j, w) in self.members(c).zip(norm) {
                        weights[j] = w / self.k as f64;
                    }
                }
            }
            ClusterMode::Inter => {
                let norm = normalize_magnitudes(&self.models[0].coefficients);
                for (c, w) in (1..=self.k).zip(norm) {
                    let members: Vec<usize> = self.members(c).collect();
                    for &j in &members {
                        weights[j] = w / members.len() as f64;
                    }
                }
            }
        }
        self.column_ids.iter().cloned().zip(weights).collect()
    }
}

fn column_mean(columns: &[Vec<f64>]) -> Vec<f64> {
    let n = columns.first().map_or(0, Vec::len);
    let mut sum = vec![0.0; n];
    for c in columns {
        for (s, v) in sum.iter_mut().zip(c) {
            *s += v;
        }
    }
    sum.into_iter().map(|s| s / columns.len() as f64).collect()
}

/// Fits a cluster-stacking model for a fixed column assignment.
pub fn fit_with_assignment(
    val: &PredictionMatrix,
    labels: &LabelVector,
    mode: ClusterMode,
    assignment: &[usize],
    config: &LogisticConfig,
) -> Result<ClusterStackModel> {
    if assignment.len() != val.n_classifiers() {
        return Err(Error::Dimension(format!(
            "assignment covers {} of {} columns",
            assignment.len(),
            val.n_classifiers()
        )));
    }
    let k = assignment.iter().copied().max().unwrap_or(0);
    if (1..=k).any(|c| !assignment.contains(&c)) || assignment.contains(&0) {
        return Err(Error::InvalidParam("cluster ids must cover 1..=k with no empty cluster".into()));
    }
    let cluster_columns = |c: usize| -> Vec<Vec<f64>> {
        assignment
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == c)
            .map(|(j, _)| val.column(j).to_vec())
            .collect()
    };
    let models = match mode {
        ClusterMode::Intra => (1..=k)
            .into_par_iter()
            .map(|c| {
                fit_logistic(&cluster_columns(c), labels, config)
                    .map_err(|e| Error::Cluster { cluster: c, source: Box::new(e) })
            })
            .collect::<Result<Vec<_>>>()?,
        ClusterMode::Inter => {
            let means: Vec<Vec<f64>> = (1..=k).map(|c| column_mean(&cluster_columns(c))).collect();
            vec![fit_logistic(&means, labels, config)?]
        }
    };
    Ok(ClusterStackModel {
        mode,
        k,
        column_ids: val.classifier_ids().to_vec(),
        assignment: assignment.to_vec(),
        models,
    })
}

pub fn cluster_stack(
    val: &PredictionMatrix,
    labels: &LabelVector,
    mode: ClusterMode,
    k: usize,
    distance: DistanceKind,
    config: &LogisticConfig,
) -> Result<ClusterStackModel> {
    let dendrogram = hcluster(&column_distances(val, labels, distance)?)?;
    fit_with_assignment(val, labels, mode, &cut_k(&dendrogram, k)?, config)
}

pub fn intra_cluster_stack(
    val: &PredictionMatrix,
    labels: &LabelVector,
    k: usize,
    distance: DistanceKind,
    config: &LogisticConfig,
) -> Result<ClusterStackModel> {
    cluster_stack(val, labels, ClusterMode::Intra, k, distance, config)
}

pub fn inter_cluster_stack(
    val: &PredictionMatrix,
    labels: &LabelVector,
    k: usize,
    distance: DistanceKind,
    config: &LogisticConfig,
) -> Result<ClusterStackModel> {
    cluster_stack(val, labels, ClusterMode::Inter, k, distance, config)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// `(k, validation AUC)` for each k evaluated, in ascending k.
    pub per_k: Vec<(usize, f64)>,
    pub best_k: usize,
}

/// Fits `mode` at every k in `ks` and scores each fit on the validation
/// data it was fitted on. Ties go to the smallest k.
pub fn sweep_k(
    val: &PredictionMatrix,
    labels: &LabelVector,
    mode: ClusterMode,
    ks: impl IntoIterator<Item = usize>,
    distance: DistanceKind,
    config: &LogisticConfig,
) -> Result<SweepResult> {
    let mut ks: Vec<usize> = ks.into_iter().collect();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::Empty("k range"));
    }
    let dendrogram = hcluster(&column_distances(val, labels, distance)?)?;
    let per_k = ks
        .par_iter()
        .map(|&k| {
            let model = fit_with_assignment(val, labels, mode, &cut_k(&dendrogram, k)?, config)?;
            Ok((k, auc(&model.predict(val)?, labels)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = per_k[0];
    for &(k, a) in &per_k[1..] {
        if a > best.1 {
            best = (k, a);
        }
    }
    Ok(SweepResult { per_k, best_k: best.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stack::stack_all;

    fn three_points() -> Vec<Vec<f64>> {
        vec![
            vec![0.0, 0.1, 0.8],
            vec![0.1, 0.0, 0.9],
            vec![0.8, 0.9, 0.0],
        ]
    }

    #[test]
    fn two_leaves_merge_once() {
        let d = hcluster(&[vec![0.0, 0.4], vec![0.4, 0.0]]).unwrap();
        assert_eq!(d.merges, vec![Merge { a: 0, b: 1, height: 0.4, size: 2 }]);
    }

    #[test]
    fn average_linkage_by_hand() {
        let d = hcluster(&three_points()).unwrap();
        assert_eq!(d.merges[0], Merge { a: 0, b: 1, height: 0.1, size: 2 });
        // {A,B} holds the smaller leaf so it is listed first
        assert_eq!(d.merges[1].a, 3);
        assert_eq!(d.merges[1].b, 2);
        assert!((d.merges[1].height - 0.85).abs() < 1e-15);
        assert_eq!(cut_k(&d, 2).unwrap(), vec![1, 1, 2]);
        assert_eq!(cut_k(&d, 1).unwrap(), vec![1, 1, 1]);
        assert_eq!(cut_k(&d, 3).unwrap(), vec![1, 2, 3]);
        assert!(cut_k(&d, 0).is_err());
        assert!(cut_k(&d, 4).is_err());
    }

    #[test]
    fn duplicates_merge_first_at_zero() {
        let dist = vec![
            vec![0.0, 0.5, 0.0],
            vec![0.5, 0.0, 0.5],
            vec![0.0, 0.5, 0.0],
        ];
        let d = hcluster(&dist).unwrap();
        assert_eq!((d.merges[0].a, d.merges[0].b, d.merges[0].height), (0, 2, 0.0));
    }

    #[test]
    fn ties_prefer_smallest_leaves() {
        let dist = vec![vec![0.0, 0.3, 0.3], vec![0.3, 0.0, 0.3], vec![0.3, 0.3, 0.0]];
        let d = hcluster(&dist).unwrap();
        assert_eq!((d.merges[0].a, d.merges[0].b), (0, 1));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let dist = vec![vec![0.0, 0.3], vec![0.4, 0.0]];
        assert!(matches!(hcluster(&dist), Err(Error::NotSymmetric(0, 1))));
    }

    fn pool() -> (PredictionMatrix, LabelVector) {
        use rand::{Rng, SeedableRng};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let y: Vec<u8> = (0..200).map(|_| r.random_bool(0.5) as u8).collect();
        let cols = (0..6)
            .map(|j| {
                y.iter()
                    .map(|&l| (0.1 * (j % 3 + 1) as f64 * l as f64 + 0.7 * r.random::<f64>()).min(1.0))
                    .collect()
            })
            .collect();
        (PredictionMatrix::from_columns(cols).unwrap(), LabelVector::new(y).unwrap())
    }

    #[test]
    fn degenerate_k_match_stack_all() {
        let (val, y) = pool();
        let cfg = LogisticConfig::default();
        let reference = stack_all(&val, &y, &cfg).unwrap().predict(&val).unwrap();
        let intra = intra_cluster_stack(&val, &y, 1, DistanceKind::Pearson, &cfg).unwrap();
        assert_eq!(intra.predict(&val).unwrap(), reference);
        let inter = inter_cluster_stack(&val, &y, 6, DistanceKind::Pearson, &cfg).unwrap();
        assert_eq!(inter.predict(&val).unwrap(), reference);
    }

    #[test]
    fn intra_with_singletons_averages_single_feature_models() {
        let (val, y) = pool();
        let cfg = LogisticConfig::default();
        let model = intra_cluster_stack(&val, &y, 6, DistanceKind::Pearson, &cfg).unwrap();
        assert_eq!(model.models.len(), 6);
        assert!(model.models.iter().all(|m| m.coefficients.len() == 1));
    }

    #[test]
    fn intra_prediction_is_mean_of_independent_fits() {
        let (val, y) = pool();
        let cfg = LogisticConfig::default();
        let model = intra_cluster_stack(&val, &y, 3, DistanceKind::Pearson, &cfg).unwrap();
        let mut manual = vec![0.0; val.n_instances()];
        for c in 1..=3 {
            let cols: Vec<Vec<f64>> = (0..6)
                .filter(|&j| model.assignment[j] == c)
                .map(|j| val.column(j).to_vec())
                .collect();
            let m = fit_logistic(&cols, &y, &cfg).unwrap();
            for (s, p) in manual.iter_mut().zip(predict_logistic(&m, &cols).unwrap()) {
                *s += p / 3.0;
            }
        }
        for (a, b) in model.predict(&val).unwrap().iter().zip(&manual) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inter_equals_stack_all_on_cluster_means() {
        let (val, y) = pool();
        let cfg = LogisticConfig::default();
        let model = inter_cluster_stack(&val, &y, 4, DistanceKind::Pearson, &cfg).unwrap();
        let means: Vec<Vec<f64>> = (1..=4)
            .map(|c| {
                let cols: Vec<Vec<f64>> = (0..6)
                    .filter(|&j| model.assignment[j] == c)
                    .map(|j| val.column(j).to_vec())
                    .collect();
                column_mean(&cols)
            })
            .collect();
        let mean_matrix = PredictionMatrix::from_columns(means).unwrap();
        let reference = stack_all(&mean_matrix, &y, &cfg).unwrap().predict(&mean_matrix).unwrap();
        assert_eq!(model.predict(&val).unwrap(), reference);
    }

    #[test]
    fn inter_k1_ranks_like_the_pool_mean() {
        let (val, y) = pool();
        let cfg = LogisticConfig::default();
        let model = inter_cluster_stack(&val, &y, 1, DistanceKind::Pearson, &cfg).unwrap();
        let all: Vec<usize> = (0..6).collect();
        let mean = crate::combine::mean_of_columns(&val, &all).unwrap();
        let a_mean = auc(&mean, &y).unwrap();
        let a_inter = auc(&model.predict(&val).unwrap(), &y).unwrap();
        if model.models[0].coefficients[0] > 0.0 {
            assert_eq!(a_inter, a_mean);
        } else {
            assert!((a_inter - (1.0 - a_mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn sweep_single_k_and_ties() {
        let (val, y) = pool();
        let cfg = LogisticConfig::default();
        let s = sweep_k(&val, &y, ClusterMode::Intra, [1], DistanceKind::Pearson, &cfg).unwrap();
        assert_eq!(s.best_k, 1);
        let reference = auc(&stack_all(&val, &y, &cfg).unwrap().predict(&val).unwrap(), &y).unwrap();
        assert_eq!(s.per_k, vec![(1, reference)]);

        // identical columns make every k equivalent
        let c = val.column(0).to_vec();
        let same = PredictionMatrix::from_columns(vec![c.clone(), c.clone(), c]).unwrap();
        let s = sweep_k(&same, &y, ClusterMode::Inter, 1..=3, DistanceKind::Pearson, &cfg).unwrap();
        let first = s.per_k[0].1;
        assert!(s.per_k.iter().all(|&(_, a)| a == first));
        assert_eq!(s.best_k, 1);
    }

    #[test]
    fn constant_column_cluster_is_intercept_only() {
        let (val, y) = pool();
        let constant = PredictionMatrix::with_ids(vec!["const".into()], vec!["const".into()], vec![vec![0.5; 200]])
            .unwrap();
        let val = val.hstack(&constant).unwrap();
        let cfg = LogisticConfig::default();
        // the constant column is maximally distant and becomes its own cluster
        let model = intra_cluster_stack(&val, &y, 2, DistanceKind::Pearson, &cfg).unwrap();
        let c = model.assignment[6];
        assert_eq!(model.assignment.iter().filter(|&&a| a == c).count(), 1);
        assert!(model.models[c - 1].coefficients[0].abs() < 1e-6);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn distance_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
            grid_matrix(10)
        }

        // coarse grids produce many ties; fine ones make ties vanishingly rare
        fn grid_matrix(levels: u32) -> impl Strategy<Value = Vec<Vec<f64>>> {
            (2usize..9).prop_flat_map(move |m| {
                proptest::collection::vec(0..levels, m * (m - 1) / 2).prop_map(move |vals| {
                    let mut d = vec![vec![0.0; m]; m];
                    let mut it = vals.into_iter();
                    for i in 0..m {
                        for j in i + 1..m {
                            let v = it.next().unwrap() as f64 / (levels - 1) as f64;
                            d[i][j] = v;
                            d[j][i] = v;
                        }
                    }
                    d
                })
            })
        }

        proptest! {
            #[test]
            fn cuts_are_nested(d in distance_matrix()) {
                let den = hcluster(&d).unwrap();
                let m = d.len();
                prop_assert_eq!(den.merges.len(), m - 1);
                for w in den.merges.windows(2) {
                    prop_assert!(w[1].height >= w[0].height - 1e-12);
                }
                for k in 2..=m {
                    let fine = cut_k(&den, k).unwrap();
                    let coarse = cut_k(&den, k - 1).unwrap();
                    prop_assert_eq!(fine.iter().max().copied(), Some(k));
                    for a in 0..m {
                        for b in 0..m {
                            if fine[a] == fine[b] {
                                prop_assert_eq!(coarse[a], coarse[b]);
                            }
                        }
                    }
                }
            }

            #[test]
            fn permutation_only_relabels(d in grid_matrix(1 << 30), seed in any::<u64>()) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let m = d.len();
                let mut perm: Vec<usize> = (0..m).collect();
                perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let pd: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| d[perm[i]][perm[j]]).collect()).collect();
                let den = hcluster(&d).unwrap();
                let pden = hcluster(&pd).unwrap();
                // merge heights agree; partitions agree whenever heights are distinct
                let heights: Vec<f64> = den.merges.iter().map(|x| x.height).collect();
                let pheights: Vec<f64> = pden.merges.iter().map(|x| x.height).collect();
                for (a, b) in heights.iter().zip(&pheights) {
                    prop_assert!((a - b).abs() < 1e-9);
                }
                let distinct = heights.windows(2).all(|w| (w[1] - w[0]).abs() > 1e-9);
                if distinct {
                    for k in 1..=m {
                        let a = cut_k(&den, k).unwrap();
                        let b = cut_k(&pden, k).unwrap();
                        for x in 0..m {
                            for y in 0..m {
                                prop_assert_eq!(a[perm[x]] == a[perm[y]], b[x] == b[y]);
                            }
                        }
                    }
                }
            }
        }
    }
}
