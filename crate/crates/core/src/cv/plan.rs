//! Fold topology: stratified outer folds, bootstrap bags balanced by
//! undersampling, and nested folds inside each training split.
//!
//! All indices refer to rows of the labeled dataset.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::LabelVector;
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const MAX_REDRAWS: usize = 1000;

/// A bootstrap resample of a training split and its class-balanced subset.
/// Both are sorted multisets of row indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BagSample {
    pub bootstrap: Vec<usize>,
    pub balanced: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NestedFold {
    pub held_out: Vec<usize>,
    pub train: Vec<usize>,
    pub bags: Vec<BagSample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OuterFold {
    pub test: Vec<usize>,
    pub train: Vec<usize>,
    pub bags: Vec<BagSample>,
    pub nested: Vec<NestedFold>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub outer_k: usize,
    pub nested_k: usize,
    pub bags_per_split: usize,
    pub seed: u64,
    pub n_instances: usize,
    pub folds: Vec<OuterFold>,
}

/// Splits `indices` into `k` stratified folds: each class is shuffled, the
/// positives are listed before the negatives and position `p` goes to fold
/// `p mod k`. Every fold is returned sorted.
pub fn stratified_folds(indices: &[usize], labels: &LabelVector, k: usize, rng: &mut Rng) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("fold count must be at least 2, got {k}")));
    }
    let mut order = Vec::with_capacity(indices.len());
    for class in [1u8, 0] {
        let mut members: Vec<usize> = indices.iter().copied().filter(|&i| labels.get(i) == class).collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall { class, count: members.len(), folds: k });
        }
        members.shuffle(rng);
        order.extend(members);
    }
    let mut folds = vec![Vec::new(); k];
    for (p, i) in order.into_iter().enumerate() {
        folds[p % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Bootstrap resample of `train`, then uniform removal of majority-class
/// draws until both classes have equal counts. Redraws when the bootstrap
/// misses a class.
pub fn balanced_bag(train: &[usize], labels: &LabelVector, rng: &mut Rng) -> Result<BagSample> {
    for _ in 0..MAX_REDRAWS {
        let mut bootstrap: Vec<usize> = (0..train.len()).map(|_| train[rng.random_range(0..train.len())]).collect();
        bootstrap.sort_unstable();
        let (pos, neg): (Vec<usize>, Vec<usize>) = bootstrap.iter().partition(|&&i| labels.get(i) == 1);
        if pos.is_empty() || neg.is_empty() {
            continue;
        }
        let (minority, majority) = if pos.len() <= neg.len() { (pos, neg) } else { (neg, pos) };
        let kept = sample(rng, majority.len(), minority.len());
        let mut balanced = minority;
        balanced.extend(kept.into_iter().map(|p| majority[p]));
        balanced.sort_unstable();
        return Ok(BagSample { bootstrap, balanced });
    }
    Err(Error::InvalidParam(format!(
        "bootstrap of {} rows failed to contain both classes in {MAX_REDRAWS} draws",
        train.len()
    )))
}

fn complement(all: &[usize], removed: &[usize]) -> Vec<usize> {
    // both sorted
    let mut out = Vec::with_capacity(all.len() - removed.len());
    let mut r = removed.iter().peekable();
    for &i in all {
        while r.peek().is_some_and(|&&x| x < i) {
            r.next();
        }
        if r.peek() != Some(&&i) {
            out.push(i);
        }
    }
    out
}

pub fn make_fold_plan(
    labels: &LabelVector,
    outer_k: usize,
    nested_k: usize,
    bags_per_split: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if bags_per_split == 0 {
        return Err(Error::InvalidParam("bags_per_split must be at least 1".into()));
    }
    let all: Vec<usize> = (0..labels.len()).collect();
    let tests = stratified_folds(&all, labels, outer_k, &mut rng::stream(seed, &[1]))?;
    let mut folds = Vec::with_capacity(outer_k);
    for (f, test) in tests.into_iter().enumerate() {
        let fi = f as u64;
        let train = complement(&all, &test);
        let bags = (0..bags_per_split)
            .map(|b| balanced_bag(&train, labels, &mut rng::stream(seed, &[2, fi, b as u64])))
            .collect::<Result<Vec<_>>>()?;
        let held = stratified_folds(&train, labels, nested_k, &mut rng::stream(seed, &[3, fi]))?;
        let nested = held
            .into_iter()
            .enumerate()
            .map(|(n, held_out)| {
                let inner = complement(&train, &held_out);
                let bags = (0..bags_per_split)
                    .map(|b| balanced_bag(&inner, labels, &mut rng::stream(seed, &[4, fi, n as u64, b as u64])))
                    .collect::<Result<Vec<_>>>()?;
                Ok(NestedFold { held_out, train: inner, bags })
            })
            .collect::<Result<Vec<_>>>()?;
        folds.push(OuterFold { test, train, bags, nested });
    }
    Ok(FoldPlan {
        outer_k,
        nested_k,
        bags_per_split,
        seed,
        n_instances: labels.len(),
        folds,
    })
}

impl FoldPlan {
    /// Index-set checks; returns a description of every violation found.
    pub fn audit(&self, labels: &LabelVector) -> Vec<String> {
        let mut problems = Vec::new();
        let n = self.n_instances;
        let mut seen = vec![0usize; n];
        for (f, fold) in self.folds.iter().enumerate() {
            let mut in_test = vec![false; n];
            for &i in &fold.test {
                if i >= n {
                    problems.push(format!("fold {f}: test index {i} out of range"));
                    continue;
                }
                in_test[i] = true;
                seen[i] += 1;
            }
            let mut check = |what: &str, idx: &[usize]| {
                if let Some(&i) = idx.iter().find(|&&i| i >= n || in_test[i]) {
                    problems.push(format!("fold {f}: {what} contains test index {i}"));
                }
            };
            check("train", &fold.train);
            for (b, bag) in fold.bags.iter().enumerate() {
                check(&format!("bag {b} bootstrap"), &bag.bootstrap);
                check(&format!("bag {b} balanced"), &bag.balanced);
            }
            for (k, nested) in fold.nested.iter().enumerate() {
                check(&format!("nested {k} held-out"), &nested.held_out);
                check(&format!("nested {k} train"), &nested.train);
                for (b, bag) in nested.bags.iter().enumerate() {
                    check(&format!("nested {k} bag {b} bootstrap"), &bag.bootstrap);
                    check(&format!("nested {k} bag {b} balanced"), &bag.balanced);
                }
            }
            if fold.train.len() + fold.test.len() != n {
                problems.push(format!("fold {f}: train and test do not cover the data"));
            }
            let mut held = vec![0usize; n];
            for nested in &fold.nested {
                for &i in &nested.held_out {
                    if i < n {
                        held[i] += 1;
                    }
                }
                if nested.held_out.iter().any(|i| nested.train.binary_search(i).is_ok()) {
                    problems.push(format!("fold {f}: nested held-out rows appear in nested train"));
                }
                for bag in &nested.bags {
                    if bag.bootstrap.iter().any(|i| nested.held_out.binary_search(i).is_ok()) {
                        problems.push(format!("fold {f}: nested bag draws held-out rows"));
                    }
                }
            }
            if fold.train.iter().any(|&i| i < n && held[i] != 1) {
                problems.push(format!("fold {f}: nested folds do not partition the training split"));
            }
            let unbalanced = fold
                .bags
                .iter()
                .chain(fold.nested.iter().flat_map(|nf| nf.bags.iter()))
                .filter(|bag| {
                    let pos = bag.balanced.iter().filter(|&&i| i < n && labels.get(i) == 1).count();
                    2 * pos != bag.balanced.len()
                })
                .count();
            if unbalanced > 0 {
                problems.push(format!("fold {f}: {unbalanced} bags are not class-balanced"));
            }
        }
        if let Some(i) = seen.iter().position(|&c| c != 1) {
            problems.push(format!("test folds do not partition the data: index {i} appears {} times", seen[i]));
        }
        problems
    }
}
