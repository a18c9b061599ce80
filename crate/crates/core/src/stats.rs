//! Rank-based comparison of several methods over several datasets: the
//! Friedman test, Nemenyi post-hoc analysis and critical-difference groups.
//!
//! Ranks run from 1 (worst) to k (best), so larger rank sums are better.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, FisherSnedecor};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::metrics::pearson;

/// Studentized range quantiles divided by `sqrt(2)` for infinite degrees of
/// freedom, k = 2..=20.
const Q_05: [f64; 19] = [
    1.959964, 2.343701, 2.569032, 2.727774, 2.849705, 2.948320, 3.030878, 3.101730, 3.163684,
    3.218654, 3.268004, 3.312739, 3.353618, 3.391230, 3.426041, 3.458425, 3.488685, 3.517073,
    3.543799,
];
const Q_10: [f64; 19] = [
    1.644854, 2.052293, 2.291341, 2.459516, 2.588521, 2.692732, 2.779884, 2.854606, 2.919889,
    2.977768, 3.029694, 3.076733, 3.119693, 3.159199, 3.195743, 3.229723, 3.261461, 3.291224,
    3.319233,
];

/// Midranks of `values` in ascending order, 1-based.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let r = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Methods × datasets performance with per-dataset ranks.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    pub performance: Vec<Vec<f64>>,
    /// `ranks[m][d]`, higher is better.
    pub ranks: Vec<Vec<f64>>,
}

impl RankTable {
    pub fn new(methods: Vec<String>, datasets: Vec<String>, performance: Vec<Vec<f64>>) -> Result<RankTable> {
        let k = methods.len();
        let n = datasets.len();
        if k < 2 || n < 2 {
            return Err(Error::InvalidParam(format!(
                "need at least 2 methods and 2 datasets, got {k} x {n}"
            )));
        }
        if performance.len() != k || performance.iter().any(|row| row.len() != n) {
            return Err(Error::Dimension(format!("performance table is not {k} x {n}")));
        }
        if let Some((m, d)) = (0..k)
            .flat_map(|m| (0..n).map(move |d| (m, d)))
            .find(|&(m, d)| !performance[m][d].is_finite())
        {
            return Err(Error::InvalidParam(format!(
                "non-finite performance for {} on {}",
                methods[m], datasets[d]
            )));
        }
        let mut ranks = vec![vec![0.0; n]; k];
        for d in 0..n {
            let column: Vec<f64> = performance.iter().map(|row| row[d]).collect();
            for (m, r) in midranks(&column).into_iter().enumerate() {
                ranks[m][d] = r;
            }
        }
        Ok(RankTable { methods, datasets, performance, ranks })
    }

    /// Table with generated method and dataset names.
    pub fn from_values(performance: Vec<Vec<f64>>) -> Result<RankTable> {
        let k = performance.len();
        let n = performance.first().map_or(0, Vec::len);
        RankTable::new(
            (0..k).map(|m| format!("m{m}")).collect(),
            (0..n).map(|d| format!("d{d}")).collect(),
            performance,
        )
    }

    pub fn n_methods(&self) -> usize {
        self.methods.len()
    }

    pub fn n_datasets(&self) -> usize {
        self.datasets.len()
    }

    pub fn rank_sums(&self) -> Vec<f64> {
        self.ranks.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn mean_ranks(&self) -> Vec<f64> {
        let n = self.n_datasets() as f64;
        self.rank_sums().into_iter().map(|s| s / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    pub statistic: f64,
    pub p_value: f64,
    pub table: RankTable,
}

pub fn friedman(table: RankTable) -> FriedmanResult {
    let k = table.n_methods() as f64;
    let n = table.n_datasets() as f64;
    let centre = (k + 1.0) / 2.0;
    let spread: f64 = table.mean_ranks().iter().map(|r| (r - centre).powi(2)).sum();
    let statistic = 12.0 * n / (k * (k + 1.0)) * spread;
    let chi = ChiSquared::new(k - 1.0).expect("k >= 2");
    FriedmanResult {
        statistic,
        p_value: chi.sf(statistic),
        table,
    }
}

/// Iman–Davenport F statistic and p-value derived from a Friedman result.
pub fn iman_davenport(result: &FriedmanResult) -> (f64, f64) {
    let k = result.table.n_methods() as f64;
    let n = result.table.n_datasets() as f64;
    let chi2 = result.statistic;
    let denom = n * (k - 1.0) - chi2;
    if denom <= 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let f = (n - 1.0) * chi2 / denom;
    let dist = FisherSnedecor::new(k - 1.0, (k - 1.0) * (n - 1.0)).expect("positive degrees of freedom");
    (f, dist.sf(f))
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// CDF of the range of `k` independent standard normals,
/// `k ∫ φ(x) [Φ(x) − Φ(x − w)]^(k−1) dx`, by composite Simpson's rule.
pub fn studentized_range_cdf(w: f64, k: usize) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    const STEPS: usize = 4000;
    let (lo, hi) = (-9.0, 9.0 + w);
    let h = (hi - lo) / STEPS as f64;
    let f = |x: f64| normal_pdf(x) * (normal_cdf(x) - normal_cdf(x - w)).powi(k as i32 - 1);
    let mut total = f(lo) + f(hi);
    for i in 1..STEPS {
        let x = lo + i as f64 * h;
        total += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    (k as f64 * total * h / 3.0).clamp(0.0, 1.0)
}

/// Studentized range critical value divided by `sqrt(2)`, for α ∈ {0.05, 0.10}
/// and 2 ≤ k ≤ 20.
pub fn critical_value(k: usize, alpha: f64) -> Result<f64> {
    let table = if (alpha - 0.05).abs() < 1e-12 {
        &Q_05
    } else if (alpha - 0.10).abs() < 1e-12 {
        &Q_10
    } else {
        return Err(Error::InvalidParam(format!("alpha {alpha} not tabulated, use 0.05 or 0.10")));
    };
    if !(2..=20).contains(&k) {
        return Err(Error::InvalidParam(format!("k = {k} outside the tabulated range 2..=20")));
    }
    Ok(table[k - 2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct NemenyiResult {
    pub alpha: f64,
    pub q_alpha: f64,
    pub critical_difference: f64,
    pub mean_ranks: Vec<f64>,
    /// Symmetric, with ones on the diagonal.
    pub p_values: Vec<Vec<f64>>,
}

pub fn nemenyi(table: &RankTable, alpha: f64) -> Result<NemenyiResult> {
    let k = table.n_methods();
    let q_alpha = critical_value(k, alpha)?;
    let se = (k as f64 * (k as f64 + 1.0) / (6.0 * table.n_datasets() as f64)).sqrt();
    let mean_ranks = table.mean_ranks();
    let mut p_values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let z = (mean_ranks[i] - mean_ranks[j]).abs() / se;
            let p = if z == 0.0 {
                1.0
            } else {
                1.0 - studentized_range_cdf(z * std::f64::consts::SQRT_2, k)
            };
            p_values[i][j] = p;
            p_values[j][i] = p;
        }
    }
    Ok(NemenyiResult {
        alpha,
        q_alpha,
        critical_difference: q_alpha * se,
        mean_ranks,
        p_values,
    })
}

/// Letters for critical-difference groups, in input order.
///
/// Methods are sorted by mean rank, best first; each maximal contiguous run
/// whose mean-rank spread is below `cd` gets the next letter.
pub fn group_letters(mean_ranks: &[f64], cd: f64) -> Vec<String> {
    let order = best_first(mean_ranks);
    let mut letters = vec![String::new(); mean_ranks.len()];
    let mut last_end: Option<usize> = None;
    let mut next = 0u8;
    for start in 0..order.len() {
        let mut end = start;
        while end + 1 < order.len() && mean_ranks[order[start]] - mean_ranks[order[end + 1]] < cd {
            end += 1;
        }
        if last_end.is_some_and(|e| end <= e) {
            continue;
        }
        let letter = letter_name(next);
        next += 1;
        for &m in &order[start..=end] {
            letters[m].push_str(&letter);
        }
        last_end = Some(end);
    }
    letters
}

fn letter_name(i: u8) -> String {
    if i < 26 {
        char::from(b'a' + i).to_string()
    } else {
        format!("[{i}]")
    }
}

/// Method indices by descending mean rank; ties keep input order.
pub fn best_first(mean_ranks: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..mean_ranks.len()).collect();
    order.sort_by(|&a, &b| mean_ranks[b].total_cmp(&mean_ranks[a]));
    order
}

/// One-sided sign test: probability of at least `wins` successes among
/// `wins + losses` fair coin flips. Ties are excluded by the caller.
pub fn sign_test(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if n == 0 || wins == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, n).expect("valid binomial");
    dist.sf(wins - 1)
}

/// Spearman rank correlation (Pearson on midranks); `None` when either
/// input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&midranks(a), &midranks(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_methods_give_zero_statistic() {
        let t = RankTable::from_values(vec![vec![0.7; 4]; 3]).unwrap();
        let r = friedman(t);
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn strict_order_table() {
        let perf = vec![vec![0.9, 0.8, 0.85, 0.7], vec![0.8, 0.7, 0.75, 0.6], vec![0.7, 0.6, 0.65, 0.5]];
        let r = friedman(RankTable::from_values(perf).unwrap());
        assert!((r.statistic - 8.0).abs() < 1e-12);
        // chi-square survival at 8 with 2 degrees of freedom is exp(-4)
        assert!((r.p_value - (-4.0f64).exp()).abs() < 1e-10);
        assert_eq!(r.table.rank_sums(), vec![12.0, 8.0, 4.0]);
    }

    #[test]
    fn midranks_on_ties() {
        assert_eq!(midranks(&[0.3, 0.1, 0.3, 0.2]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn rank_sums_total() {
        let perf = vec![vec![0.1, 0.5, 0.5], vec![0.1, 0.2, 0.9], vec![0.3, 0.5, 0.1], vec![0.1, 0.0, 0.4]];
        let t = RankTable::from_values(perf).unwrap();
        let total: f64 = t.rank_sums().iter().sum();
        assert_eq!(total, 4.0 * 5.0 * 3.0 / 2.0);
    }

    #[test]
    fn dimensions_are_checked() {
        assert!(RankTable::from_values(vec![vec![0.5, 0.4]]).is_err());
        assert!(RankTable::from_values(vec![vec![0.5], vec![0.4]]).is_err());
        assert!(RankTable::from_values(vec![vec![0.5, 0.4], vec![0.4]]).is_err());
    }

    #[test]
    fn iman_davenport_matches_formula() {
        let perf = vec![vec![0.9, 0.8, 0.6, 0.7], vec![0.8, 0.85, 0.75, 0.6], vec![0.7, 0.6, 0.65, 0.5]];
        let r = friedman(RankTable::from_values(perf).unwrap());
        let (f, p) = iman_davenport(&r);
        let expected = 3.0 * r.statistic / (4.0 * 2.0 - r.statistic);
        assert!((f - expected).abs() < 1e-12);
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn range_cdf_matches_table() {
        for k in 2..=20 {
            let q05 = critical_value(k, 0.05).unwrap() * std::f64::consts::SQRT_2;
            assert!((studentized_range_cdf(q05, k) - 0.95).abs() < 2e-6, "k = {k}");
            let q10 = critical_value(k, 0.10).unwrap() * std::f64::consts::SQRT_2;
            assert!((studentized_range_cdf(q10, k) - 0.90).abs() < 2e-6, "k = {k}");
        }
        // the range of two normals is |N(0, 2)|
        let w = 1.3;
        let exact = 2.0 * normal_cdf(w / std::f64::consts::SQRT_2) - 1.0;
        assert!((studentized_range_cdf(w, 2) - exact).abs() < 1e-10);
    }

    #[test]
    fn critical_difference_example() {
        let t = RankTable::from_values(vec![vec![0.9, 0.8, 0.85, 0.7], vec![0.8, 0.7, 0.75, 0.6], vec![0.7, 0.6, 0.65, 0.5]])
            .unwrap();
        let n = nemenyi(&t, 0.05).unwrap();
        assert!((n.critical_difference - 2.343701 * 0.5f64.sqrt()).abs() < 1e-12);
        assert!((n.critical_difference - 1.657).abs() < 1e-3);
        assert!(critical_value(21, 0.05).is_err());
        assert!(critical_value(5, 0.01).is_err());
    }

    #[test]
    fn pairwise_p_values() {
        let t = RankTable::from_values(vec![vec![0.9, 0.1, 0.5], vec![0.1, 0.9, 0.5], vec![0.2, 0.2, 0.2]]).unwrap();
        let n = nemenyi(&t, 0.05).unwrap();
        assert_eq!(n.p_values[0][1], 1.0);
        for i in 0..3 {
            assert_eq!(n.p_values[i][i], 1.0);
            for j in 0..3 {
                assert_eq!(n.p_values[i][j], n.p_values[j][i]);
            }
        }
    }

    #[test]
    fn gap_of_exactly_cd_has_p_alpha() {
        // k = 2 with N = 6: mean ranks 2 and 1 when one method always wins
        for (alpha, k) in [(0.05, 2usize), (0.10, 2)] {
            let n = 6;
            let perf = vec![vec![1.0; n], vec![0.0; n]];
            let t = RankTable::from_values(perf).unwrap();
            let ne = nemenyi(&t, alpha).unwrap();
            let se = ((k * (k + 1)) as f64 / (6.0 * n as f64)).sqrt();
            let z = ne.critical_difference / se;
            let p = 1.0 - studentized_range_cdf(z * std::f64::consts::SQRT_2, k);
            assert!((p - alpha).abs() < 1e-5);
        }
    }

    #[test]
    fn published_letter_layout() {
        let sums = [32.0, 27.0, 18.0, 17.0, 16.5, 15.0, 11.0, 7.5];
        let mean: Vec<f64> = sums.iter().map(|s| s / 4.0).collect();
        let letters = group_letters(&mean, 2.3);
        assert_eq!(letters, vec!["a", "ab", "bc", "c", "cd", "cd", "cd", "d"]);
    }

    #[test]
    fn letter_extremes() {
        assert_eq!(group_letters(&[3.0, 2.0, 1.0], 10.0), vec!["a", "a", "a"]);
        assert_eq!(group_letters(&[1.0, 3.0, 2.0], 0.5), vec!["c", "a", "b"]);
    }

    #[test]
    fn sign_test_values() {
        assert_eq!(sign_test(0, 5), 1.0);
        assert!((sign_test(5, 0) - 1.0 / 32.0).abs() < 1e-12);
        assert!((sign_test(4, 1) - 6.0 / 32.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_examples() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 25.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[3.0, 2.0]), None);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn table() -> impl Strategy<Value = Vec<Vec<f64>>> {
            (2usize..8, 2usize..8).prop_flat_map(|(k, n)| {
                proptest::collection::vec(proptest::collection::vec(0u8..6, n), k)
                    .prop_map(|rows| rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect())
            })
        }

        proptest! {
            #[test]
            fn monotone_transform_keeps_statistic(perf in table()) {
                let transformed: Vec<Vec<f64>> = perf
                    .iter()
                    .map(|r| r.iter().map(|v| (v * 0.7 + 0.1).exp()).collect())
                    .collect();
                let a = friedman(RankTable::from_values(perf).unwrap());
                let b = friedman(RankTable::from_values(transformed).unwrap());
                prop_assert_eq!(a.statistic, b.statistic);
                let k = a.table.n_methods() as f64;
                let n = a.table.n_datasets() as f64;
                let total: f64 = a.table.rank_sums().iter().sum();
                prop_assert!((total - k * (k + 1.0) * n / 2.0).abs() < 1e-9);
            }

            #[test]
            fn letters_share_iff_gap_below_cd(
                ranks in proptest::collection::vec(0u8..40, 2..10),
                cd in 0.5f64..15.0,
            ) {
                let mean: Vec<f64> = ranks.iter().map(|&r| f64::from(r) / 4.0).collect();
                let letters = group_letters(&mean, cd);
                for i in 0..mean.len() {
                    prop_assert!(!letters[i].is_empty());
                    for j in 0..mean.len() {
                        let share = letters[i].chars().any(|c| letters[j].contains(c));
                        prop_assert_eq!(share, (mean[i] - mean[j]).abs() < cd);
                    }
                }
            }
        }
    }
}
