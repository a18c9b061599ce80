//! Subcommands that work on an existing prediction matrix.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, ValueEnum};
use ensemblekit::cluster::{
    column_distances, cut_k, fit_with_assignment, hcluster, sweep_k, ClusterMode, DistanceKind,
};
use ensemblekit::combine::{bag_aggregate, mean_of_columns};
use ensemblekit::io::read_predictions_file;
use ensemblekit::metrics::{auc, brier, mean_pairwise_profile, pair_diversity};
use ensemblekit::select::{ces_select, greedy_select, individual_aucs, rank_by_auc, CesParams, SelectionTrajectory};
use ensemblekit::stack::{meta_weights, stack_aggregated, stack_all, subsample_rows, LogisticConfig};
use ensemblekit::{EnsembleModel, LabelVector, PredictionMatrix};

use super::{fmt, PoolArgs};
use crate::error::{CliError, CliResult};
use crate::output::{CsvOut, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectMethod {
    Greedy,
    Ces,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_enum, default_value = "ces")]
    pub method: SelectMethod,
    #[arg(long, default_value_t = 2)]
    pub init_n: usize,
    /// Iteration budget; greedy stops at the pool size.
    #[arg(long, default_value_t = 100)]
    pub max_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub candidate_fraction: f64,
    /// Each classifier may be added at most once.
    #[arg(long)]
    pub without_replacement: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectory CSV: `iteration,chosen,val_auc,mean_diversity,brier`.
    #[arg(long)]
    pub out: PathBuf,
    /// Selection weights of the prefix with the highest validation AUC.
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
}

fn write_trajectory(path: &Path, prov: &Provenance, t: &SelectionTrajectory) -> CliResult<()> {
    let mut out = CsvOut::create(path, prov, &["iteration", "chosen", "val_auc", "mean_diversity", "brier"])?;
    for r in &t.records {
        out.row([r.iteration.to_string(), r.chosen.clone(), fmt(r.val_auc), fmt(r.mean_diversity), fmt(r.brier)])?;
    }
    out.finish()
}

fn write_members(path: &Path, prov: &Provenance, members: &[(String, f64)]) -> CliResult<()> {
    let mut out = CsvOut::create(path, prov, &["member", "weight"])?;
    for (id, w) in members {
        out.row([id.as_str(), &fmt(*w)])?;
    }
    out.finish()
}

fn run_selection(
    method: SelectMethod,
    matrix: &PredictionMatrix,
    labels: &LabelVector,
    params: &CesParams,
) -> CliResult<(SelectionTrajectory, EnsembleModel)> {
    Ok(match method {
        SelectMethod::Greedy => {
            let t = greedy_select(matrix, labels, params.max_size.min(matrix.n_classifiers()))?;
            let model = t.best_model()?;
            (t, model)
        }
        SelectMethod::Ces => {
            let (t, _) = ces_select(matrix, labels, params)?;
            let model = t.best_model()?;
            (t, model)
        }
    })
}

pub fn cmd_select(args: &SelectArgs) -> CliResult<()> {
    let mut prov = Provenance::new("select", args.seed);
    let (matrix, labels) = args.pool.load(&mut prov)?;
    let params = CesParams {
        init_n: args.init_n,
        max_size: args.max_size,
        with_replacement: !args.without_replacement,
        candidate_fraction: args.candidate_fraction,
        seed: args.seed,
    };
    prov.set("method", format!("{:?}", args.method))
        .set("init_n", params.init_n)
        .set("max_size", params.max_size)
        .set("with_replacement", params.with_replacement)
        .set("candidate_fraction", params.candidate_fraction);
    let (trajectory, model) = run_selection(args.method, &matrix, &labels, &params)?;
    write_trajectory(&args.out, &prov, &trajectory)?;
    if let Some(path) = &args.weights_out {
        write_members(path, &prov, &model.members())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StackMode {
    All,
    Aggregated,
}

#[derive(Debug, Args)]
pub struct StackArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long, value_enum, default_value = "aggregated")]
    pub mode: StackMode,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    /// Share of rows used for fitting.
    #[arg(long, default_value_t = 1.0)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Coefficient CSV: `input,coefficient,weight`.
    #[arg(long)]
    pub out: PathBuf,
    /// Prediction CSV to score with the fitted model.
    #[arg(long, requires = "scores_out")]
    pub apply: Option<PathBuf>,
    #[arg(long)]
    pub scores_out: Option<PathBuf>,
}

pub fn cmd_stack(args: &StackArgs) -> CliResult<()> {
    if !(args.val_fraction > 0.0 && args.val_fraction <= 1.0) {
        return Err(CliError::config("--val-fraction must be in (0, 1]"));
    }
    let mut prov = Provenance::new("stack", args.seed);
    let (matrix, labels) = args.pool.load(&mut prov)?;
    prov.set("mode", format!("{:?}", args.mode))
        .set("lambda", args.lambda)
        .set("val_fraction", args.val_fraction);
    let (matrix, labels) = if args.val_fraction < 1.0 {
        let rows = subsample_rows(&labels, args.val_fraction, args.seed)?;
        (matrix.select_rows(&rows), labels.select(&rows))
    } else {
        (matrix, labels)
    };
    let cfg = LogisticConfig { lambda: args.lambda, ..Default::default() };
    let model = match args.mode {
        StackMode::All => stack_all(&matrix, &labels, &cfg)?,
        StackMode::Aggregated => stack_aggregated(&matrix, &labels, &cfg)?,
    };
    let weights = meta_weights(&model)?;
    let mut out = CsvOut::create(&args.out, &prov, &["input", "coefficient", "weight"])?;
    if let EnsembleModel::LogisticMeta { model: fit, .. } = &model {
        out.row(["(intercept)", &fmt(fit.intercept), ""])?;
    }
    for ((id, raw), w) in weights.ids.iter().zip(&weights.raw).zip(&weights.normalized) {
        out.row([id.as_str(), &fmt(*raw), &fmt(*w)])?;
    }
    out.finish()?;

    if let (Some(apply), Some(scores_out)) = (&args.apply, &args.scores_out) {
        prov.input("apply", apply)?;
        let groups = args.pool.groups.as_ref().map(|p| ensemblekit::io::read_groups_file(p)).transpose()?;
        let target = read_predictions_file(apply, groups.as_ref())?;
        let scores = model.predict(&target)?;
        let mut out = CsvOut::create(scores_out, &prov, &["instance_id", "score"])?;
        for (id, s) in target.instance_ids().iter().zip(scores) {
            out.row([id.as_str(), &fmt(s)])?;
        }
        out.finish()?;
    }
    Ok(())
}

fn parse_sweep(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected k_min..k_max, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad k_min {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad k_max {b:?}"))?;
    if a == 0 || a > b {
        return Err(format!("empty or invalid range {s:?}"));
    }
    Ok(a..=b)
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("clusters").required(true).args(["k", "sweep"])))]
pub struct ClusterStackArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    #[arg(long)]
    pub mode: ClusterMode,
    /// Fixed number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Range of cluster counts to try, `k_min..k_max`; the best validation
    /// AUC wins.
    #[arg(long, value_parser = parse_sweep)]
    pub sweep: Option<RangeInclusive<usize>>,
    #[arg(long, default_value = "pearson")]
    pub distance: DistanceKind,
    #[arg(long, default_value_t = 1e-3)]
    pub lambda: f64,
    /// Assignment CSV: `member,cluster,weight`.
    #[arg(long)]
    pub out: PathBuf,
    /// Sweep CSV: `k,val_auc`.
    #[arg(long)]
    pub sweep_out: Option<PathBuf>,
}

pub fn cmd_cluster_stack(args: &ClusterStackArgs) -> CliResult<()> {
    let mut prov = Provenance::new("cluster-stack", 0);
    let (matrix, labels) = args.pool.load(&mut prov)?;
    prov.set("mode", args.mode)
        .set("distance", args.distance)
        .set("lambda", args.lambda)
        .set("k", args.k.map_or(String::new(), |k| k.to_string()))
        .set("sweep", args.sweep.as_ref().map_or(String::new(), |r| format!("{}..{}", r.start(), r.end())));
    let cfg = LogisticConfig { lambda: args.lambda, ..Default::default() };
    let k = match (&args.sweep, args.k) {
        (Some(range), _) => {
            let m = matrix.n_classifiers();
            if *range.end() > m {
                return Err(CliError::config(format!("--sweep reaches {} but the pool has {m} columns", range.end())));
            }
            let sweep = sweep_k(&matrix, &labels, args.mode, range.clone(), args.distance, &cfg)?;
            if let Some(path) = &args.sweep_out {
                let mut out = CsvOut::create(path, &prov, &["k", "val_auc"])?;
                for (k, a) in &sweep.per_k {
                    out.row([k.to_string(), fmt(*a)])?;
                }
                out.finish()?;
            }
            sweep.best_k
        }
        (None, Some(k)) => k,
        (None, None) => unreachable!("clap requires --k or --sweep"),
    };
    let assignment = cut_k(&hcluster(&column_distances(&matrix, &labels, args.distance)?)?, k)?;
    let model = fit_with_assignment(&matrix, &labels, args.mode, &assignment, &cfg)?;
    let weights = model.member_weights();
    let mut out = CsvOut::create(&args.out, &prov, &["member", "cluster", "weight"])?;
    for (j, id) in model.column_ids.iter().enumerate() {
        let w = weights.iter().find(|(m, _)| m == id).map_or(0.0, |(_, w)| *w);
        out.row([id.clone(), model.assignment[j].to_string(), fmt(w)])?;
    }
    out.finish()
}

#[derive(Debug, Args)]
pub struct DiversityArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    /// Use individual columns instead of bag-averaged classifiers.
    #[arg(long)]
    pub columns: bool,
    /// Classifiers counted as top performers, by individual AUC.
    #[arg(long, default_value_t = 2)]
    pub top: usize,
    /// Pair CSV: `classifier_a,classifier_b,q_adjusted,pair_mean_auc,either_is_top_performer`.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-classifier CSV: `classifier,auc,mean_diversity`.
    #[arg(long)]
    pub profile_out: Option<PathBuf>,
}

fn units(matrix: PredictionMatrix, columns: bool) -> CliResult<PredictionMatrix> {
    Ok(if columns { matrix } else { bag_aggregate(&matrix)? })
}

pub fn cmd_diversity(args: &DiversityArgs) -> CliResult<()> {
    let mut prov = Provenance::new("diversity", 0);
    let (matrix, labels) = args.pool.load(&mut prov)?;
    prov.set("columns", args.columns).set("top", args.top);
    let units = units(matrix, args.columns)?;
    let m = units.n_classifiers();
    let order = rank_by_auc(&individual_aucs(&units, &labels)?);
    let mut top = vec![false; m];
    for &j in order.iter().take(args.top) {
        top[j] = true;
    }
    let ids = units.classifier_ids();
    let mut out = CsvOut::create(
        &args.out,
        &prov,
        &["classifier_a", "classifier_b", "q_adjusted", "pair_mean_auc", "either_is_top_performer"],
    )?;
    for a in 0..m {
        for b in a + 1..m {
            let d = pair_diversity(units.column(a), units.column(b), &labels)?;
            let pair_auc = auc(&mean_of_columns(&units, &[a, b])?, &labels)?;
            out.row([ids[a].clone(), ids[b].clone(), fmt(d.q_adjusted), fmt(pair_auc), (top[a] || top[b]).to_string()])?;
        }
    }
    out.finish()?;
    if let Some(path) = &args.profile_out {
        let mut out = CsvOut::create(path, &prov, &["classifier", "auc", "mean_diversity"])?;
        for p in mean_pairwise_profile(&units, &labels)? {
            out.row([p.classifier_id, fmt(p.auc), fmt(p.mean_diversity)])?;
        }
        out.finish()?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct CalibrationArgs {
    #[command(flatten)]
    pub pool: PoolArgs,
    /// Use individual columns instead of bag-averaged classifiers for the
    /// base-classifier rows.
    #[arg(long)]
    pub columns: bool,
    #[arg(long, default_value_t = 2)]
    pub init_n: usize,
    #[arg(long, default_value_t = 100)]
    pub max_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV: `series,label,iteration,auc,brier` with series base, greedy or ces.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_calibration(args: &CalibrationArgs) -> CliResult<()> {
    let mut prov = Provenance::new("calibration", args.seed);
    let (matrix, labels) = args.pool.load(&mut prov)?;
    prov.set("columns", args.columns).set("init_n", args.init_n).set("max_size", args.max_size);
    let mut out = CsvOut::create(&args.out, &prov, &["series", "label", "iteration", "auc", "brier"])?;
    let base = units(matrix.clone(), args.columns)?;
    for j in 0..base.n_classifiers() {
        out.row([
            "base".to_string(),
            base.classifier_ids()[j].clone(),
            String::new(),
            fmt(auc(base.column(j), &labels)?),
            fmt(brier(base.column(j), &labels)?),
        ])?;
    }
    let params = CesParams { init_n: args.init_n, max_size: args.max_size, seed: args.seed, ..Default::default() };
    for (name, method) in [("greedy", SelectMethod::Greedy), ("ces", SelectMethod::Ces)] {
        let (t, _) = run_selection(method, &matrix, &labels, &params)?;
        for r in &t.records {
            out.row([name.to_string(), r.chosen.clone(), r.iteration.to_string(), fmt(r.val_auc), fmt(r.brier)])?;
        }
    }
    out.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_ranges() {
        assert_eq!(parse_sweep("2..5").unwrap(), 2..=5);
        assert!(parse_sweep("0..3").is_err());
        assert!(parse_sweep("4..2").is_err());
        assert!(parse_sweep("3").is_err());
    }
}
