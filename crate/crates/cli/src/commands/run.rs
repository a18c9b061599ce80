use std::path::PathBuf;

use clap::Args;
use ensemblekit::cv::{make_fold_plan, run_pipeline, LearnerRegistry};
use ensemblekit::io::{read_dataset_file, write_groups, write_labels, write_predictions};
use ensemblekit::methods::MethodRegistry;
use ensemblekit::Error;

use super::fmt;
use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::{create, out_dir, CsvOut, Provenance};

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Dataset CSV: `instance_id,<features...>,label`.
    #[arg(long)]
    pub data: PathBuf,
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Name used in the report; defaults to the dataset file stem.
    #[arg(long)]
    pub dataset_name: Option<String>,
    /// Adds a wall-time column to the report (makes reruns differ).
    #[arg(long)]
    pub timings: bool,
}

pub fn cmd_run(args: &RunArgs) -> CliResult<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.params.seed = cfg.seed;
    let learners = LearnerRegistry::builtin().resolve(&cfg.learners)?;
    let methods = MethodRegistry::builtin().resolve(&cfg.methods)?;
    let dataset_name = args.dataset_name.clone().unwrap_or_else(|| {
        args.data.file_stem().map_or("dataset".into(), |s| s.to_string_lossy().into_owned())
    });

    let mut prov = Provenance::new("run", cfg.seed);
    cfg.record(&mut prov);
    prov.input("data", &args.data)?.set("dataset_name", &dataset_name).set("timings", args.timings);
    let comment = prov.comment();

    let dataset = read_dataset_file(&args.data)?;
    let (data, labels) = dataset.labeled();
    let unlabeled = dataset.rows.len() - data.rows.len();
    if unlabeled > 0 {
        log::info!("skipping {unlabeled} unlabeled rows");
    }
    let plan = make_fold_plan(&labels, cfg.outer_k, cfg.nested_k, cfg.bags, cfg.seed)?;
    let problems = plan.audit(&labels);
    if !problems.is_empty() {
        return Err(Error::InvalidParam(format!("fold plan audit failed: {}", problems.join("; "))).into());
    }
    log::info!(
        "training {} learners x {} bags x {} folds on {} rows",
        learners.len(),
        cfg.bags,
        cfg.outer_k,
        labels.len()
    );
    let output = run_pipeline(&data, &labels, &learners, &plan)?;

    let dir = out_dir(&args.out)?;
    std::fs::write(dir.join("fold_plan.json"), serde_json::to_string(&plan).map_err(std::io::Error::other)?)?;
    let folds = out_dir(&dir.join("folds"))?;
    for fold in &output.folds {
        let stem = format!("fold_{:02}", fold.fold);
        write_predictions(create(&folds.join(format!("{stem}_validation.csv")))?, &fold.validation, Some(&comment))?;
        write_labels(
            create(&folds.join(format!("{stem}_validation_labels.csv")))?,
            fold.validation.instance_ids(),
            &fold.validation_labels,
            Some(&comment),
        )?;
        write_predictions(create(&folds.join(format!("{stem}_test.csv")))?, &fold.test, Some(&comment))?;
        write_labels(
            create(&folds.join(format!("{stem}_test_labels.csv")))?,
            fold.test.instance_ids(),
            &fold.test_labels,
            Some(&comment),
        )?;
    }
    if let Some(first) = output.folds.first() {
        write_groups(create(&dir.join("groups.tsv"))?, &first.test, Some(&comment))?;
    }

    let mut header = vec!["method", "dataset", "test_auc", "test_brier", "ensemble_size"];
    if args.timings {
        header.push("wall_time_s");
    }
    let mut reports = CsvOut::create(&dir.join("reports.csv"), &prov, &header)?;
    let mut weights = CsvOut::create(&dir.join("weights.csv"), &prov, &["method", "member", "weight"])?;
    let mut trajectories = CsvOut::create(
        &dir.join("trajectories.csv"),
        &prov,
        &["method", "fold", "iteration", "chosen", "val_auc", "mean_diversity", "brier"],
    )?;
    for method in &methods {
        let report = method.evaluate(&output, &cfg.params, &dataset_name)?;
        log::info!("{}: test AUC {:.4}", report.method, report.test_auc);
        let mut row = vec![
            report.method.clone(),
            report.dataset.clone(),
            fmt(report.test_auc),
            fmt(report.test_brier),
            fmt(report.mean_ensemble_size()),
        ];
        if args.timings {
            row.push(format!("{:.3}", report.wall_time));
        }
        reports.row(&row)?;
        for (member, w) in &report.weights {
            weights.row([report.method.as_str(), member, &fmt(*w)])?;
        }
        for (f, t) in report.trajectories.iter().enumerate() {
            for r in &t.records {
                trajectories.row([
                    report.method.clone(),
                    f.to_string(),
                    r.iteration.to_string(),
                    r.chosen.clone(),
                    fmt(r.val_auc),
                    fmt(r.mean_diversity),
                    fmt(r.brier),
                ])?;
            }
        }
    }
    reports.finish()?;
    weights.finish()?;
    trajectories.finish()?;
    if !output.dropped.is_empty() {
        log::warn!("dropped columns: {}", output.dropped.join(", "));
    }
    Ok(())
}
