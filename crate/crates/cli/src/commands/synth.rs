use std::path::PathBuf;

use clap::{Args, ValueEnum};
use ensemblekit::datagen::{generate, ClassifierSpec, PoolSpec};
use ensemblekit::io::{write_groups, write_labels, write_predictions};

use super::fmt;
use crate::error::{CliError, CliResult};
use crate::output::{create, out_dir, CsvOut, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Strong correlated classifiers next to weak independent ones.
    Mixed,
    /// `mixed` with every other classifier miscalibrated (α = 3, β = 1).
    Miscalibrated,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Pool specification as JSON; overrides the preset.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "mixed")]
    pub preset: Preset,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.3)]
    pub positive_rate: f64,
    #[arg(long, default_value_t = 3)]
    pub bags: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for predictions.csv, labels.csv, groups.tsv, oracle.csv
    /// and spec.json.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn preset_spec(preset: Preset, n: usize, positive_rate: f64, bags: usize, seed: u64) -> PoolSpec {
    let mut classifiers = Vec::new();
    for j in 0..4 {
        classifiers.push(ClassifierSpec::new(format!("strong{j}"), 2.0 + 0.1 * j as f64, 1.5).with_bags(bags));
    }
    for j in 0..4 {
        classifiers.push(ClassifierSpec::new(format!("weak{j}"), 0.3 + 0.05 * j as f64, 0.0).with_bags(bags));
    }
    if preset == Preset::Miscalibrated {
        for c in classifiers.iter_mut().skip(1).step_by(2) {
            *c = c.clone().miscalibrated(3.0, 1.0);
        }
    }
    PoolSpec { n_instances: n, positive_rate, classifiers, seed }
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut spec: PoolSpec =
                serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            spec.seed = args.seed;
            spec
        }
        None => preset_spec(args.preset, args.n, args.positive_rate, args.bags, args.seed),
    };
    let spec_json = serde_json::to_string_pretty(&spec).map_err(std::io::Error::other)?;
    let mut prov = Provenance::new("synth", spec.seed);
    prov.set("spec", &spec_json);
    let comment = prov.comment();

    let pool = generate(&spec)?;
    let dir = out_dir(&args.out)?;
    write_predictions(create(&dir.join("predictions.csv"))?, &pool.matrix, Some(&comment))?;
    write_labels(create(&dir.join("labels.csv"))?, pool.matrix.instance_ids(), &pool.labels, Some(&comment))?;
    write_groups(create(&dir.join("groups.tsv"))?, &pool.matrix, Some(&comment))?;
    std::fs::write(dir.join("spec.json"), spec_json + "\n")?;
    let mut out = CsvOut::create(&dir.join("oracle.csv"), &prov, &["instance_id", "posterior"])?;
    for (id, p) in pool.matrix.instance_ids().iter().zip(pool.oracle.posteriors()) {
        out.row([id.as_str(), &fmt(p)])?;
    }
    out.finish()
}
