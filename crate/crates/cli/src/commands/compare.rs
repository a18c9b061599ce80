use std::path::{Path, PathBuf};

use clap::Args;
use ensemblekit::stats::{best_first, friedman, group_letters, iman_davenport, nemenyi, RankTable};
use ensemblekit::Error;

use super::fmt;
use crate::error::CliResult;
use crate::output::{out_dir, CsvOut, Provenance};

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// CSV with header `method,<dataset...>` and one AUC per cell; higher is
    /// better.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// List every pair, not only those with p below alpha.
    #[arg(long)]
    pub all_pairs: bool,
    /// Adds the Iman-Davenport F statistic to the omnibus output.
    #[arg(long)]
    pub iman_davenport: bool,
    /// Directory for `friedman.csv`, `pairwise.csv` and `groups.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn read_performance(path: &Path) -> CliResult<RankTable> {
    let source = path.display().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.len() < 2 || &header[0] != "method" {
        return Err(Error::Parse { path: source, line: 1, message: "header must be method,<datasets...>".into() }.into());
    }
    let datasets: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut methods = Vec::new();
    let mut perf = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse { path: source.clone(), line, message };
        if record.len() != header.len() {
            return Err(parse_err(format!("expected {} fields, found {}", header.len(), record.len())).into());
        }
        methods.push(record[0].to_string());
        let row = record
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|_| parse_err(format!("invalid number {v:?}"))))
            .collect::<Result<Vec<f64>, Error>>()?;
        perf.push(row);
    }
    Ok(RankTable::new(methods, datasets, perf)?)
}

pub fn cmd_compare(args: &CompareArgs) -> CliResult<()> {
    let mut prov = Provenance::new("compare", 0);
    prov.input("input", &args.input)?
        .set("alpha", args.alpha)
        .set("all_pairs", args.all_pairs)
        .set("iman_davenport", args.iman_davenport);
    let table = read_performance(&args.input)?;
    let dir = out_dir(&args.out)?;
    let posthoc = nemenyi(&table, args.alpha)?;
    let result = friedman(table);
    let table = &result.table;
    let (k, n) = (table.n_methods(), table.n_datasets());

    let mut header = vec!["statistic", "df", "p_value", "methods", "datasets", "critical_difference"];
    let mut row = vec![
        fmt(result.statistic),
        (k - 1).to_string(),
        fmt(result.p_value),
        k.to_string(),
        n.to_string(),
        fmt(posthoc.critical_difference),
    ];
    if args.iman_davenport {
        let (f, p) = iman_davenport(&result);
        header.extend(["iman_davenport_f", "iman_davenport_p"]);
        row.extend([fmt(f), fmt(p)]);
    }
    let mut out = CsvOut::create(&dir.join("friedman.csv"), &prov, &header)?;
    out.row(&row)?;
    out.finish()?;

    let order = best_first(&posthoc.mean_ranks);
    let mut out = CsvOut::create(&dir.join("pairwise.csv"), &prov, &["method_a", "method_b", "mean_rank_difference", "p_value"])?;
    for (x, &a) in order.iter().enumerate() {
        for &b in &order[x + 1..] {
            let p = posthoc.p_values[a][b];
            if args.all_pairs || p < args.alpha {
                let diff = posthoc.mean_ranks[a] - posthoc.mean_ranks[b];
                out.row([table.methods[a].clone(), table.methods[b].clone(), fmt(diff), fmt(p)])?;
            }
        }
    }
    out.finish()?;

    let letters = group_letters(&posthoc.mean_ranks, posthoc.critical_difference);
    let sums = table.rank_sums();
    let mut out = CsvOut::create(&dir.join("groups.csv"), &prov, &["method", "group", "rank_sum", "mean_rank"])?;
    for &m in &order {
        out.row([table.methods[m].clone(), letters[m].clone(), fmt(sums[m]), fmt(posthoc.mean_ranks[m])])?;
    }
    out.finish()
}
