//! Run configuration: `key = value` lines grouped under section headers.
//!
//! ```text
//! [pipeline]
//! learners = logistic, tree, knn, naive_bayes
//! outer_k = 10
//! nested_k = 5
//! bags = 10
//! seed = 1
//!
//! [methods]
//! methods = best_base, mean, greedy, ces, stack_all, stack_aggregated, intra_cluster, inter_cluster
//! lambda = 0.001
//! val_fraction = 1.0
//!
//! [ces]
//! init_n = 2
//! max_size = 100
//! with_replacement = true
//! candidate_fraction = 1.0
//!
//! [greedy]
//! ; 0 means the whole pool
//! max_size = 0
//!
//! [cluster]
//! ; `sweep` tries every k from 1 to the pool size
//! k = sweep
//! distance = pearson
//! ```
//!
//! Keys from `[pipeline]` and `[methods]` may also appear before any header.

use std::path::Path;
use std::str::FromStr;

use ensemblekit::cluster::DistanceKind;
use ensemblekit::methods::{MethodParams, BUILTIN_METHODS};
use ini::Ini;

use crate::error::{CliError, CliResult};
use crate::output::Provenance;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub learners: Vec<String>,
    pub outer_k: usize,
    pub nested_k: usize,
    pub bags: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    pub params: MethodParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            learners: ["logistic", "tree", "knn", "naive_bayes"].map(String::from).to_vec(),
            outer_k: 10,
            nested_k: 5,
            bags: 10,
            seed: 0,
            methods: BUILTIN_METHODS.map(String::from).to_vec(),
            params: MethodParams::default(),
        }
    }
}

fn parse<T: FromStr>(section: &str, key: &str, value: &str) -> CliResult<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::config(format!("[{section}] {key}: cannot parse {value:?}")))
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<RunConfig> {
        let ini = Ini::load_from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        let mut cfg = RunConfig::default();
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            for (key, value) in props.iter() {
                cfg.set(section, key, value)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> CliResult<()> {
        let p = &mut self.params;
        match (section, key) {
            ("pipeline" | "", "learners") => self.learners = list(value),
            ("pipeline" | "", "outer_k") => self.outer_k = parse(section, key, value)?,
            ("pipeline" | "", "nested_k") => self.nested_k = parse(section, key, value)?,
            ("pipeline" | "", "bags") => self.bags = parse(section, key, value)?,
            ("pipeline" | "", "seed") => self.seed = parse(section, key, value)?,
            ("methods" | "", "methods") => self.methods = list(value),
            ("methods" | "", "lambda") => p.logistic.lambda = parse(section, key, value)?,
            ("methods" | "", "val_fraction") => p.val_fraction = parse(section, key, value)?,
            ("ces", "init_n") => p.ces.init_n = parse(section, key, value)?,
            ("ces", "max_size") => p.ces.max_size = parse(section, key, value)?,
            ("ces", "with_replacement") => p.ces.with_replacement = parse(section, key, value)?,
            ("ces", "candidate_fraction") => p.ces.candidate_fraction = parse(section, key, value)?,
            ("greedy", "max_size") => {
                let n: usize = parse(section, key, value)?;
                p.greedy_max_size = (n > 0).then_some(n);
            }
            ("cluster", "k") => {
                p.cluster_k = match value.trim() {
                    "sweep" => None,
                    v => Some(parse(section, key, v)?),
                }
            }
            ("cluster", "distance") => {
                p.cluster_distance = value
                    .trim()
                    .parse::<DistanceKind>()
                    .map_err(|e| CliError::config(format!("[cluster] distance: {e}")))?
            }
            _ => return Err(CliError::config(format!("unknown key {key:?} in section [{section}]"))),
        }
        Ok(())
    }

    fn validate(&self) -> CliResult<()> {
        if self.learners.is_empty() {
            return Err(CliError::config("learners list is empty"));
        }
        if self.methods.is_empty() {
            return Err(CliError::config("methods list is empty"));
        }
        if self.outer_k < 2 || self.nested_k < 2 || self.bags < 1 {
            return Err(CliError::config("outer_k and nested_k must be at least 2 and bags at least 1"));
        }
        if !(self.params.val_fraction > 0.0 && self.params.val_fraction <= 1.0) {
            return Err(CliError::config("val_fraction must be in (0, 1]"));
        }
        if !(self.params.logistic.lambda >= 0.0) {
            return Err(CliError::config("lambda must be nonnegative"));
        }
        Ok(())
    }

    pub fn record(&self, prov: &mut Provenance) {
        let p = &self.params;
        prov.set("learners", self.learners.join(","))
            .set("outer_k", self.outer_k)
            .set("nested_k", self.nested_k)
            .set("bags", self.bags)
            .set("methods", self.methods.join(","))
            .set("lambda", p.logistic.lambda)
            .set("tol", p.logistic.tol)
            .set("max_iter", p.logistic.max_iter)
            .set("val_fraction", p.val_fraction)
            .set("ces.init_n", p.ces.init_n)
            .set("ces.max_size", p.ces.max_size)
            .set("ces.with_replacement", p.ces.with_replacement)
            .set("ces.candidate_fraction", p.ces.candidate_fraction)
            .set("greedy.max_size", p.greedy_max_size.unwrap_or(0))
            .set("cluster.k", p.cluster_k.map_or("sweep".to_string(), |k| k.to_string()))
            .set("cluster.distance", p.cluster_distance);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_defaults() {
        let cfg = RunConfig::parse(
            "seed = 7\n[pipeline]\nlearners = tree, knn\nbags = 3\n[ces]\nmax_size = 20\n[cluster]\nk = 4\ndistance = qstat\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.learners, vec!["tree", "knn"]);
        assert_eq!(cfg.bags, 3);
        assert_eq!(cfg.outer_k, 10);
        assert_eq!(cfg.params.ces.max_size, 20);
        assert_eq!(cfg.params.cluster_k, Some(4));
        assert_eq!(cfg.params.cluster_distance, DistanceKind::QStat);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("[pipeline]\nfolds = 3\n").is_err());
        assert!(RunConfig::parse("[pipeline]\nouter_k = ten\n").is_err());
        assert!(RunConfig::parse("[methods]\nval_fraction = 0\n").is_err());
    }
}
