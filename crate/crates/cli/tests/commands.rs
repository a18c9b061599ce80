use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ensemblekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ensemblekit"))
        .args(args)
        .env_remove("ENSEMBLEKIT_WORKERS")
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Data rows of a CSV written by the CLI, without the provenance comment.
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn synth(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join("pool");
    let mut args = vec!["synth", "--n", "400", "--seed", "3", "--out", p(&out)];
    args.extend_from_slice(extra);
    let result = ensemblekit(&args);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    out
}

#[test]
fn synth_writes_a_consistent_pool() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth(dir.path(), &[]);
    let predictions = fs::read_to_string(pool.join("predictions.csv")).unwrap();
    assert!(predictions.starts_with("# ensemblekit config_hash="));
    let header = predictions.lines().nth(1).unwrap();
    // 8 classifiers with 3 bags each plus the id column
    assert_eq!(header.split(',').count(), 25);
    assert_eq!(rows(&pool.join("oracle.csv")).len(), 400);
    assert_eq!(rows(&pool.join("labels.csv")).len(), 400);
}

#[test]
fn select_and_diversity_on_a_synthetic_pool() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth(dir.path(), &[]);
    let trajectory = dir.path().join("ces.csv");
    let weights = dir.path().join("weights.csv");
    let result = ensemblekit(&[
        "select",
        "--predictions",
        p(&pool.join("predictions.csv")),
        "--labels",
        p(&pool.join("labels.csv")),
        "--max-size",
        "15",
        "--out",
        p(&trajectory),
        "--weights-out",
        p(&weights),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let records = rows(&trajectory);
    assert_eq!(records.len(), 15);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r[0], (i + 1).to_string());
    }
    let total: f64 = rows(&weights).iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);

    let pairs = dir.path().join("pairs.csv");
    let profile = dir.path().join("profile.csv");
    let result = ensemblekit(&[
        "diversity",
        "--predictions",
        p(&pool.join("predictions.csv")),
        "--labels",
        p(&pool.join("labels.csv")),
        "--groups",
        p(&pool.join("groups.tsv")),
        "--out",
        p(&pairs),
        "--profile-out",
        p(&profile),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    // bag-aggregated: 8 classifiers, 28 pairs
    assert_eq!(rows(&pairs).len(), 28);
    let aucs: Vec<(String, f64)> = rows(&profile).into_iter().map(|r| (r[0].clone(), r[1].parse().unwrap())).collect();
    let best_strong = aucs.iter().filter(|(c, _)| c.starts_with("strong")).map(|x| x.1).fold(0.0, f64::max);
    let best_weak = aucs.iter().filter(|(c, _)| c.starts_with("weak")).map(|x| x.1).fold(0.0, f64::max);
    assert!(best_strong > best_weak);
}

#[test]
fn stack_and_cluster_stack_weights() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth(dir.path(), &["--preset", "miscalibrated"]);
    let pred = pool.join("predictions.csv");
    let labels = pool.join("labels.csv");
    let groups = pool.join("groups.tsv");

    let coefficients = dir.path().join("stack.csv");
    let result = ensemblekit(&[
        "stack", "--predictions", p(&pred), "--labels", p(&labels), "--groups", p(&groups), "--out", p(&coefficients),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let table = rows(&coefficients);
    assert_eq!(table[0][0], "(intercept)");
    assert_eq!(table.len(), 9);

    let members = dir.path().join("members.csv");
    let sweep = dir.path().join("sweep.csv");
    let result = ensemblekit(&[
        "cluster-stack",
        "--predictions",
        p(&pred),
        "--labels",
        p(&labels),
        "--mode",
        "intra",
        "--sweep",
        "1..4",
        "--out",
        p(&members),
        "--sweep-out",
        p(&sweep),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    assert_eq!(rows(&sweep).len(), 4);
    assert_eq!(rows(&members).len(), 24);
}

#[test]
fn identical_inputs_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth(dir.path(), &[]);
    let mut outputs = Vec::new();
    for run in ["a.csv", "b.csv"] {
        let out = dir.path().join(run);
        let result = ensemblekit(&[
            "calibration",
            "--predictions",
            p(&pool.join("predictions.csv")),
            "--labels",
            p(&pool.join("labels.csv")),
            "--max-size",
            "10",
            "--seed",
            "9",
            "--out",
            p(&out),
        ]);
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
        outputs.push(fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn compare_reports_groups_best_first() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("auc.csv");
    fs::write(&input, "method,d1,d2,d3,d4,d5\nx,0.9,0.91,0.88,0.93,0.9\ny,0.8,0.82,0.81,0.8,0.79\nz,0.7,0.72,0.7,0.69,0.71\n").unwrap();
    let out = dir.path().join("cmp");
    let result = ensemblekit(&["compare", "--input", p(&input), "--all-pairs", "--iman-davenport", "--out", p(&out)]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let omnibus = rows(&out.join("friedman.csv"));
    assert_eq!(omnibus[0][0], "10");
    let groups = rows(&out.join("groups.csv"));
    let order: Vec<&str> = groups.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(order, ["x", "y", "z"]);
    assert_eq!(rows(&out.join("pairwise.csv")).len(), 3);
}

#[test]
fn exit_codes_distinguish_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let pool = synth(dir.path(), &[]);
    let pred = pool.join("predictions.csv");
    let labels = pool.join("labels.csv");
    let out = dir.path().join("x.csv");

    let code = |args: &[&str]| ensemblekit(args).status.code();

    assert_eq!(code(&["select", "--bogus"]), Some(2));
    assert_eq!(
        code(&["select", "--predictions", p(&pred), "--labels", p(&labels), "--candidate-fraction", "1.5", "--out", p(&out)]),
        Some(2)
    );

    let config = dir.path().join("bad.ini");
    fs::write(&config, "[pipeline]\nlearners = logistic\nmystery = 1\n").unwrap();
    assert_eq!(
        code(&["run", "--data", p(&pred), "--config", p(&config), "--out", p(&dir.path().join("run"))]),
        Some(2)
    );

    let one_class = dir.path().join("one_class.csv");
    let text: String = fs::read_to_string(&labels)
        .unwrap()
        .lines()
        .map(|l| if l.starts_with('#') || l.starts_with("instance_id") { l.to_string() } else { format!("{},1", l.split(',').next().unwrap()) })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&one_class, text + "\n").unwrap();
    assert_eq!(code(&["select", "--predictions", p(&pred), "--labels", p(&one_class), "--out", p(&out)]), Some(3));

    let broken = dir.path().join("broken.csv");
    fs::write(&broken, "instance_id,a\nr1,0.5\nr2,oops\n").unwrap();
    assert_eq!(code(&["select", "--predictions", p(&broken), "--labels", p(&labels), "--out", p(&out)]), Some(3));
}
