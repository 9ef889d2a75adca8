use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hyperloop::model::FittedModel;
use hyperloop::synthetic::{planted_hypergraph, PlantedConfig};
use tempfile::TempDir;

struct Sandbox {
    dir: TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, text: &str) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperloop"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const TRIANGLE: &str = "v1 v2\nv1 v3\nv2 v3\n";

fn zero_model(tau_max: usize) -> String {
    let zeros = vec!["0"; tau_max - 1].join(" ");
    let ones = vec!["1"; 2 * (tau_max - 1)].join(" ");
    let zeros2 = vec!["0"; 2 * (tau_max - 1)].join(" ");
    format!(
        "format = 1\ntau_max = {tau_max}\ngamma = 0\nlambda = 0\nmode = full\nintercept = 0\nalpha = {zeros}\nbeta = {zeros}\nmean = {zeros2}\nscale = {ones}\n"
    )
}

fn planted_file(sb: &Sandbox) -> PathBuf {
    let g = planted_hypergraph(&PlantedConfig::default());
    let text: String = g
        .hyperlinks()
        .iter()
        .map(|e| {
            e.nodes()
                .iter()
                .map(|&i| g.labels()[i].as_str())
                .collect::<Vec<_>>()
                .join(" ")
                + "\n"
        })
        .collect();
    sb.file("planted.txt", &text)
}

#[test]
fn fit_writes_a_model_with_its_configuration() {
    let sb = Sandbox::new();
    let graph = sb.file("g.txt", TRIANGLE);
    let cands = sb.file("c.txt", "v1 v2 v3\n");
    let model = sb.path("model.txt");
    let o = run(&[
        "fit",
        "--graph",
        s(&graph),
        "--candidates",
        s(&cands),
        "--output",
        s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&model).unwrap();
    assert!(text.contains("config.command = fit"));
    assert!(text.contains(&format!("version = {}", hyperloop::VERSION)));
    assert_eq!(FittedModel::from_text(&text).unwrap().tau_max, 8);
    assert!(stderr(&o).contains("gamma = "));
}

#[test]
fn singleton_gamma_grid_is_passed_through() {
    let sb = Sandbox::new();
    let graph = sb.file("g.txt", TRIANGLE);
    let cands = sb.file("c.txt", "v1 v2 v3\nv1 v4\n");
    let model = sb.path("model.txt");
    let o = run(&[
        "fit",
        "--graph",
        s(&graph),
        "--candidates",
        s(&cands),
        "--gamma",
        "0.5:0.1:0.5",
        "--tau-max",
        "4",
        "--output",
        s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = FittedModel::from_text(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!((m.gamma, m.tau_max), (0.5, 4));
}

#[test]
fn malformed_graph_line_exits_with_parse_code() {
    let sb = Sandbox::new();
    let graph = sb.file("g.txt", "v1 v2\nv1 v3\nv2 v2\n");
    let cands = sb.file("c.txt", "v1 v2 v3\n");
    let o = run(&[
        "fit",
        "--graph",
        s(&graph),
        "--candidates",
        s(&cands),
        "--output",
        s(&sb.path("m.txt")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn fit_cross_validates_the_cutoff() {
    let sb = Sandbox::new();
    let graph = planted_file(&sb);
    let fakes = sb.path("fakes.txt");
    assert!(run(&[
        "sample",
        "--graph",
        s(&graph),
        "--negatives",
        "60",
        "--seed",
        "3",
        "--output",
        s(&fakes)
    ])
    .status
    .success());
    let model = sb.path("m.txt");
    let o = run(&[
        "fit",
        "--graph",
        s(&graph),
        "--candidates",
        s(&fakes),
        "--tau-grid",
        "3-4",
        "--gamma",
        "0:1:1",
        "--output",
        s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("cv tau_max = 3"));
    let m = FittedModel::from_text(&fs::read_to_string(&model).unwrap()).unwrap();
    assert!(m.tau_max == 3 || m.tau_max == 4);
}

#[test]
fn zero_model_scores_tie_and_rank_alphabetically() {
    let sb = Sandbox::new();
    let model = sb.file("m.txt", &zero_model(3));
    let graph = sb.file("g.txt", TRIANGLE);
    let cands = sb.file("c.txt", "v3 v4\nv1 v2 v3\nv2 v4\n");
    let o = run(&[
        "score",
        "--model",
        s(&model),
        "--graph",
        s(&graph),
        "--candidates",
        s(&cands),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: Vec<String> = stdout(&o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect();
    assert_eq!(
        rows,
        vec!["v1+v2+v3\t0.5\t1", "v2+v4\t0.5\t2", "v3+v4\t0.5\t3"]
    );
    assert!(stdout(&o).contains("# version = "));
}

#[test]
fn score_errors() {
    let sb = Sandbox::new();
    let model = sb.file("m.txt", &zero_model(3));
    let graph = sb.file("g.txt", TRIANGLE);
    let dup = sb.file("dup.txt", "v1 v4\nv4 v1\n");
    let o = run(&[
        "score",
        "--model",
        s(&model),
        "--graph",
        s(&graph),
        "--candidates",
        s(&dup),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("duplicate"),
        "{}",
        stderr(&o).to_lowercase()
    );

    let cands = sb.file("c.txt", "v1 v4\n");
    let o = run(&[
        "score",
        "--model",
        s(&model),
        "--graph",
        s(&graph),
        "--candidates",
        s(&cands),
        "--tau-max",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scoring_is_independent_of_worker_count() {
    let sb = Sandbox::new();
    let graph = planted_file(&sb);
    let fakes = sb.path("fakes.txt");
    assert!(run(&[
        "sample",
        "--graph",
        s(&graph),
        "--negatives",
        "80",
        "--output",
        s(&fakes)
    ])
    .status
    .success());
    let model = sb.path("m.txt");
    let fit = run(&[
        "fit",
        "--graph",
        s(&graph),
        "--candidates",
        s(&fakes),
        "--tau-max",
        "5",
        "--output",
        s(&model),
    ]);
    assert!(fit.status.success(), "{}", stderr(&fit));
    let score = |jobs: &str| {
        let o = run(&[
            "--jobs",
            jobs,
            "score",
            "--model",
            s(&model),
            "--graph",
            s(&graph),
            "--candidates",
            s(&fakes),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        o.stdout
    };
    let one = score("1");
    assert_eq!(one, score("4"));
    assert_eq!(one, score("1"));
}

#[test]
fn experiments_are_reproducible_and_echo_their_mode() {
    let sb = Sandbox::new();
    let graph = planted_file(&sb);
    let exp = |extra: &[&str]| {
        let mut args = vec![
            "experiment",
            "--graph",
            s(&graph),
            "--repetitions",
            "1",
            "--seed",
            "7",
            "--test-count",
            "20",
            "--negatives",
            "60",
            "--tau-max",
            "4",
        ];
        args.extend_from_slice(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let a = exp(&[]);
    assert_eq!(a, exp(&[]));
    assert_eq!(a, exp(&["--jobs", "3"]));
    assert!(exp(&["--ablation", "node-only"]).contains("\"ablation\": \"node-only\""));
    assert!(exp(&["--baseline", "katz"]).contains("\"method\": \"katz\""));

    let report = sb.path("r.json");
    let o = run(&[
        "experiment",
        "--graph",
        s(&graph),
        "--repetitions",
        "2",
        "--test-count",
        "20",
        "--negatives",
        "60",
        "--baseline",
        "cn",
        "--output",
        s(&report),
    ]);
    assert!(o.status.success());
    assert!(
        stdout(&o).starts_with("method,dataset,auc_mean,auc_std,prec_mean,prec_std\ncn,planted,")
    );
    assert!(fs::read_to_string(&report).unwrap().contains("\"version\""));
}

#[test]
fn planted_fixture_is_discriminated() {
    let sb = Sandbox::new();
    let g = planted_hypergraph(&PlantedConfig {
        groups: 10,
        group_size: 8,
        hyperlinks_per_group: 20,
        background: 0,
        wide: 20,
        wide_cardinality: 16,
        ..PlantedConfig::default()
    });
    let text: String = g
        .hyperlinks()
        .iter()
        .map(|e| {
            e.nodes()
                .iter()
                .map(|&i| g.labels()[i].as_str())
                .collect::<Vec<_>>()
                .join(" ")
                + "\n"
        })
        .collect();
    let graph = sb.file("fixture.txt", &text);
    let o = run(&[
        "experiment",
        "--graph",
        s(&graph),
        "--seed",
        "100",
        "--test-count",
        "50",
        "--negatives",
        "150",
        "--tau-max",
        "6",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json = stdout(&o);
    let mean: f64 = json
        .split("\"auc_mean\": ")
        .nth(1)
        .and_then(|r| r.split([',', '\n']).next())
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(mean >= 0.9, "mean AUC {mean}");
}

#[test]
fn oracle_reports_both_counts() {
    let sb = Sandbox::new();
    let tri = sb.file("t.txt", TRIANGLE);
    let o = run(&[
        "oracle",
        "--graph",
        s(&tri),
        "--tau",
        "3",
        "--kind",
        "node-based",
    ]);
    assert!(o.status.success());
    assert!(
        stdout(&o).contains("brute_force = 6\ntrace = 6\n"),
        "{}",
        stdout(&o)
    );

    let single = sb.file("s.txt", "v1 v2 v3\n");
    let o = run(&[
        "oracle",
        "--graph",
        s(&single),
        "--tau-max",
        "2",
        "--kind",
        "hyperlink-based",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("brute_force = 0\ntrace = 0\n"));

    let big: String = (0..19).map(|i| format!("n{i} n{}\n", i + 1)).collect();
    let big = sb.file("big.txt", &big);
    assert_eq!(
        run(&["oracle", "--graph", s(&big), "--tau", "3"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn split_sample_and_evaluate() {
    let sb = Sandbox::new();
    let graph = planted_file(&sb);
    let out = sb.path("split");
    let o = run(&[
        "split",
        "--graph",
        s(&graph),
        "--test-count",
        "10",
        "--seed",
        "5",
        "--output",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 5") && manifest.contains("deleted_line = "));
    let test = fs::read_to_string(out.join("test.txt")).unwrap();
    assert_eq!(test.lines().filter(|l| !l.starts_with('#')).count(), 10);

    let train = out.join("train.txt");
    let fakes = sb.path("fakes.txt");
    let o = run(&[
        "sample",
        "--graph",
        s(&train),
        "--negatives",
        "30",
        "--seed",
        "1",
        "--output",
        s(&fakes),
    ]);
    assert!(o.status.success());
    let fake_text = fs::read_to_string(&fakes).unwrap();
    assert_eq!(
        fake_text.lines().filter(|l| !l.starts_with('#')).count(),
        30
    );
    let again = sb.path("fakes2.txt");
    run(&[
        "sample",
        "--graph",
        s(&train),
        "--negatives",
        "30",
        "--seed",
        "1",
        "--output",
        s(&again),
    ]);
    assert_eq!(fake_text, fs::read_to_string(&again).unwrap());

    let positives: Vec<String> = test
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.replace(' ', "+"))
        .collect();
    let mut scores: String = positives.iter().map(|id| format!("{id}\t1.0\n")).collect();
    scores.push_str("n0000+n0063\t0.5\nn0001+n0062\t0.5\n");
    let scores = sb.file("scores.tsv", &scores);
    let pos = out.join("test.txt");
    let o = run(&[
        "evaluate",
        "--external-scores",
        s(&scores),
        "--positives",
        s(&pos),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("auc = 1\n") && stdout(&o).contains("precision = 1\n"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn configuration_errors_use_code_three() {
    let sb = Sandbox::new();
    let graph = sb.file("g.txt", TRIANGLE);
    assert_eq!(
        run(&["experiment", "--graph", s(&graph), "--bogus"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["--jobs", "0", "sample", "--graph", s(&graph)])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["experiment", "--graph", s(&graph), "--gamma", "1:x:2"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&["experiment", "--graph", s(&graph), "--ablation", "both"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        run(&[
            "split",
            "--graph",
            s(&graph),
            "--test-count",
            "3",
            "--output",
            s(&sb.path("o"))
        ])
        .status
        .code(),
        Some(3)
    );
    assert!(run(&["--help"]).status.success());
}
