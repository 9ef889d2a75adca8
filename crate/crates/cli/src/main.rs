//! `hyperloop` command-line front end.
//!
//! Exit codes: 0 success, 1 unreadable or malformed input, 2 fit or scoring
//! failure (including model/feature dimension mismatch), 3 configuration
//! error (including the enumeration guard of `oracle`), 4 oracle
//! disagreement.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hyperloop::data::{
    candidates_from_lines, derive_seed, hypergraph_from_lines, read_label_lines,
    sample_negative_hyperlinks, split_train_test, LabelLine, NegativeSamplerConfig,
    ParsedHypergraph, SplitSpec,
};
use hyperloop::experiment::{
    canonical_id, evaluate_scores, read_score_file, ExperimentConfig, ExperimentReport, Method,
    TauChoice,
};
use hyperloop::hypergraph::BuildOptions;
use hyperloop::model::{
    fit, gamma_grid, select_tau_c, AblationMode, FitOptions, FittedModel, TrainingSet,
    DEFAULT_RIDGE_LAMBDA, DEFAULT_TAU_MAX,
};
use hyperloop::spectrum::FeatureExtractor;
use hyperloop::walks::{count_loops_bruteforce, LoopKind};
use hyperloop::{trace_powers, Error, Hypergraph, Hyperlink, Label};

const CV_FOLDS: usize = 5;

#[derive(Parser)]
#[command(
    name = "hyperloop",
    version,
    about = "Hyperlink prediction from loop spectra"
)]
struct Cli {
    /// Worker threads for feature extraction (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model: observed hyperlinks are positives, candidates negatives.
    Fit(FitArgs),
    /// Rank candidate hyperlinks with a fitted model.
    Score(ScoreArgs),
    /// Repeated hold-out experiments on one hypergraph.
    Experiment(ExperimentArgs),
    /// Compare enumerated closed walks with the matrix trace.
    Oracle(OracleArgs),
    /// Draw fake hyperlinks by cardinality and node degree.
    Sample(SampleArgs),
    /// Delete random hyperlinks into a test set.
    Split(SplitArgs),
    /// AUC and Precision of an external score file.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct ModelFlags {
    /// Loop cutoff.
    #[arg(long, conflicts_with = "tau_grid")]
    tau_max: Option<usize>,
    /// Cutoffs to cross-validate, e.g. `6-14` or `6,8,10`.
    #[arg(long)]
    tau_grid: Option<String>,
    /// Scaling exponent grid `min:step:max`.
    #[arg(long, default_value = "0:0.1:2")]
    gamma: String,
    /// Ridge penalty on the loop coefficients.
    #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
    lambda: f64,
    /// Feature blocks: full, node-only or hyperlink-only.
    #[arg(long, default_value = "full")]
    ablation: String,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    #[command(flatten)]
    model: ModelFlags,
    /// Seed for cross-validation folds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Model file to write.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    candidates: PathBuf,
    /// Expected loop cutoff of the model.
    #[arg(long)]
    tau_max: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    model: ModelFlags,
    /// Score with a baseline instead of the loop model: cn or katz.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, default_value_t = 12)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 400)]
    test_count: usize,
    #[arg(long, default_value_t = 1200)]
    negatives: usize,
    /// Drop singleton and repeated hyperlinks instead of failing.
    #[arg(long)]
    lenient: bool,
    /// Report file (JSON); a CSV summary row goes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    graph: PathBuf,
    /// Walk length.
    #[arg(long, alias = "tau-max")]
    tau: usize,
    /// node-based or hyperlink-based.
    #[arg(long, default_value = "node-based")]
    kind: String,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = 1200)]
    negatives: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    test_count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving train.txt, test.txt and manifest.txt.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Tab-separated `hyperlink-id score` lines.
    #[arg(long)]
    external_scores: PathBuf,
    /// Hyperlink file listing the true missing hyperlinks.
    #[arg(long)]
    positives: PathBuf,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Raised when the enumerated and trace loop counts differ.
#[derive(Debug)]
struct OracleDisagreement;

impl std::fmt::Display for OracleDisagreement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("brute-force count and trace disagree")
    }
}

impl std::error::Error for OracleDisagreement {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<OracleDisagreement>().is_some() {
        return 4;
    }
    match err.downcast_ref::<Error>() {
        Some(
            Error::MalformedLine { .. }
            | Error::DuplicateHyperlink(_)
            | Error::SingletonHyperlink(_)
            | Error::UnknownLabel(_)
            | Error::NodeOutOfRange { .. }
            | Error::ModelFormat(_)
            | Error::Io(_),
        ) => 1,
        Some(
            Error::Config(_)
            | Error::EnumerationTooLarge(_)
            | Error::InvalidTauMax(_)
            | Error::TestCountTooLarge { .. },
        ) => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::Config(msg.into()).into()
}

fn read_lines(path: &Path) -> Result<Vec<LabelLine>> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_label_lines(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
}

/// Parses the graph with the candidates' labels added to the node set.
fn graph_and_candidates(graph: &Path, candidates: &Path) -> Result<(Hypergraph, Vec<Hyperlink>)> {
    let cand_lines = read_lines(candidates)?;
    let extra: Vec<String> = cand_lines
        .iter()
        .flat_map(|l| l.labels.iter().cloned())
        .collect();
    let g = hypergraph_from_lines(&read_lines(graph)?, &extra, BuildOptions::default())
        .with_context(|| format!("reading {}", graph.display()))?
        .graph;
    let cands = candidates_from_lines(&g, &cand_lines)
        .with_context(|| format!("reading {}", candidates.display()))?;
    Ok((g, cands))
}

fn parse_graph(path: &Path, lenient: bool) -> Result<ParsedHypergraph> {
    let options = BuildOptions {
        drop_singletons: lenient,
        drop_duplicates: lenient,
    };
    let parsed = hypergraph_from_lines(&read_lines(path)?, &[], options)
        .with_context(|| format!("reading {}", path.display()))?;
    for (line, why) in &parsed.dropped {
        eprintln!("warning: {}: dropped line {line}: {why}", path.display());
    }
    Ok(parsed)
}

fn parse_gamma(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| config_error(format!("--gamma expects min:step:max, got `{spec}`")))?;
    match nums.as_slice() {
        [min, step, max] => Ok(gamma_grid(*min, *step, *max)?),
        [only] => Ok(gamma_grid(*only, 0.0, *only)?),
        _ => Err(config_error(format!(
            "--gamma expects min:step:max, got `{spec}`"
        ))),
    }
}

fn parse_tau_grid(spec: &str) -> Result<Vec<usize>> {
    let bad = || {
        config_error(format!(
            "--tau-grid expects `a-b` or a comma list, got `{spec}`"
        ))
    };
    let mut out = Vec::new();
    for part in spec.split(',') {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (
                    a.trim().parse().map_err(|_| bad())?,
                    b.trim().parse().map_err(|_| bad())?,
                );
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.trim().parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    out.dedup();
    if let Some(&t) = out.iter().find(|&&t| t < 2) {
        return Err(Error::InvalidTauMax(t).into());
    }
    Ok(out)
}

struct ModelSettings {
    tau: TauChoice,
    gamma: Vec<f64>,
    options: FitOptions,
}

impl ModelFlags {
    fn settings(&self) -> Result<ModelSettings> {
        let tau = match (&self.tau_grid, self.tau_max) {
            (Some(grid), _) => TauChoice::CrossValidate {
                grid: parse_tau_grid(grid)?,
                folds: CV_FOLDS,
            },
            (None, Some(t)) if t < 2 => return Err(Error::InvalidTauMax(t).into()),
            (None, t) => TauChoice::Fixed(t.unwrap_or(DEFAULT_TAU_MAX)),
        };
        if !(self.lambda >= 0.0) {
            return Err(config_error(format!(
                "--lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        Ok(ModelSettings {
            tau,
            gamma: parse_gamma(&self.gamma)?,
            options: FitOptions {
                ridge_lambda: self.lambda,
                mode: self.ablation.parse::<AblationMode>()?,
                ..FitOptions::default()
            },
        })
    }

    fn echo(&self, out: &mut Vec<(String, String)>) {
        let tau = match (&self.tau_grid, self.tau_max) {
            (Some(g), _) => format!("cv {g} ({CV_FOLDS} folds)"),
            (None, t) => t.unwrap_or(DEFAULT_TAU_MAX).to_string(),
        };
        out.push(("tau".into(), tau));
        out.push(("gamma".into(), self.gamma.clone()));
        out.push(("lambda".into(), self.lambda.to_string()));
        out.push(("ablation".into(), self.ablation.clone()));
    }
}

fn header(command: &str, config: &[(String, String)]) -> String {
    let mut s = format!(
        "# hyperloop {command}\n# version = {}\n",
        hyperloop::VERSION
    );
    for (k, v) in config {
        let _ = writeln!(s, "# {k} = {v}");
    }
    s
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn label_line(g: &Hypergraph, e: &Hyperlink) -> String {
    e.nodes()
        .iter()
        .map(|&i| g.labels()[i].as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let settings = args.model.settings()?;
    let (g, candidates) = graph_and_candidates(&args.graph, &args.candidates)?;
    if let Some(e) = candidates.iter().find(|e| g.contains(e)) {
        return Err(Error::DuplicateHyperlink(format!(
            "candidate `{}` is an observed hyperlink",
            g.hyperlink_id(e)
        ))
        .into());
    }
    let labelled: Vec<(Hyperlink, Label)> = g
        .hyperlinks()
        .iter()
        .map(|e| (e.clone(), Label::Positive))
        .chain(candidates.iter().map(|e| (e.clone(), Label::Negative)))
        .collect();
    let tau = match &settings.tau {
        TauChoice::Fixed(t) => *t,
        TauChoice::CrossValidate { grid, folds } => {
            let sel = select_tau_c(
                &g,
                &labelled,
                grid,
                *folds,
                derive_seed(args.seed, 2),
                &settings.gamma,
                &settings.options,
            )?;
            for (t, auc) in &sel.scores {
                eprintln!("cv tau_max = {t}: mean validation AUC {auc:.6}");
            }
            sel.tau_max
        }
    };
    let ex = FeatureExtractor::new(g, tau)?;
    let (edges, labels): (Vec<Hyperlink>, Vec<Label>) = labelled.into_iter().unzip();
    let features = ex.features_batch(&edges)?;
    let data = TrainingSet::new(features.into_iter().zip(labels).collect())?;
    let model = fit(&data, &settings.gamma, &settings.options)?;

    let d = &model.diagnostics;
    eprintln!("tau_max = {}", model.tau_max);
    eprintln!("gamma = {}", model.gamma);
    eprintln!("log_likelihood = {}", d.log_likelihood);
    eprintln!("iterations = {}", d.iterations);
    if !d.converged {
        eprintln!("warning: optimizer did not converge; the best iterate was kept");
    }

    let mut config = vec![
        ("command".to_string(), "fit".to_string()),
        ("graph".into(), args.graph.display().to_string()),
        ("candidates".into(), args.candidates.display().to_string()),
        ("seed".into(), args.seed.to_string()),
    ];
    args.model.echo(&mut config);
    emit(Some(&args.output), &model.to_text(&config))
}

fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let text = fs::read_to_string(&args.model)
        .map_err(|e| Error::Io(format!("{}: {e}", args.model.display())))?;
    let model = FittedModel::from_text(&text)
        .with_context(|| format!("reading {}", args.model.display()))?;
    if let Some(t) = args.tau_max {
        if t != model.tau_max {
            return Err(Error::DimensionMismatch {
                expected: 2 * (model.tau_max - 1),
                got: 2 * t.saturating_sub(1),
            }
            .into());
        }
    }
    let (g, candidates) = graph_and_candidates(&args.graph, &args.candidates)?;
    let ex = FeatureExtractor::new(g, model.tau_max)?;
    let features = ex.features_batch(&candidates)?;
    let mut rows: Vec<(String, f64)> = candidates
        .iter()
        .zip(&features)
        .map(|(e, f)| Ok((ex.graph().hyperlink_id(e), model.predict_proba(f)?)))
        .collect::<hyperloop::Result<_>>()?;
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let config = vec![
        ("model".to_string(), args.model.display().to_string()),
        ("graph".into(), args.graph.display().to_string()),
        ("candidates".into(), args.candidates.display().to_string()),
        ("tau_max".into(), model.tau_max.to_string()),
        ("gamma".into(), model.gamma.to_string()),
        ("ablation".into(), model.mode.to_string()),
    ];
    let mut out = header("score", &config);
    out.push_str("# hyperlink\tprobability\trank\n");
    for (rank, (id, p)) in rows.iter().enumerate() {
        let _ = writeln!(out, "{id}\t{p}\t{}", rank + 1);
    }
    emit(args.output.as_deref(), &out)
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<()> {
    let settings = args.model.settings()?;
    let method = match args.baseline.as_deref() {
        None => Method::Loop,
        Some(b @ ("cn" | "katz")) => b.parse()?,
        Some(other) => {
            return Err(config_error(format!(
                "unknown baseline `{other}`; expected cn or katz"
            )))
        }
    };
    let g = parse_graph(&args.graph, args.lenient)?.graph;
    let dataset = args
        .graph
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "graph".into());
    let cfg = ExperimentConfig {
        dataset,
        method,
        test_count: args.test_count,
        negatives: args.negatives,
        tau: settings.tau,
        gamma_grid: settings.gamma,
        ridge_lambda: settings.options.ridge_lambda,
        mode: settings.options.mode,
        ..ExperimentConfig::default()
    };
    let report = hyperloop::experiment::run_experiment(&g, &cfg, args.repetitions, args.seed)?;
    match &args.output {
        Some(path) => {
            emit(Some(path), &report.to_json())?;
            println!("{}", ExperimentReport::csv_header());
            println!("{}", report.csv_row());
        }
        None => print!("{}", report.to_json()),
    }
    eprintln!(
        "{} runs: AUC {:.4} ± {:.4}, Precision {:.4} ± {:.4} ({:.1}s)",
        report.aggregate.runs,
        report.aggregate.auc_mean,
        report.aggregate.auc_std,
        report.aggregate.precision_mean,
        report.aggregate.precision_std,
        report.total_runtime().as_secs_f64()
    );
    Ok(())
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let kind: LoopKind = args.kind.parse()?;
    let g = parse_graph(&args.graph, false)?.graph;
    let walks = count_loops_bruteforce(&g, args.tau, kind)?;
    let matrix = match kind {
        LoopKind::NodeBased => g.adjacency().0,
        LoopKind::HyperlinkBased => g.intersection_profile().0,
    };
    let trace = trace_powers(&matrix, args.tau)?[args.tau - 2];
    println!("kind = {kind}");
    println!("tau = {}", args.tau);
    println!("brute_force = {walks}");
    println!("trace = {trace}");
    if trace.round() as u64 != walks || (trace - trace.round()).abs() > 1e-6 {
        return Err(OracleDisagreement.into());
    }
    Ok(())
}

fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let g = parse_graph(&args.graph, false)?.graph;
    let fakes =
        sample_negative_hyperlinks(&g, &NegativeSamplerConfig::new(args.negatives, args.seed))?;
    let config = vec![
        ("graph".to_string(), args.graph.display().to_string()),
        ("negatives".into(), args.negatives.to_string()),
        ("seed".into(), args.seed.to_string()),
    ];
    let mut out = header("sample", &config);
    for e in &fakes {
        let _ = writeln!(out, "{}", label_line(&g, e));
    }
    emit(args.output.as_deref(), &out)
}

fn cmd_split(args: &SplitArgs) -> Result<()> {
    let parsed = parse_graph(&args.graph, false)?;
    let g = &parsed.graph;
    let split = split_train_test(
        g,
        SplitSpec {
            test_count: args.test_count,
            seed: args.seed,
        },
    )?;
    fs::create_dir_all(&args.output)
        .map_err(|e| Error::Io(format!("{}: {e}", args.output.display())))?;
    let config = vec![
        ("graph".to_string(), args.graph.display().to_string()),
        ("test_count".into(), args.test_count.to_string()),
        ("seed".into(), args.seed.to_string()),
    ];
    let listing = |part: &str, edges: &[Hyperlink]| {
        let mut s = header(&format!("split {part}"), &config);
        for e in edges {
            let _ = writeln!(s, "{}", label_line(g, e));
        }
        s
    };
    emit(
        Some(&args.output.join("train.txt")),
        &listing("train", split.train.hyperlinks()),
    )?;
    emit(
        Some(&args.output.join("test.txt")),
        &listing("test", &split.test),
    )?;
    let mut manifest = split.manifest(Some(&parsed.lines));
    let _ = writeln!(manifest, "graph = {}", args.graph.display());
    emit(Some(&args.output.join("manifest.txt")), &manifest)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let file = fs::File::open(&args.external_scores)
        .map_err(|e| Error::Io(format!("{}: {e}", args.external_scores.display())))?;
    let scores = read_score_file(BufReader::new(file))
        .with_context(|| format!("reading {}", args.external_scores.display()))?;
    let positives: HashSet<String> = read_lines(&args.positives)?
        .iter()
        .map(|l| canonical_id(&l.labels.join("+")))
        .collect();
    let (auc, precision) = evaluate_scores(&positives, &scores)?;
    let found = scores
        .iter()
        .filter(|(id, _)| positives.contains(id))
        .count();
    let config = vec![
        (
            "external_scores".to_string(),
            args.external_scores.display().to_string(),
        ),
        ("positives".into(), args.positives.display().to_string()),
    ];
    let mut out = header("evaluate", &config);
    let _ = writeln!(out, "candidates = {}", scores.len());
    let _ = writeln!(out, "positives = {found}");
    let _ = writeln!(out, "auc = {auc}");
    let _ = writeln!(out, "precision = {precision}");
    emit(args.output.as_deref(), &out)
}

fn run(cli: Cli) -> Result<()> {
    hyperloop::with_jobs(cli.jobs, || match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Score(a) => cmd_score(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Sample(a) => cmd_sample(a),
        Command::Split(a) => cmd_split(a),
        Command::Evaluate(a) => cmd_evaluate(a),
    })
    .map_err(anyhow::Error::from)?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
