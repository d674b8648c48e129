use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use wmrmr::dataset::{
    generate_synthetic, load_csv_with, train_test_split, write_csv, LabelValues, SyntheticRecipe,
};
use wmrmr::mrmr::{incremental_rank, MrmrConfig};
use wmrmr::pca::{pca_fit_with, pca_transform};
use wmrmr::pipeline::{
    emit_curves, evaluate_final, evaluate_report, mi_matrix, save_curves_csv,
    select_features, PipelineConfig,
};
use wmrmr::svm::{coarse_grid, full_grid};
use wmrmr::Dataset64;

/// Weighted mRMR feature selection with SVM wrapper validation.
#[derive(Parser, Debug)]
#[command(name = "wmrmr", version)]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true, value_parser = positive)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rank features for one or more weights.
    Rank(RankArgs),
    /// Full selection run: rank, score nested subsets, pick the best, test.
    Select(SelectArgs),
    /// Grid-search, train and test an SVM on a named feature subset.
    Eval(EvalArgs),
    /// Principal-component baseline.
    Pca(PcaArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Dump the mutual-information matrix.
    Mi(MiArgs),
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// Training CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Name of the label column.
    #[arg(long, default_value = "label")]
    label_col: String,
    /// Stable and unstable label values, comma separated.
    #[arg(long, default_value = "0,1", value_parser = label_pair)]
    labels: LabelPair,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct RankArgs {
    #[command(flatten)]
    input: Input,
    /// Single weight; overrides --alphas.
    #[arg(long, value_parser = unit_interval)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',', value_parser = unit_interval, default_value = "0,0.25,0.5,0.75,1")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 10, value_parser = at_least_two)]
    bins: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct SelectArgs {
    #[command(flatten)]
    input: Input,
    /// Held-out CSV; without it a stratified third of --input is held out.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = unit_interval, default_value = "0,0.25,0.5,0.75,1")]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = 10, value_parser = at_least_two)]
    bins: usize,
    #[arg(long, default_value_t = 5, value_parser = at_least_two)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Grid used to score candidate subsets.
    #[arg(long, default_value = "coarse", value_parser = ["coarse", "full"])]
    scoring_grid: String,
    /// Variance share kept by the PCA baseline.
    #[arg(long, default_value_t = 0.95, value_parser = variance_share)]
    variance: f64,
    /// Stop after selection; skip the final test-set models.
    #[arg(long)]
    no_final: bool,
}

#[derive(Args, Debug, Clone)]
struct EvalArgs {
    #[command(flatten)]
    input: Input,
    /// Test CSV with the same columns as --input.
    #[arg(long)]
    test: PathBuf,
    /// Comma-separated feature names.
    #[arg(long)]
    subset: String,
    #[arg(long, default_value_t = 5, value_parser = at_least_two)]
    folds: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct PcaArgs {
    #[command(flatten)]
    input: Input,
    /// Optional CSV to project with the fitted components.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95, value_parser = variance_share)]
    variance: f64,
    /// Fit on centered but unscaled features.
    #[arg(long)]
    no_standardize: bool,
}

#[derive(Args, Debug, Clone)]
struct SynthArgs {
    /// `default`, `redundancy`, or a JSON recipe file.
    #[arg(long, default_value = "default")]
    recipe: String,
    #[arg(long, default_value_t = 600, value_parser = synth_samples)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "label")]
    label_col: String,
    #[arg(long, default_value = "0,1", value_parser = label_pair)]
    labels: LabelPair,
    /// Output CSV path.
    #[arg(long, default_value = "synthetic.csv")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct MiArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 10, value_parser = at_least_two)]
    bins: usize,
}

#[derive(Debug, Clone)]
struct LabelPair(LabelValues);

fn label_pair(s: &str) -> Result<LabelPair, String> {
    match s.split(',').map(str::trim).collect::<Vec<_>>()[..] {
        [a, b] if !a.is_empty() && !b.is_empty() && a != b => Ok(LabelPair(LabelValues {
            stable: a.into(),
            unstable: b.into(),
        })),
        _ => Err("expected two distinct values, e.g. 0,1".into()),
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn variance_share(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

fn at_least(s: &str, min: usize) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= min {
        Ok(v)
    } else {
        Err(format!("must be at least {min}"))
    }
}

fn at_least_two(s: &str) -> Result<usize, String> {
    at_least(s, 2)
}

fn positive(s: &str) -> Result<usize, String> {
    at_least(s, 1)
}

fn synth_samples(s: &str) -> Result<usize, String> {
    at_least(s, 20)
}

/// A bad flag value caught after parsing; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<wmrmr::Error>() {
        Some(e) if e.is_validation() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let result = match &cli.command {
        Command::Rank(a) => cmd_rank(a, &argv),
        Command::Select(a) => cmd_select(a, &argv),
        Command::Eval(a) => cmd_eval(a, &argv),
        Command::Pca(a) => cmd_pca(a, &argv),
        Command::Synth(a) => cmd_synth(a, &argv),
        Command::Mi(a) => cmd_mi(a, &argv),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn provenance(argv: &[String], seed: Option<u64>) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "args": argv,
        "seed": seed,
        "created_unix": now_unix(),
    })
}

fn load(input: &Input, path: &Path) -> Result<Dataset64> {
    load_csv_with(path, &input.label_col, &input.labels.0).map_err(anyhow::Error::from)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(input: &Input) -> Result<&Path> {
    fs::create_dir_all(&input.out_dir).with_context(|| format!("creating {}", input.out_dir.display()))?;
    Ok(&input.out_dir)
}

fn cmd_rank(a: &RankArgs, argv: &[String]) -> Result<()> {
    let d = load(&a.input, &a.input.input)?;
    let alphas = a.alpha.map_or_else(|| a.alphas.clone(), |x| vec![x]);
    let mi = mi_matrix(&d, a.bins)?;
    let mut rankings = Vec::new();
    for &alpha in &alphas {
        let r = incremental_rank(&mi, &MrmrConfig::new(alpha)?)?;
        let named = r.to_named(d.feature_names());
        println!("alpha={alpha}: {}", named.order.join(", "));
        rankings.push(named);
    }
    let path = out_dir(&a.input)?.join("ranking.json");
    write_json(
        &path,
        &json!({
            "provenance": provenance(argv, Some(a.seed)),
            "bin_config": mi.bin_config(),
            "rankings": rankings,
        }),
    )?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_select(a: &SelectArgs, argv: &[String]) -> Result<()> {
    let d = load(&a.input, &a.input.input)?;
    let (train, test) = match &a.test {
        Some(p) => {
            let test = load(&a.input, p)?;
            if !d.same_schema(&test) {
                return Err(Usage("--test columns differ from --input".into()).into());
            }
            (d, test)
        }
        None => train_test_split(&d, 1.0 / 3.0, a.seed)?,
    };
    let config = PipelineConfig {
        bins: a.bins,
        folds: a.folds,
        seed: a.seed,
        scoring_grid: if a.scoring_grid == "full" { full_grid() } else { coarse_grid() },
        final_grid: full_grid(),
        variance_threshold: a.variance,
    };
    let mut report = select_features(&train, &a.alphas, &config)?;
    if !a.no_final {
        evaluate_report(&mut report, &train, &test, &config)?;
    }
    report.provenance.flags = flag_map(argv);
    report.provenance.created_unix = Some(now_unix());

    let dir = out_dir(&a.input)?;
    write_json(&dir.join("report.json"), &report)?;
    save_curves_csv(&emit_curves(&report), &dir.join("curves.csv"))?;

    let best = &report.global_best;
    println!("F* = {}", best.subset.join(", "));
    println!("alpha = {}", best.alpha);
    println!("e* = {:.4}", best.score);
    for f in &report.final_metrics {
        let m = f.metrics;
        println!(
            "{:<9} features={:<3} a_test={:.4} kappa={:.4} auc={:.4} eta={:.4}",
            f.name,
            f.features.len(),
            m.a_test,
            m.kappa,
            m.auc,
            m.eta
        );
    }
    eprintln!("wrote {}", dir.join("report.json").display());
    Ok(())
}

/// `--flag value` pairs from the raw arguments, for the report provenance.
fn flag_map(argv: &[String]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("command".to_string(), argv.join(" "));
    let mut it = argv.iter().peekable();
    while let Some(arg) = it.next() {
        if let Some(name) = arg.strip_prefix("--") {
            let (key, value) = match name.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => match it.peek() {
                    Some(v) if !v.starts_with("--") => (name.to_string(), it.next().unwrap().clone()),
                    _ => (name.to_string(), "true".to_string()),
                },
            };
            map.insert(key, value);
        }
    }
    map
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn cmd_eval(a: &EvalArgs, argv: &[String]) -> Result<()> {
    let names: Vec<&str> = a.subset.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(Usage("--subset lists no feature names".into()).into());
    }
    let train = load(&a.input, &a.input.input)?;
    let test = load(&a.input, &a.test)?;
    if same_file(&a.input.input, &a.test) {
        eprintln!("warning: --test is the training file; accuracy is not a held-out estimate");
    }
    if !train.same_schema(&test) {
        return Err(Usage("--test columns differ from --input".into()).into());
    }
    let subset = train.resolve_names(&names)?;
    let config = PipelineConfig {
        folds: a.folds,
        seed: a.seed,
        ..PipelineConfig::default()
    };
    let e = evaluate_final(&train, &test, &subset, &config)?;
    let m = e.metrics;
    println!("a_test = {:.4}", m.a_test);
    println!("kappa  = {:.4}", m.kappa);
    println!("auc    = {:.4}", m.auc);
    println!("eta    = {:.4}", m.eta);
    let path = out_dir(&a.input)?.join("metrics.json");
    write_json(
        &path,
        &json!({
            "provenance": provenance(argv, Some(a.seed)),
            "features": e.features,
            "chosen_config": e.chosen_config,
            "cv_score": e.cv_score,
            "metrics": m,
        }),
    )?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_pca(a: &PcaArgs, argv: &[String]) -> Result<()> {
    let d = load(&a.input, &a.input.input)?;
    let p = pca_fit_with(&d, a.variance, !a.no_standardize)?;
    let dir = out_dir(&a.input)?;
    write_json(
        &dir.join("pca.json"),
        &json!({ "provenance": provenance(argv, None), "projection": p }),
    )?;
    let labels = &a.input.labels.0;
    write_csv(&pca_transform(&p, &d)?, dir.join("pca_train.csv"), &a.input.label_col, labels)?;
    if let Some(t) = &a.test {
        let test = load(&a.input, t)?;
        write_csv(&pca_transform(&p, &test)?, dir.join("pca_test.csv"), &a.input.label_col, labels)?;
    }
    println!(
        "retained {} of {} components, cumulative explained variance {:.4}",
        p.retained_k,
        d.n_features(),
        p.cumulative_ratio()
    );
    Ok(())
}

fn cmd_synth(a: &SynthArgs, argv: &[String]) -> Result<()> {
    let recipe = match a.recipe.as_str() {
        "default" => SyntheticRecipe::tz_default(),
        "redundancy" => SyntheticRecipe::redundancy_demo(),
        path => {
            let text = fs::read_to_string(path)
                .map_err(|e| Usage(format!("--recipe {path}: not a preset and not readable: {e}")))?;
            serde_json::from_str(&text).map_err(|e| Usage(format!("--recipe {path}: {e}")))?
        }
    };
    let d: Dataset64 = generate_synthetic(a.samples, &recipe, a.seed)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_csv(&d, &a.out, &a.label_col, &a.labels.0)?;
    let side = a.out.with_extension("provenance.json");
    write_json(&side, &json!({ "provenance": provenance(argv, Some(a.seed)), "recipe": recipe }))?;
    let [s, u] = d.class_counts();
    println!("wrote {} ({} samples, {} features, {s} stable / {u} unstable)", a.out.display(), d.n_samples(), d.n_features());
    Ok(())
}

fn cmd_mi(a: &MiArgs, argv: &[String]) -> Result<()> {
    let d = load(&a.input, &a.input.input)?;
    let mi = mi_matrix(&d, a.bins)?;
    let path = out_dir(&a.input)?.join("mi.json");
    write_json(
        &path,
        &json!({ "provenance": provenance(argv, None), "mi": mi.report(d.feature_names())? }),
    )?;
    println!("wrote {}", path.display());
    Ok(())
}
