use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cgalr::error::{Error, Result};
use cgalr::harness::{self, ExperimentConfig, MetricObservation, Preset};
use cgalr::metrics::{summary_distance, DistanceKind, TopoSummary};
use cgalr::topology::{read_diagram_csv, read_vector_csv};

#[derive(Parser)]
#[command(name = "cgalr", version, about = "Connectome-guided learning-rate control and baselines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Hyperparameter preset the config file is applied on top of.
    #[arg(long, default_value = "image")]
    preset: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated schedule tags, or `all`.
    #[arg(long)]
    schedule: Option<String>,
    /// Comma-separated distance tags for cg_alr (top, wd, bd, hk, swk).
    #[arg(long)]
    distance: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma-separated initial rates.
    #[arg(long = "eta-star")]
    eta_star: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "cgalr-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run: the first schedule, distance, seed and rate of the configuration.
    Train(RunArgs),
    /// Run the full matrix and write logs, summaries and RED tables.
    Compare(RunArgs),
    /// Distance between two persistence diagrams (or vectors for TOP) stored as CSV.
    Distances {
        #[arg(long)]
        kind: String,
        first: PathBuf,
        second: PathBuf,
        /// Wasserstein or sliced order.
        #[arg(long)]
        p: Option<f64>,
        /// Heat kernel bandwidth.
        #[arg(long)]
        sigma: Option<f64>,
        /// Sliced Wasserstein direction count.
        #[arg(long)]
        directions: Option<usize>,
    },
    /// Percentile bootstrap CI of the median of a one-column values file.
    Bootstrap {
        file: PathBuf,
        #[arg(long, default_value_t = 1000)]
        resamples: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Composite score from a `variant,group,metric,value` table.
    Composite { file: PathBuf },
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::preset(args.preset.parse::<Preset>()?);
    if let Some(path) = &args.config {
        cfg.apply_text(&fs::read_to_string(path)?)?;
    }
    let mut problems = Vec::new();
    for (key, value) in [("schedule", &args.schedule), ("distance", &args.distance), ("seeds", &args.seeds), ("eta_star", &args.eta_star)] {
        if let Some(v) = value {
            if let Err(e) = cfg.set(key, v) {
                problems.push(format!("--{}: {e}", key.replace('_', "-")));
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let spec = harness::plan(&cfg)?.into_iter().next().expect("validated config has at least one cell");
    let data = harness::prepare_data(&cfg)?;
    let log = harness::run_single(&cfg, &data, &spec)?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("config.txt"), cfg.to_text())?;
    harness::experiment::write_run_log(&log, &args.out)?;
    println!(
        "{} seed={} eta_star={} final_train_loss={} max_val_acc={} test_acc={} -> {}",
        log.meta.method,
        log.meta.seed,
        log.meta.eta_star,
        log.final_train_loss(),
        log.max_val_acc(),
        log.test_acc_at_best(),
        args.out.join(format!("{}.csv", log.file_stem())).display()
    );
    Ok(())
}

fn compare(args: &RunArgs) -> Result<()> {
    let cfg = load_config(args)?;
    let out = harness::run_experiment(&cfg, Some(&args.out))?;
    println!("method,eta_star,final_train_loss,max_val_acc,test_acc");
    for r in &out.summary.rows {
        println!("{},{},{},{},{}", r.method, r.eta_star, r.final_train_loss, r.max_val_acc, r.test_acc);
    }
    println!("{} runs written to {}", out.runs.len(), args.out.display());
    Ok(())
}

fn read_summary(path: &Path, vector: bool) -> Result<TopoSummary> {
    let input = BufReader::new(fs::File::open(path)?);
    Ok(if vector { TopoSummary::Vector(read_vector_csv(input)?) } else { TopoSummary::Diagram(read_diagram_csv(input)?) })
}

fn distances(kind: &str, first: &Path, second: &Path, p: Option<f64>, sigma: Option<f64>, directions: Option<usize>) -> Result<()> {
    let kind = match kind.parse::<DistanceKind>()? {
        DistanceKind::Wasserstein { p: d } => DistanceKind::Wasserstein { p: p.unwrap_or(d) },
        DistanceKind::Heat { sigma: d } => DistanceKind::Heat { sigma: sigma.unwrap_or(d) },
        DistanceKind::SlicedWasserstein { directions: n, p: q, tau } => {
            DistanceKind::SlicedWasserstein { directions: directions.unwrap_or(n), p: p.unwrap_or(q), tau }
        }
        k => k,
    };
    let a = read_summary(first, kind.uses_vector())?;
    let b = read_summary(second, kind.uses_vector())?;
    println!("{}", summary_distance(&kind, &a, &b)?);
    Ok(())
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if values.is_empty() && i == 0 => {}
            Err(e) => return Err(Error::Parse { location: format!("{}:{}", path.display(), i + 1), message: e.to_string() }),
        }
    }
    Ok(values)
}

fn bootstrap(file: &Path, resamples: usize, level: f64, seed: u64) -> Result<()> {
    let r = harness::bootstrap_median_ci(&read_values(file)?, resamples, level, seed)?;
    println!("{}", serde_json::to_string(&r).expect("plain struct serializes"));
    Ok(())
}

fn composite(file: &Path) -> Result<()> {
    let text = fs::read_to_string(file)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || (i == 0 && t.starts_with("variant")) {
            continue;
        }
        let loc = || format!("{}:{}", file.display(), i + 1);
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(Error::Parse { location: loc(), message: "expected variant,group,metric,value".into() });
        }
        let value = f[3].parse::<f64>().map_err(|e| Error::Parse { location: loc(), message: e.to_string() })?;
        rows.push(MetricObservation { variant: f[0].into(), group: f[1].parse()?, metric: f[2].into(), value });
    }
    let (variants, columns) = harness::pooled_columns(&rows)?;
    let scores = harness::composite_score(&columns, variants.len())?;
    println!("variant,composite");
    for (v, s) in variants.iter().zip(scores) {
        println!("{v},{s}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train(a) => train(a),
        Command::Compare(a) => compare(a),
        Command::Distances { kind, first, second, p, sigma, directions } => distances(kind, first, second, *p, *sigma, *directions),
        Command::Bootstrap { file, resamples, level, seed } => bootstrap(file, *resamples, *level, *seed),
        Command::Composite { file } => composite(file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let details = match &e {
                Error::Config(list) => serde_json::json!(list),
                _ => serde_json::Value::Null,
            };
            let line = serde_json::json!({ "error": { "kind": e.kind(), "message": e.to_string(), "details": details } });
            eprintln!("{line}");
            ExitCode::from(2)
        }
    }
}
