//! Single runs and the full schedules x distances x seeds x rates matrix.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::runlog::{ControlRow, EpochRow, RunLog, RunMeta, RUNLOG_VERSION};
use super::stats::{bootstrap_median_ci, red, RedResult};
use crate::connectome::{build_probe_set, correlation_connectome};
use crate::controller::Controller;
use crate::error::{Error, Result};
use crate::metrics::{epoch_distance, TopoSummary};
use crate::rng;
use crate::schedules::{RateSource, SchedulePolicy};
use crate::signal::TopoSignalState;
use crate::trainer::{split, SgdConfig, Split, Trainer};

const PROBE_STREAM: u64 = 3;
const SPLIT_STREAM: u64 = 4;

/// One cell of the experiment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub schedule: String,
    pub distance: Option<String>,
    pub seed: u64,
    pub eta_star: f64,
}

impl RunSpec {
    pub fn method(&self) -> String {
        match &self.distance {
            Some(d) => format!("{}-{}", self.schedule, d.to_ascii_lowercase()),
            None => self.schedule.clone(),
        }
    }
}

/// Matrix cells in a fixed order: schedule, distance, rate, seed.
pub fn plan(cfg: &ExperimentConfig) -> Result<Vec<RunSpec>> {
    let mut out = Vec::new();
    for tag in &cfg.schedules {
        let policy = cfg.policy(tag)?;
        let distances: Vec<Option<String>> = if policy == SchedulePolicy::CgAlr {
            cfg.distances.iter().map(|d| Some(d.to_ascii_lowercase())).collect()
        } else {
            vec![None]
        };
        for distance in distances {
            for &eta_star in &cfg.eta_stars {
                for &seed in &cfg.seeds {
                    out.push(RunSpec { schedule: policy.tag().to_string(), distance: distance.clone(), seed, eta_star });
                }
            }
        }
    }
    Ok(out)
}

/// The shuffled 70/15/15 split of the configured dataset.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<Split> {
    split(&cfg.load_dataset()?, rng::derive_seed(cfg.data_seed, SPLIT_STREAM))
}

/// Train one configuration and log every epoch.
pub fn run_single(cfg: &ExperimentConfig, data: &Split, spec: &RunSpec) -> Result<RunLog> {
    let policy = cfg.policy(&spec.schedule)?;
    let n_classes = data.train.n_classes.max(data.val.n_classes).max(data.test.n_classes);
    let mlp = cfg.mlp_spec(data.train.n_features(), n_classes);
    // DoG sets the step size itself and is run as plain SGD
    let momentum = if matches!(policy, SchedulePolicy::Dog { .. }) { 0.0 } else { cfg.momentum };
    let sgd = SgdConfig { momentum, weight_decay: cfg.weight_decay, batch_size: cfg.batch_size, seed: spec.seed };
    let mut trainer = Trainer::new(mlp, sgd, data.clone())?;
    let meta = RunMeta {
        method: spec.method(),
        schedule: policy.tag().to_string(),
        distance: spec.distance.as_ref().map(|d| d.to_ascii_uppercase()),
        seed: spec.seed,
        eta_star: spec.eta_star,
        config_hash: cfg.hash(),
    };
    let start = Instant::now();
    let mut rows = Vec::with_capacity(cfg.epochs);

    if policy == SchedulePolicy::CgAlr {
        let tag = spec.distance.as_deref().ok_or_else(|| Error::arg("cg_alr run needs a distance"))?;
        let kind = cfg.distance(tag)?;
        let batches = data.train.len().div_ceil(cfg.batch_size);
        let mut controller = Controller::new(cfg.controller_config(spec.eta_star, batches))?;
        let mut signal = TopoSignalState::new(cfg.signal_config())?;
        let probe = build_probe_set(&data.train.labels, cfg.probe_p, rng::derive_seed(spec.seed, PROBE_STREAM))?;
        let mut prev: Option<TopoSummary> = None;
        for _ in 0..cfg.epochs {
            let m = trainer.train_epoch(&mut controller)?;
            let connectome = correlation_connectome(&trainer.capture_activations(&probe)?);
            let summary = kind.summarize(&connectome);
            let delta = epoch_distance(&kind, prev.as_ref(), &summary)?;
            prev = Some(summary);
            let sample = signal.observe(delta)?;
            let d = controller.end_of_epoch(m.epoch, sample.z, sample.threshold)?;
            rows.push(EpochRow {
                epoch: m.epoch,
                eta_batch0: m.rates[0],
                control: Some(ControlRow {
                    psi: d.psi,
                    u: d.u,
                    cooldown_left: d.cooldown_left,
                    consecutive_over: d.consecutive_over,
                    z: sample.z,
                    epsilon: sample.threshold,
                    delta,
                }),
                train_loss: m.train_loss,
                val_loss: m.val_loss,
                val_acc: m.val_acc,
                test_acc: m.test_acc,
                wall_seconds: start.elapsed().as_secs_f64(),
                rates: m.rates,
            });
        }
    } else {
        let mut source: Box<dyn RateSource> = policy.rate_source(spec.eta_star)?;
        for _ in 0..cfg.epochs {
            let m = trainer.train_epoch(source.as_mut())?;
            rows.push(EpochRow {
                epoch: m.epoch,
                eta_batch0: m.rates[0],
                control: None,
                train_loss: m.train_loss,
                val_loss: m.val_loss,
                val_acc: m.val_acc,
                test_acc: m.test_acc,
                wall_seconds: start.elapsed().as_secs_f64(),
                rates: m.rates,
            });
        }
    }
    Ok(RunLog { meta, rows })
}

/// Run every cell on up to `threads` workers. Output order matches [`plan`].
pub fn run_matrix(cfg: &ExperimentConfig, threads: usize) -> Result<Vec<RunLog>> {
    cfg.validate()?;
    let specs = plan(cfg)?;
    let data = prepare_data(cfg)?;
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<RunLog>>>> = Mutex::new((0..specs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.clamp(1, specs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= specs.len() {
                    break;
                }
                let r = run_single(cfg, &data, &specs[i]);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    results.into_inner().unwrap().into_iter().map(|r| r.expect("every cell ran")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub eta_star: f64,
    pub seeds: usize,
    pub final_train_loss: f64,
    pub max_val_acc: f64,
    pub test_acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestChoice {
    pub method: String,
    pub best_eta_star: f64,
    pub worst_eta_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RedRow {
    pub method: String,
    pub baseline: String,
    pub eta_star: f64,
    pub baseline_eta_star: f64,
    /// `None` when no seed had a nonzero controller error.
    pub result: Option<RedResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub method: String,
    pub choice: &'static str,
    pub eta_star: f64,
    pub epoch: usize,
    pub val_acc: f64,
    pub train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub version: u32,
    pub config_hash: String,
    pub rows: Vec<SummaryRow>,
    pub best: Vec<BestChoice>,
    pub red: Vec<RedRow>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

/// Runs grouped by method then rate, both in first-seen order.
fn group(runs: &[RunLog]) -> Vec<(String, Vec<(f64, Vec<&RunLog>)>)> {
    let mut out: Vec<(String, Vec<(f64, Vec<&RunLog>)>)> = Vec::new();
    for r in runs {
        let mi = match out.iter().position(|(m, _)| *m == r.meta.method) {
            Some(i) => i,
            None => {
                out.push((r.meta.method.clone(), Vec::new()));
                out.len() - 1
            }
        };
        let rates = &mut out[mi].1;
        match rates.iter_mut().find(|(e, _)| *e == r.meta.eta_star) {
            Some((_, v)) => v.push(r),
            None => rates.push((r.meta.eta_star, vec![r])),
        }
    }
    out
}

/// Per-method and per-rate means, best/worst rate by mean max validation accuracy, and RED tables.
pub fn summarize(cfg: &ExperimentConfig, runs: &[RunLog]) -> Result<(Summary, Vec<CurvePoint>)> {
    let grouped = group(runs);
    let mut rows = Vec::new();
    let mut best = Vec::new();
    let mut curves = Vec::new();
    let mut best_runs: BTreeMap<String, (f64, Vec<&RunLog>)> = BTreeMap::new();
    for (method, rates) in &grouped {
        let mut scored = Vec::new();
        for (eta, logs) in rates {
            let max_val = mean(logs.iter().map(|l| l.max_val_acc()));
            rows.push(SummaryRow {
                method: method.clone(),
                eta_star: *eta,
                seeds: logs.len(),
                final_train_loss: mean(logs.iter().map(|l| l.final_train_loss())),
                max_val_acc: max_val,
                test_acc: mean(logs.iter().map(|l| l.test_acc_at_best())),
            });
            scored.push((max_val, *eta, logs));
        }
        // strict comparisons keep the first-listed rate on ties
        let (mut hi, mut lo) = (0, 0);
        for (i, s) in scored.iter().enumerate() {
            if s.0 > scored[hi].0 {
                hi = i;
            }
            if s.0 < scored[lo].0 {
                lo = i;
            }
        }
        best.push(BestChoice { method: method.clone(), best_eta_star: scored[hi].1, worst_eta_star: scored[lo].1 });
        for (choice, idx) in [("best", hi), ("worst", lo)] {
            let logs = scored[idx].2;
            let epochs = logs.iter().map(|l| l.rows.len()).min().unwrap_or(0);
            for e in 0..epochs {
                curves.push(CurvePoint {
                    method: method.clone(),
                    choice,
                    eta_star: scored[idx].1,
                    epoch: e + 1,
                    val_acc: mean(logs.iter().map(|l| l.rows[e].val_acc)),
                    train_loss: mean(logs.iter().map(|l| l.rows[e].train_loss)),
                });
            }
        }
        best_runs.insert(method.clone(), (scored[hi].1, scored[hi].2.clone()));
    }

    let mut red_rows = Vec::new();
    let controlled: Vec<&String> = grouped.iter().map(|(m, _)| m).filter(|m| m.starts_with("cg_alr")).collect();
    let baselines: Vec<&String> = grouped.iter().map(|(m, _)| m).filter(|m| !m.starts_with("cg_alr")).collect();
    for m in &controlled {
        let (eta, logs) = &best_runs[*m];
        for b in &baselines {
            let (b_eta, b_logs) = &best_runs[*b];
            let mut values = Vec::new();
            for l in logs {
                let Some(bl) = b_logs.iter().find(|x| x.meta.seed == l.meta.seed) else { continue };
                match red(1.0 - bl.test_acc_at_best(), 1.0 - l.test_acc_at_best()) {
                    Ok(v) => values.push(v),
                    Err(Error::UndefinedRatio(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            let result = if values.is_empty() {
                None
            } else {
                Some(bootstrap_median_ci(&values, cfg.bootstrap_resamples, 0.95, cfg.bootstrap_seed)?)
            };
            red_rows.push(RedRow {
                method: (*m).clone(),
                baseline: (*b).clone(),
                eta_star: *eta,
                baseline_eta_star: *b_eta,
                result,
            });
        }
    }
    let summary = Summary { version: RUNLOG_VERSION, config_hash: cfg.hash(), rows, best, red: red_rows };
    Ok((summary, curves))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path)?))
}

pub fn write_run_log(log: &RunLog, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut f = create(&dir.join(format!("{}.csv", log.file_stem())))?;
    log.write_csv(&mut f)?;
    f.flush()?;
    Ok(())
}

/// Write `config.txt`, `runs/*.csv`, `summary.{csv,json}`, `curves.csv`, `red.csv` and `timings.csv`.
///
/// Everything except `timings.csv` is a pure function of the configuration.
pub fn write_outputs(cfg: &ExperimentConfig, runs: &[RunLog], summary: &Summary, curves: &[CurvePoint], out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join("config.txt"), cfg.to_text())?;
    for r in runs {
        write_run_log(r, &out.join("runs"))?;
    }

    let mut f = create(&out.join("summary.csv"))?;
    writeln!(f, "# cgalr-summary v{} config_hash={}", summary.version, summary.config_hash)?;
    writeln!(f, "method,eta_star,seeds,final_train_loss,max_val_acc,test_acc,best")?;
    for r in &summary.rows {
        let b = summary.best.iter().find(|b| b.method == r.method).expect("every method has a choice");
        let tag = if b.best_eta_star == r.eta_star { "best" } else if b.worst_eta_star == r.eta_star { "worst" } else { "" };
        writeln!(f, "{},{},{},{},{},{},{}", r.method, r.eta_star, r.seeds, r.final_train_loss, r.max_val_acc, r.test_acc, tag)?;
    }
    f.flush()?;

    let mut f = create(&out.join("curves.csv"))?;
    writeln!(f, "# cgalr-curves v{}", summary.version)?;
    writeln!(f, "method,choice,eta_star,epoch,val_acc,train_loss")?;
    for c in curves {
        writeln!(f, "{},{},{},{},{},{}", c.method, c.choice, c.eta_star, c.epoch, c.val_acc, c.train_loss)?;
    }
    f.flush()?;

    let mut f = create(&out.join("red.csv"))?;
    writeln!(f, "# cgalr-red v{}", summary.version)?;
    writeln!(f, "method,baseline,eta_star,baseline_eta_star,median_red,ci_low,ci_high,n_seeds,resamples")?;
    for r in &summary.red {
        let stats = match r.result {
            Some(s) => format!("{},{},{},{},{}", s.median_red, s.ci_low, s.ci_high, s.n_seeds, s.resamples),
            None => "NA,NA,NA,0,0".to_string(),
        };
        writeln!(f, "{},{},{},{},{}", r.method, r.baseline, r.eta_star, r.baseline_eta_star, stats)?;
    }
    f.flush()?;

    let json = serde_json::to_string_pretty(summary).map_err(|e| Error::data(e.to_string()))?;
    fs::write(out.join("summary.json"), json + "\n")?;

    let mut f = create(&out.join("timings.csv"))?;
    writeln!(f, "run,total_seconds,seconds_to_max_val_acc")?;
    for r in runs {
        let total = r.rows.last().map_or(0.0, |x| x.wall_seconds);
        writeln!(f, "{},{},{}", r.file_stem(), total, r.time_to_best())?;
    }
    f.flush()?;
    Ok(())
}

pub struct ExperimentOutput {
    pub runs: Vec<RunLog>,
    pub summary: Summary,
    pub curves: Vec<CurvePoint>,
}

/// Validate, run the matrix, summarize, and write results under `out` when given.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutput> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let runs = run_matrix(cfg, threads)?;
    let (summary, curves) = summarize(cfg, &runs)?;
    if let Some(dir) = out {
        write_outputs(cfg, &runs, &summary, &curves, dir)?;
    }
    Ok(ExperimentOutput { runs, summary, curves })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke() -> ExperimentConfig {
        let mut c = ExperimentConfig::image();
        c.apply_text("epochs = 3\nK_warm = 2\nschedule = cg_alr\nseeds = 0\neta_star = 0.01\nsamples = 120\nhidden = 8,8\nprobe_P = 40\n")
            .unwrap();
        c
    }

    #[test]
    fn smoke_run_shape() {
        let out = run_experiment(&smoke(), None).unwrap();
        assert_eq!(out.runs.len(), 1);
        assert_eq!(out.runs[0].rows.len(), 3);
        let psi: Vec<f64> = out.runs[0].rows.iter().map(|r| r.control.unwrap().psi).collect();
        assert_eq!(&psi[..2], &[1.0, 1.0]);
        assert_eq!(out.runs[0].rows[0].control.unwrap().delta, 0.0);
    }

    #[test]
    fn plan_order_and_methods() {
        let mut c = smoke();
        c.apply_text("schedule = cg_alr,constant\ndistance = top,wd\nseeds = 0,1\neta_star = 0.1,0.01\n").unwrap();
        let p = plan(&c).unwrap();
        assert_eq!(p.len(), 12);
        assert_eq!(p[0].method(), "cg_alr-top");
        assert_eq!(p[4].method(), "cg_alr-wd");
        assert_eq!(p[11].method(), "constant");
    }

    #[test]
    fn invalid_config_stops_before_running() {
        let mut c = smoke();
        c.eta_stars = vec![-1.0];
        c.seeds.clear();
        match run_matrix(&c, 1) {
            Err(Error::Config(list)) => assert_eq!(list.len(), 2, "{list:?}"),
            other => panic!("unexpected {:?}", other.map(|r| r.len())),
        }
    }
}
