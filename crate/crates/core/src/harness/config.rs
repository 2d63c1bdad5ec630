//! Flat `key = value` experiment configuration with two built-in presets.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::metrics::DistanceKind;
use crate::schedules::SchedulePolicy;
use crate::signal::{SignalConfig, Window};
use crate::trainer::{self, Dataset, MlpSpec};

/// Synthetic generator or CSV file.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    TwoMoons,
    Rings,
    Blobs,
    Csv(PathBuf),
}

impl FromStr for DatasetSource {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "two_moons" | "moons" => Ok(DatasetSource::TwoMoons),
            "rings" => Ok(DatasetSource::Rings),
            "blobs" => Ok(DatasetSource::Blobs),
            _ => match s.strip_prefix("csv:") {
                Some(path) if !path.is_empty() => Ok(DatasetSource::Csv(PathBuf::from(path))),
                _ => Err(format!("unknown dataset '{s}' (two_moons, rings, blobs or csv:PATH)")),
            },
        }
    }
}

impl std::fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetSource::TwoMoons => f.write_str("two_moons"),
            DatasetSource::Rings => f.write_str("rings"),
            DatasetSource::Blobs => f.write_str("blobs"),
            DatasetSource::Csv(p) => write!(f, "csv:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Image,
    Graph,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "image" => Ok(Preset::Image),
            "graph" => Ok(Preset::Graph),
            other => Err(Error::arg(format!("unknown preset '{other}' (image or graph)"))),
        }
    }
}

/// Every knob of an experiment matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub t0: f64,
    pub alpha: f64,
    pub gamma_up: f64,
    pub gamma_down: f64,
    pub gamma_late: f64,
    pub cooldown: usize,
    pub n_trigger: usize,
    pub n_ratio: f64,
    pub probe_p: usize,
    pub psi_min: f64,
    pub psi_max: f64,
    pub beta: f64,
    pub tau: f64,
    /// `None` means the whole history.
    pub robust_w: Option<usize>,
    pub mad_k: f64,
    pub k_warm: usize,
    pub epochs: usize,
    pub exp_gamma: f64,
    pub weight_decay: f64,
    pub momentum: f64,

    pub schedules: Vec<String>,
    pub distances: Vec<String>,
    pub dataset: DatasetSource,
    pub seeds: Vec<u64>,
    pub eta_stars: Vec<f64>,
    pub samples: usize,
    pub noise: f64,
    pub classes: usize,
    pub data_seed: u64,
    pub hidden: Vec<usize>,
    /// Hidden layer index; `None` taps the last hidden layer.
    pub tap_layer: Option<usize>,
    pub batch_size: usize,
    pub step_period: usize,
    pub step_factor: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub plateau_threshold: f64,
    pub dog_r_epsilon: f64,
    pub dog_epsilon: f64,
    pub wd_p: f64,
    pub hk_sigma: f64,
    pub swk_directions: usize,
    pub swk_p: f64,
    pub swk_tau: f64,
    pub bootstrap_resamples: usize,
    pub bootstrap_seed: u64,
}

pub const ALL_SCHEDULES: [&str; 7] = ["cg_alr", "constant", "cosine", "step", "exp", "plateau", "dog"];

impl ExperimentConfig {
    fn with_artifact_defaults(base: ControllerConfig, signal: (f64, f64, usize, f64), epochs: usize) -> Self {
        let (beta, tau, robust_w, mad_k) = signal;
        Self {
            t0: base.t0,
            alpha: base.alpha,
            gamma_up: base.gamma_up,
            gamma_down: base.gamma_down,
            gamma_late: base.gamma_late,
            cooldown: base.cooldown,
            n_trigger: base.n_trigger,
            n_ratio: base.n_late_ratio,
            probe_p: 1024,
            psi_min: base.psi_min,
            psi_max: base.psi_max,
            beta,
            tau,
            robust_w: Some(robust_w),
            mad_k,
            k_warm: base.k_warm,
            epochs,
            exp_gamma: 0.97,
            weight_decay: 5e-4,
            momentum: 0.9,
            schedules: ALL_SCHEDULES.iter().map(|s| s.to_string()).collect(),
            distances: vec!["top".into()],
            dataset: DatasetSource::TwoMoons,
            seeds: vec![0, 1, 2],
            eta_stars: vec![0.1, 0.01, 0.001],
            samples: 600,
            noise: 0.2,
            classes: 3,
            data_seed: 0,
            hidden: vec![32, 32],
            tap_layer: None,
            batch_size: 32,
            step_period: crate::schedules::DEFAULT_STEP_PERIOD,
            step_factor: crate::schedules::DEFAULT_STEP_FACTOR,
            plateau_patience: crate::schedules::DEFAULT_PLATEAU_PATIENCE,
            plateau_factor: crate::schedules::DEFAULT_PLATEAU_FACTOR,
            plateau_threshold: crate::schedules::DEFAULT_PLATEAU_THRESHOLD,
            dog_r_epsilon: crate::schedules::DEFAULT_DOG_R_EPSILON,
            dog_epsilon: crate::schedules::DEFAULT_DOG_EPSILON,
            wd_p: crate::metrics::DEFAULT_WD_ORDER,
            hk_sigma: crate::metrics::DEFAULT_HK_SIGMA,
            swk_directions: crate::metrics::DEFAULT_SWK_DIRECTIONS,
            swk_p: crate::metrics::DEFAULT_SWK_ORDER,
            swk_tau: crate::metrics::DEFAULT_SWK_SCALE,
            bootstrap_resamples: 1000,
            bootstrap_seed: 0,
        }
    }

    /// Image-regime hyperparameters.
    pub fn image() -> Self {
        Self::with_artifact_defaults(ControllerConfig::image_preset(0.01, 1), (0.96, 0.002, 13, 3.6), 50)
    }

    /// Graph-regime hyperparameters (500 epochs).
    pub fn graph() -> Self {
        let base = ControllerConfig {
            eta_star: 0.01,
            t0: 1300.0,
            alpha: 0.56,
            gamma_down: 0.84,
            gamma_up: 1.08,
            gamma_late: 0.96,
            psi_min: 0.60,
            psi_max: 1.8,
            k_warm: 16,
            n_trigger: 4,
            cooldown: 4,
            n_late_ratio: 0.80,
            epochs: 500,
            batches_per_epoch: 1,
        };
        Self::with_artifact_defaults(base, (0.95, 0.002, 16, 3.2), 500)
    }

    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Image => Self::image(),
            Preset::Graph => Self::graph(),
        }
    }

    /// Apply `key = value` lines on top of `self`. All problems are reported together.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut problems = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => {
                    if let Err(e) = self.set(k.trim(), v.trim()) {
                        problems.push(format!("line {}: {e}", lineno + 1));
                    }
                }
                None => problems.push(format!("line {}: expected key = value, got '{line}'", lineno + 1)),
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse '{v}'"))
        }
        fn list<T: FromStr>(key: &str, v: &str) -> std::result::Result<Vec<T>, String> {
            v.split(',').map(|x| num(key, x.trim())).collect()
        }
        match key {
            "t0" => self.t0 = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "gamma_up" => self.gamma_up = num(key, value)?,
            "gamma_down" => self.gamma_down = num(key, value)?,
            "gamma_late" => self.gamma_late = num(key, value)?,
            "cooldown" => self.cooldown = num(key, value)?,
            "n_trigger" => self.n_trigger = num(key, value)?,
            "N_ratio" => self.n_ratio = num(key, value)?,
            "probe_P" => self.probe_p = num(key, value)?,
            "psi_min" => self.psi_min = num(key, value)?,
            "psi_max" => self.psi_max = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "tau" => self.tau = num(key, value)?,
            "robust_w" => self.robust_w = if value == "all" { None } else { Some(num(key, value)?) },
            "mad_k" => self.mad_k = num(key, value)?,
            "K_warm" => self.k_warm = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "exp_gamma" => self.exp_gamma = num(key, value)?,
            "weight_decay" => self.weight_decay = num(key, value)?,
            "momentum" => self.momentum = num(key, value)?,
            "schedule" => {
                self.schedules = if value == "all" {
                    ALL_SCHEDULES.iter().map(|s| s.to_string()).collect()
                } else {
                    value.split(',').map(|s| s.trim().to_string()).collect()
                }
            }
            "distance" => self.distances = value.split(',').map(|s| s.trim().to_string()).collect(),
            "dataset" => self.dataset = value.parse()?,
            "seeds" => self.seeds = list(key, value)?,
            "eta_star" => self.eta_stars = list(key, value)?,
            "samples" => self.samples = num(key, value)?,
            "noise" => self.noise = num(key, value)?,
            "classes" => self.classes = num(key, value)?,
            "data_seed" => self.data_seed = num(key, value)?,
            "hidden" => self.hidden = list(key, value)?,
            "tap_layer" => self.tap_layer = if value == "last" { None } else { Some(num(key, value)?) },
            "batch_size" => self.batch_size = num(key, value)?,
            "step_period" => self.step_period = num(key, value)?,
            "step_factor" => self.step_factor = num(key, value)?,
            "plateau_patience" => self.plateau_patience = num(key, value)?,
            "plateau_factor" => self.plateau_factor = num(key, value)?,
            "plateau_threshold" => self.plateau_threshold = num(key, value)?,
            "dog_r_epsilon" => self.dog_r_epsilon = num(key, value)?,
            "dog_epsilon" => self.dog_epsilon = num(key, value)?,
            "wd_p" => self.wd_p = num(key, value)?,
            "hk_sigma" => self.hk_sigma = num(key, value)?,
            "swk_directions" => self.swk_directions = num(key, value)?,
            "swk_p" => self.swk_p = num(key, value)?,
            "swk_tau" => self.swk_tau = num(key, value)?,
            "bootstrap_resamples" => self.bootstrap_resamples = num(key, value)?,
            "bootstrap_seed" => self.bootstrap_seed = num(key, value)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Canonical text form: every key in a fixed order. Feeding it back reproduces `self`.
    pub fn to_text(&self) -> String {
        fn join<T: std::fmt::Display>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let mut s = String::new();
        let mut put = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        put("t0", self.t0.to_string());
        put("alpha", self.alpha.to_string());
        put("gamma_up", self.gamma_up.to_string());
        put("gamma_down", self.gamma_down.to_string());
        put("gamma_late", self.gamma_late.to_string());
        put("cooldown", self.cooldown.to_string());
        put("n_trigger", self.n_trigger.to_string());
        put("N_ratio", self.n_ratio.to_string());
        put("probe_P", self.probe_p.to_string());
        put("psi_min", self.psi_min.to_string());
        put("psi_max", self.psi_max.to_string());
        put("beta", self.beta.to_string());
        put("tau", self.tau.to_string());
        put("robust_w", self.robust_w.map_or("all".into(), |w| w.to_string()));
        put("mad_k", self.mad_k.to_string());
        put("K_warm", self.k_warm.to_string());
        put("epochs", self.epochs.to_string());
        put("exp_gamma", self.exp_gamma.to_string());
        put("weight_decay", self.weight_decay.to_string());
        put("momentum", self.momentum.to_string());
        put("schedule", self.schedules.join(","));
        put("distance", self.distances.join(","));
        put("dataset", self.dataset.to_string());
        put("seeds", join(&self.seeds));
        put("eta_star", join(&self.eta_stars));
        put("samples", self.samples.to_string());
        put("noise", self.noise.to_string());
        put("classes", self.classes.to_string());
        put("data_seed", self.data_seed.to_string());
        put("hidden", join(&self.hidden));
        put("tap_layer", self.tap_layer.map_or("last".into(), |t| t.to_string()));
        put("batch_size", self.batch_size.to_string());
        put("step_period", self.step_period.to_string());
        put("step_factor", self.step_factor.to_string());
        put("plateau_patience", self.plateau_patience.to_string());
        put("plateau_factor", self.plateau_factor.to_string());
        put("plateau_threshold", self.plateau_threshold.to_string());
        put("dog_r_epsilon", self.dog_r_epsilon.to_string());
        put("dog_epsilon", self.dog_epsilon.to_string());
        put("wd_p", self.wd_p.to_string());
        put("hk_sigma", self.hk_sigma.to_string());
        put("swk_directions", self.swk_directions.to_string());
        put("swk_p", self.swk_p.to_string());
        put("swk_tau", self.swk_tau.to_string());
        put("bootstrap_resamples", self.bootstrap_resamples.to_string());
        put("bootstrap_seed", self.bootstrap_seed.to_string());
        s
    }

    /// SHA-256 of the canonical text, lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes()).iter().fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }

    pub fn signal_config(&self) -> SignalConfig {
        SignalConfig {
            lambda: self.beta,
            tau: self.tau,
            window: self.robust_w.map_or(Window::Unbounded, Window::Last),
            k_mad: self.mad_k,
        }
    }

    pub fn controller_config(&self, eta_star: f64, batches_per_epoch: usize) -> ControllerConfig {
        ControllerConfig {
            eta_star,
            t0: self.t0,
            alpha: self.alpha,
            gamma_down: self.gamma_down,
            gamma_up: self.gamma_up,
            gamma_late: self.gamma_late,
            psi_min: self.psi_min,
            psi_max: self.psi_max,
            k_warm: self.k_warm,
            n_trigger: self.n_trigger,
            cooldown: self.cooldown,
            n_late_ratio: self.n_ratio,
            epochs: self.epochs,
            batches_per_epoch,
        }
    }

    /// Baseline or controller policy for a schedule tag, with this config's parameters.
    pub fn policy(&self, tag: &str) -> Result<SchedulePolicy> {
        Ok(match SchedulePolicy::from_tag(tag, self.epochs)? {
            SchedulePolicy::Step { .. } => SchedulePolicy::Step { period: self.step_period, factor: self.step_factor },
            SchedulePolicy::Exp { .. } => SchedulePolicy::Exp { gamma: self.exp_gamma },
            SchedulePolicy::Plateau { .. } => SchedulePolicy::Plateau {
                patience: self.plateau_patience,
                factor: self.plateau_factor,
                threshold: self.plateau_threshold,
            },
            SchedulePolicy::Dog { .. } => SchedulePolicy::Dog { r_epsilon: self.dog_r_epsilon, epsilon: self.dog_epsilon },
            p => p,
        })
    }

    pub fn distance(&self, tag: &str) -> Result<DistanceKind> {
        let kind = match tag.parse::<DistanceKind>()? {
            DistanceKind::Wasserstein { .. } => DistanceKind::Wasserstein { p: self.wd_p },
            DistanceKind::Heat { .. } => DistanceKind::Heat { sigma: self.hk_sigma },
            DistanceKind::SlicedWasserstein { .. } => {
                DistanceKind::SlicedWasserstein { directions: self.swk_directions, p: self.swk_p, tau: self.swk_tau }
            }
            k => k,
        };
        kind.validate()?;
        Ok(kind)
    }

    /// Network shape for a dataset with `n_features` inputs and `n_classes` outputs.
    pub fn mlp_spec(&self, n_features: usize, n_classes: usize) -> MlpSpec {
        let mut sizes = vec![n_features];
        sizes.extend(&self.hidden);
        sizes.push(n_classes);
        let mut spec = MlpSpec::new(sizes);
        if let Some(t) = self.tap_layer {
            spec.tap_layer = t;
        }
        spec
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        match &self.dataset {
            DatasetSource::TwoMoons => trainer::two_moons(self.samples, self.noise, self.data_seed),
            DatasetSource::Rings => trainer::rings(self.samples, self.noise, self.data_seed),
            DatasetSource::Blobs => trainer::blobs(self.samples, self.classes, self.noise.max(0.0), self.data_seed),
            DatasetSource::Csv(p) => trainer::data::load_csv(p),
        }
    }

    /// Every problem with the configuration, checked before anything runs.
    pub fn validate(&self) -> Result<()> {
        let mut problems: Vec<String> = Vec::new();
        let ctrl = self.controller_config(0.01, 1);
        if let Err(e) = ctrl.validate() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.signal_config().validate() {
            problems.push(e.to_string());
        }
        if self.k_warm >= self.epochs {
            problems.push(format!("K_warm ({}) leaves no controlled epochs out of {}", self.k_warm, self.epochs));
        }
        if self.probe_p < 2 {
            problems.push("probe_P must be >= 2".into());
        }
        if !(0.0..1.0).contains(&self.momentum) {
            problems.push(format!("momentum must be in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay >= 0.0) {
            problems.push(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if self.batch_size == 0 {
            problems.push("batch_size must be >= 1".into());
        }
        if self.schedules.is_empty() {
            problems.push("schedule list is empty".into());
        }
        let mut has_cg = false;
        for tag in &self.schedules {
            match self.policy(tag) {
                Ok(SchedulePolicy::CgAlr) => has_cg = true,
                Ok(p) => {
                    if let Err(e) = p.validate() {
                        problems.push(e.to_string());
                    }
                }
                Err(e) => problems.push(e.to_string()),
            }
        }
        if has_cg && self.distances.is_empty() {
            problems.push("cg_alr needs at least one distance".into());
        }
        for tag in &self.distances {
            if let Err(e) = self.distance(tag) {
                problems.push(e.to_string());
            }
        }
        if self.seeds.is_empty() {
            problems.push("seed list is empty".into());
        }
        if self.eta_stars.is_empty() {
            problems.push("eta_star list is empty".into());
        }
        for &e in &self.eta_stars {
            if !(e > 0.0 && e.is_finite()) {
                problems.push(format!("eta_star values must be positive, got {e}"));
            }
        }
        let spec = self.mlp_spec(2, 2);
        if let Err(e) = spec.validate() {
            problems.push(e.to_string());
        }
        if self.bootstrap_resamples == 0 {
            problems.push("bootstrap_resamples must be >= 1".into());
        }
        if let DatasetSource::Csv(p) = &self.dataset {
            if !p.exists() {
                problems.push(format!("dataset file {} does not exist", p.display()));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }
}
