//! Baseline learning-rate policies and the per-batch rate interface shared with the controller.

use std::fmt;
use std::str::FromStr;

use crate::controller::Controller;
use crate::error::{Error, Result};

pub const DEFAULT_EXP_GAMMA: f64 = 0.97;
pub const DEFAULT_STEP_PERIOD: usize = 30;
pub const DEFAULT_STEP_FACTOR: f64 = 0.1;
pub const DEFAULT_PLATEAU_PATIENCE: usize = 10;
pub const DEFAULT_PLATEAU_FACTOR: f64 = 0.1;
pub const DEFAULT_PLATEAU_THRESHOLD: f64 = 1e-4;
pub const DEFAULT_DOG_R_EPSILON: f64 = 1e-6;
pub const DEFAULT_DOG_EPSILON: f64 = 1e-8;

/// A learning-rate policy with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchedulePolicy {
    Constant,
    /// Half-period cosine without restarts.
    Cosine { t_max: usize },
    Step { period: usize, factor: f64 },
    Exp { gamma: f64 },
    /// Multiply by `factor` once validation loss has failed to improve by a
    /// relative `threshold` for `patience` epochs.
    Plateau { patience: usize, factor: f64, threshold: f64 },
    Dog { r_epsilon: f64, epsilon: f64 },
    CgAlr,
}

impl SchedulePolicy {
    /// Parse a tag, filling parameters with defaults (`t_max` from `epochs`).
    pub fn from_tag(tag: &str, epochs: usize) -> Result<Self> {
        Ok(match tag.to_ascii_lowercase().replace('-', "_").as_str() {
            "constant" => SchedulePolicy::Constant,
            "cosine" => SchedulePolicy::Cosine { t_max: epochs },
            "step" => SchedulePolicy::Step { period: DEFAULT_STEP_PERIOD, factor: DEFAULT_STEP_FACTOR },
            "exp" => SchedulePolicy::Exp { gamma: DEFAULT_EXP_GAMMA },
            "plateau" => SchedulePolicy::Plateau {
                patience: DEFAULT_PLATEAU_PATIENCE,
                factor: DEFAULT_PLATEAU_FACTOR,
                threshold: DEFAULT_PLATEAU_THRESHOLD,
            },
            "dog" => SchedulePolicy::Dog { r_epsilon: DEFAULT_DOG_R_EPSILON, epsilon: DEFAULT_DOG_EPSILON },
            "cg_alr" | "cgalr" => SchedulePolicy::CgAlr,
            other => return Err(Error::arg(format!("unknown schedule '{other}'"))),
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SchedulePolicy::Constant => "constant",
            SchedulePolicy::Cosine { .. } => "cosine",
            SchedulePolicy::Step { .. } => "step",
            SchedulePolicy::Exp { .. } => "exp",
            SchedulePolicy::Plateau { .. } => "plateau",
            SchedulePolicy::Dog { .. } => "dog",
            SchedulePolicy::CgAlr => "cg_alr",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match *self {
            SchedulePolicy::Cosine { t_max } if t_max == 0 => bad("cosine T_max must be >= 1".into()),
            SchedulePolicy::Step { period, factor } if period == 0 || !(factor > 0.0) => {
                bad(format!("step needs period >= 1 and factor > 0, got {period}, {factor}"))
            }
            SchedulePolicy::Exp { gamma } if !(gamma > 0.0) => bad(format!("exp gamma must be > 0, got {gamma}")),
            SchedulePolicy::Plateau { patience, factor, threshold }
                if patience == 0 || !(factor > 0.0 && factor <= 1.0) || !(threshold >= 0.0) =>
            {
                bad(format!("plateau needs patience >= 1, factor in (0, 1], threshold >= 0; got {patience}, {factor}, {threshold}"))
            }
            SchedulePolicy::Dog { r_epsilon, epsilon } if !(r_epsilon > 0.0) || !(epsilon >= 0.0) => {
                bad(format!("dog needs r_epsilon > 0 and epsilon >= 0; got {r_epsilon}, {epsilon}"))
            }
            _ => Ok(()),
        }
    }

    /// Build the stateful per-batch source for a baseline policy.
    ///
    /// `CgAlr` is not built here: its controller needs the full run configuration.
    pub fn rate_source(&self, eta_star: f64) -> Result<Box<dyn RateSource>> {
        self.validate()?;
        if !(eta_star > 0.0 && eta_star.is_finite()) {
            return Err(Error::arg(format!("eta_star must be positive, got {eta_star}")));
        }
        Ok(match *self {
            SchedulePolicy::Plateau { patience, factor, threshold } => {
                Box::new(Plateau::new(eta_star, patience, factor, threshold))
            }
            SchedulePolicy::Dog { r_epsilon, epsilon } => Box::new(Dog::new(r_epsilon, epsilon)),
            SchedulePolicy::CgAlr => {
                return Err(Error::arg("cg_alr rates come from a Controller, not a fixed schedule"));
            }
            policy => Box::new(EpochSchedule { policy, eta_star }),
        })
    }
}

impl fmt::Display for SchedulePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for SchedulePolicy {
    type Err = Error;

    /// Cosine gets a placeholder `t_max` of 1; use [`SchedulePolicy::from_tag`] when epochs are known.
    fn from_str(s: &str) -> Result<Self> {
        Self::from_tag(s, 1)
    }
}

/// Rate for the closed-form policies at 0-based `epoch`.
pub fn schedule_rate(policy: &SchedulePolicy, eta_star: f64, epoch: usize) -> Result<f64> {
    policy.validate()?;
    let e = epoch as f64;
    match *policy {
        SchedulePolicy::Constant => Ok(eta_star),
        SchedulePolicy::Cosine { t_max } => {
            let t = e.min(t_max as f64);
            Ok(eta_star * (1.0 + (std::f64::consts::PI * t / t_max as f64).cos()) / 2.0)
        }
        SchedulePolicy::Step { period, factor } => Ok(eta_star * factor.powi((epoch / period) as i32)),
        SchedulePolicy::Exp { gamma } => Ok(eta_star * gamma.powf(e)),
        other => Err(Error::arg(format!("{other} has no closed-form epoch rate"))),
    }
}

/// What a rate source may look at when asked for the next batch's rate.
///
/// Queried after the batch gradient is computed and before the update.
#[derive(Debug, Clone, Copy)]
pub struct RateContext<'a> {
    /// 0-based epoch index.
    pub epoch: usize,
    /// 0-based batch index within the epoch.
    pub batch: usize,
    /// Current flattened parameters.
    pub params: &'a [f64],
    /// Squared norm of the gradient about to be applied.
    pub grad_norm_sq: f64,
}

/// Per-batch learning-rate provider consumed by the trainer.
pub trait RateSource {
    fn rate(&mut self, ctx: &RateContext<'_>) -> f64;

    /// Epoch boundary hook with the epoch's validation loss.
    fn end_epoch(&mut self, _val_loss: f64) {}
}

/// Constant, cosine, step or exponential decay evaluated per epoch.
#[derive(Debug, Clone)]
pub struct EpochSchedule {
    policy: SchedulePolicy,
    eta_star: f64,
}

impl RateSource for EpochSchedule {
    fn rate(&mut self, ctx: &RateContext<'_>) -> f64 {
        schedule_rate(&self.policy, self.eta_star, ctx.epoch).expect("validated at construction")
    }
}

#[derive(Debug, Clone)]
pub struct Plateau {
    rate: f64,
    patience: usize,
    factor: f64,
    threshold: f64,
    best: f64,
    bad_epochs: usize,
}

impl Plateau {
    pub fn new(eta_star: f64, patience: usize, factor: f64, threshold: f64) -> Self {
        Self { rate: eta_star, patience, factor, threshold, best: f64::INFINITY, bad_epochs: 0 }
    }

    pub fn current(&self) -> f64 {
        self.rate
    }
}

impl RateSource for Plateau {
    fn rate(&mut self, _ctx: &RateContext<'_>) -> f64 {
        self.rate
    }

    fn end_epoch(&mut self, val_loss: f64) {
        if val_loss < self.best * (1.0 - self.threshold) {
            self.best = val_loss;
            self.bad_epochs = 0;
        } else {
            self.bad_epochs += 1;
            if self.bad_epochs >= self.patience {
                self.rate *= self.factor;
                self.bad_epochs = 0;
            }
        }
    }
}

/// Distance-over-gradients step size.
#[derive(Debug, Clone)]
pub struct Dog {
    r_epsilon: f64,
    epsilon: f64,
    x0: Option<Vec<f64>>,
    r_bar: f64,
    grad_sq_sum: f64,
}

impl Dog {
    pub fn new(r_epsilon: f64, epsilon: f64) -> Self {
        Self { r_epsilon, epsilon, x0: None, r_bar: 0.0, grad_sq_sum: 0.0 }
    }

    /// Running maximum distance from the initial point.
    pub fn r_bar(&self) -> f64 {
        self.r_bar
    }
}

impl RateSource for Dog {
    fn rate(&mut self, ctx: &RateContext<'_>) -> f64 {
        match &self.x0 {
            None => {
                let norm = ctx.params.iter().map(|x| x * x).sum::<f64>().sqrt();
                self.r_bar = self.r_epsilon * (1.0 + norm);
                self.x0 = Some(ctx.params.to_vec());
            }
            Some(x0) => {
                let dist = x0.iter().zip(ctx.params).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
                self.r_bar = self.r_bar.max(dist);
            }
        }
        self.grad_sq_sum += ctx.grad_norm_sq;
        self.r_bar / (self.grad_sq_sum + self.epsilon).sqrt()
    }
}

impl RateSource for Controller {
    fn rate(&mut self, _ctx: &RateContext<'_>) -> f64 {
        self.batch_rate()
    }
}
