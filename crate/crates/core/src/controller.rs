//! Connectome-guided learning-rate controller.
//!
//! The effective rate for a batch is `bar_eta(s) * psi`, where `bar_eta` is a
//! Robbins-Monro envelope decaying per batch and `psi` is a clipped multiplier
//! updated once per epoch from the topological signal.
//!
//! At the end of each epoch the multiplier update `u` is chosen, in priority order:
//!
//! 1. warm-up (`epoch <= k_warm`): `u = 1`;
//! 2. cooldown active: `u = 1`, one cooldown epoch consumed;
//! 3. `z > epsilon`: the over-threshold streak grows; once it reaches
//!    `n_trigger` the update is `gamma_down` and the streak resets, otherwise `u = 1`;
//! 4. `z <= epsilon`, `epoch <= N_late`: `u = gamma_up`;
//! 5. `z <= epsilon`, `epoch > N_late`: `u = gamma_late`.
//!
//! Any `u != 1` starts a cooldown. Warm-up and cooldown epochs leave the
//! streak untouched.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    pub eta_star: f64,
    pub t0: f64,
    pub alpha: f64,
    pub gamma_down: f64,
    pub gamma_up: f64,
    pub gamma_late: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    pub k_warm: usize,
    pub n_trigger: usize,
    pub cooldown: usize,
    pub n_late_ratio: f64,
    pub epochs: usize,
    pub batches_per_epoch: usize,
}

impl ControllerConfig {
    /// Image-regime constants (50 epochs); `eta_star` and `batches_per_epoch` are run-specific.
    pub fn image_preset(eta_star: f64, batches_per_epoch: usize) -> Self {
        Self {
            eta_star,
            t0: 1600.0,
            alpha: 0.52,
            gamma_down: 0.85,
            gamma_up: 1.20,
            gamma_late: 0.985,
            psi_min: 0.65,
            psi_max: 6.0,
            k_warm: 4,
            n_trigger: 6,
            cooldown: 4,
            n_late_ratio: 0.88,
            epochs: 50,
            batches_per_epoch,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.eta_star > 0.0 && self.eta_star.is_finite()) {
            problems.push(format!("eta_star must be positive, got {}", self.eta_star));
        }
        if !(self.t0 >= 1.0) {
            problems.push(format!("t0 must be >= 1, got {}", self.t0));
        }
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            problems.push(format!("alpha must be in (1/2, 1], got {}", self.alpha));
        }
        if !(self.gamma_down > 0.0 && self.gamma_down < 1.0) {
            problems.push(format!("gamma_down must be in (0, 1), got {}", self.gamma_down));
        }
        if !(self.gamma_up > 1.0) {
            problems.push(format!("gamma_up must be > 1, got {}", self.gamma_up));
        }
        if !(self.gamma_late > self.gamma_down && self.gamma_late < 1.0) {
            problems.push(format!("gamma_late must be in (gamma_down, 1), got {}", self.gamma_late));
        }
        if !(self.psi_min > 0.0 && self.psi_max >= self.psi_min && self.psi_max.is_finite()) {
            problems.push(format!("need 0 < psi_min <= psi_max, got [{}, {}]", self.psi_min, self.psi_max));
        }
        if !(1.0 >= self.psi_min && 1.0 <= self.psi_max) {
            problems.push("psi_0 = 1 must lie in [psi_min, psi_max]".to_string());
        }
        if self.n_trigger == 0 {
            problems.push("n_trigger must be >= 1".to_string());
        }
        if !(self.n_late_ratio > 0.0 && self.n_late_ratio <= 1.0) {
            problems.push(format!("late split ratio must be in (0, 1], got {}", self.n_late_ratio));
        }
        if self.epochs == 0 || self.batches_per_epoch == 0 {
            problems.push("epochs and batches per epoch must be >= 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    /// `eta_0 = eta_star * t0^alpha`, so that the envelope starts at `eta_star`.
    pub fn eta0(&self) -> f64 {
        self.eta_star * self.t0.powf(self.alpha)
    }

    /// Robbins-Monro envelope at global batch index `s`.
    pub fn envelope(&self, s: u64) -> f64 {
        self.eta0() / (s as f64 + self.t0).powf(self.alpha)
    }

    /// Last epoch of the pre-late phase, `floor(ratio * T)`.
    pub fn n_late(&self) -> usize {
        (self.n_late_ratio * self.epochs as f64).floor() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    pub psi: f64,
    /// Global batch counter.
    pub s: u64,
    /// Last epoch whose end has been processed (0 before the first).
    pub epoch: usize,
    pub consecutive_over: usize,
    pub cooldown_left: usize,
}

/// What happened at one epoch boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochDecision {
    pub epoch: usize,
    pub u: f64,
    pub psi: f64,
    pub cooldown_left: usize,
    pub consecutive_over: usize,
}

#[derive(Debug, Clone)]
pub struct Controller {
    config: ControllerConfig,
    eta0: f64,
    state: ControllerState,
}

impl Controller {
    pub fn new(config: ControllerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            eta0: config.eta0(),
            config,
            state: ControllerState { psi: 1.0, s: 0, epoch: 0, consecutive_over: 0, cooldown_left: 0 },
        })
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    /// Envelope value at the current batch counter, before any increment.
    pub fn current_envelope(&self) -> f64 {
        self.eta0 / (self.state.s as f64 + self.config.t0).powf(self.config.alpha)
    }

    /// Rate for the next batch; advances the batch counter.
    pub fn batch_rate(&mut self) -> f64 {
        let eta = self.current_envelope() * self.state.psi;
        self.state.s += 1;
        eta
    }

    /// Apply the epoch-level update for `epoch` (1-based, strictly sequential).
    pub fn end_of_epoch(&mut self, epoch: usize, z: f64, threshold: f64) -> Result<EpochDecision> {
        if epoch != self.state.epoch + 1 {
            return Err(Error::state(format!(
                "end_of_epoch({epoch}) after epoch {}; epochs must advance by one",
                self.state.epoch
            )));
        }
        if !z.is_finite() || !threshold.is_finite() {
            return Err(Error::arg(format!("non-finite signal z={z}, epsilon={threshold}")));
        }
        let c = &self.config;
        let st = &mut self.state;
        let u = if epoch <= c.k_warm {
            1.0
        } else if st.cooldown_left > 0 {
            st.cooldown_left -= 1;
            1.0
        } else if z > threshold {
            st.consecutive_over += 1;
            if st.consecutive_over >= c.n_trigger {
                st.consecutive_over = 0;
                c.gamma_down
            } else {
                1.0
            }
        } else {
            st.consecutive_over = 0;
            if epoch <= c.n_late() {
                c.gamma_up
            } else {
                c.gamma_late
            }
        };
        if u != 1.0 {
            st.cooldown_left = c.cooldown;
        }
        st.psi = (st.psi * u).clamp(c.psi_min, c.psi_max);
        st.epoch = epoch;
        Ok(EpochDecision {
            epoch,
            u,
            psi: st.psi,
            cooldown_left: st.cooldown_left,
            consecutive_over: st.consecutive_over,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn controller() -> Controller {
        Controller::new(ControllerConfig::image_preset(0.01, 10)).unwrap()
    }

    #[test]
    fn first_batch_is_eta_star() {
        let mut c = controller();
        assert!((c.batch_rate() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn batch_counter_advances_per_batch() {
        let mut c = controller();
        for _ in 0..10 {
            c.batch_rate();
        }
        assert_eq!(c.state().s, 10);
    }

    #[test]
    fn saturates_at_psi_max() {
        let mut cfg = ControllerConfig::image_preset(0.01, 10);
        cfg.psi_max = 1.0;
        cfg.k_warm = 0;
        cfg.cooldown = 0;
        let mut c = Controller::new(cfg).unwrap();
        let d = c.end_of_epoch(1, -1.0, 0.0).unwrap();
        assert_eq!(d.u, cfg.gamma_up);
        assert_eq!(d.psi, 1.0);
        let env = c.current_envelope();
        assert_eq!(c.batch_rate(), env * cfg.psi_max);
    }

    #[test]
    fn warm_up_holds_psi() {
        let mut c = controller();
        for epoch in 1..=4 {
            let d = c.end_of_epoch(epoch, -5.0, 0.0).unwrap();
            assert_eq!(d.u, 1.0);
            assert_eq!(d.psi, 1.0);
        }
        assert_eq!(c.end_of_epoch(5, -5.0, 0.0).unwrap().u, 1.2);
    }

    #[test]
    fn hysteresis_then_cooldown() {
        let mut c = controller();
        for e in 1..=4 {
            c.end_of_epoch(e, 0.0, 0.0).unwrap();
        }
        for e in 5..=9 {
            assert_eq!(c.end_of_epoch(e, 1.0, 0.0).unwrap().u, 1.0);
        }
        let d = c.end_of_epoch(10, 1.0, 0.0).unwrap();
        assert_eq!(d.u, 0.85);
        assert_eq!(d.cooldown_left, 4);
        for e in 11..=14 {
            assert_eq!(c.end_of_epoch(e, -1.0, 0.0).unwrap().u, 1.0);
        }
        assert_eq!(c.end_of_epoch(15, -1.0, 0.0).unwrap().u, 1.2);
    }

    #[test]
    fn late_phase_decays() {
        let mut cfg = ControllerConfig::image_preset(0.01, 10);
        cfg.cooldown = 0;
        let mut c = Controller::new(cfg).unwrap();
        let n_late = cfg.n_late();
        assert_eq!(n_late, 44);
        let mut last = None;
        for e in 1..=50 {
            last = Some(c.end_of_epoch(e, 0.0, 1.0).unwrap());
            if e == n_late {
                assert_eq!(last.unwrap().u, 1.2);
            }
        }
        assert_eq!(last.unwrap().u, 0.985);
    }

    #[test]
    fn rejects_repeated_or_skipped_epochs() {
        let mut c = controller();
        c.end_of_epoch(1, 0.0, 0.0).unwrap();
        assert!(matches!(c.end_of_epoch(1, 0.0, 0.0), Err(Error::InvalidState(_))));
        assert!(matches!(c.end_of_epoch(3, 0.0, 0.0), Err(Error::InvalidState(_))));
    }

    #[test]
    fn config_validation() {
        let mut cfg = ControllerConfig::image_preset(0.01, 10);
        cfg.alpha = 0.5;
        assert!(Controller::new(cfg).is_err());
        let mut cfg = ControllerConfig::image_preset(0.01, 10);
        cfg.gamma_late = 0.8;
        assert!(Controller::new(cfg).is_err());
    }
}
