//! A small MLP trainer with SGD, activation taps and pluggable rate sources.

pub mod data;
mod mlp;

pub use data::{blobs, rings, split, two_moons, Dataset, Split};
pub use mlp::{softmax, Gradients, Mlp, MlpSpec};

use ndarray::{Array1, Array2, Axis};

use crate::connectome::{ActivationMatrix, ProbeSet};
use crate::error::{Error, Result};
use crate::rng::{self, SeededRng};
use crate::schedules::{RateContext, RateSource};

/// SGD with heavy-ball momentum; L2 decay is added to the gradient of every parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub momentum: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::arg(format!("momentum must be in [0, 1), got {}", self.momentum)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::arg(format!("weight decay must be >= 0, got {}", self.weight_decay)));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch size must be >= 1"));
        }
        Ok(())
    }
}

/// Quantities measured after one epoch's updates.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    /// Full-pass training loss after the epoch.
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
    pub test_acc: f64,
    /// Every rate the source emitted this epoch, in batch order.
    pub rates: Vec<f64>,
}

/// Seed tags for the independent random streams of a run.
const INIT_STREAM: u64 = 1;
const ORDER_STREAM: u64 = 2;

pub struct Trainer {
    model: Mlp,
    sgd: SgdConfig,
    velocity_w: Vec<Array2<f64>>,
    velocity_b: Vec<Array1<f64>>,
    order_rng: SeededRng,
    data: Split,
    epoch: usize,
}

impl Trainer {
    /// Fresh He-initialized network; initialization and batch order derive from `sgd.seed`.
    pub fn new(spec: MlpSpec, sgd: SgdConfig, data: Split) -> Result<Self> {
        let model = Mlp::init(spec, rng::derive_seed(sgd.seed, INIT_STREAM))?;
        Self::with_model(model, sgd, data)
    }

    pub fn with_model(model: Mlp, sgd: SgdConfig, data: Split) -> Result<Self> {
        sgd.validate()?;
        let sizes = &model.spec().layer_sizes;
        for (name, part) in [("train", &data.train), ("validation", &data.val), ("test", &data.test)] {
            if part.n_features() != sizes[0] {
                return Err(Error::arg(format!("{name} data has {} features, network expects {}", part.n_features(), sizes[0])));
            }
            if part.n_classes > *sizes.last().unwrap() {
                return Err(Error::arg(format!("{name} data has {} classes, network outputs {}", part.n_classes, sizes.last().unwrap())));
            }
            if part.is_empty() {
                return Err(Error::arg(format!("{name} split is empty")));
            }
        }
        Ok(Self {
            velocity_w: model.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            velocity_b: model.biases.iter().map(|b| Array1::zeros(b.raw_dim())).collect(),
            order_rng: rng::seeded(rng::derive_seed(sgd.seed, ORDER_STREAM)),
            model,
            sgd,
            data,
            epoch: 0,
        })
    }

    pub fn model(&self) -> &Mlp {
        &self.model
    }

    pub fn data(&self) -> &Split {
        &self.data
    }

    /// Epochs completed so far.
    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One pass over the training split in a freshly shuffled order.
    pub fn train_epoch(&mut self, source: &mut dyn RateSource) -> Result<EpochMetrics> {
        let train = &self.data.train;
        let mut order: Vec<usize> = (0..train.len()).collect();
        rng::shuffle(&mut self.order_rng, &mut order);
        let mut rates = Vec::with_capacity(order.len().div_ceil(self.sgd.batch_size));
        for (batch, idx) in order.chunks(self.sgd.batch_size).enumerate() {
            let x = train.features.select(Axis(0), idx);
            let y: Vec<usize> = idx.iter().map(|&i| train.labels[i]).collect();
            let (_, mut g) = self.model.gradients(x.view(), &y)?;
            let wd = self.sgd.weight_decay;
            if wd > 0.0 {
                for (gw, w) in g.weights.iter_mut().zip(&self.model.weights) {
                    gw.scaled_add(wd, w);
                }
                for (gb, b) in g.biases.iter_mut().zip(&self.model.biases) {
                    gb.scaled_add(wd, b);
                }
            }
            let params = self.model.flat_params();
            let ctx = RateContext { epoch: self.epoch, batch, params: &params, grad_norm_sq: g.norm_sq() };
            let eta = source.rate(&ctx);
            if !(eta.is_finite() && eta >= 0.0) {
                return Err(Error::state(format!("rate source emitted {eta} at epoch {}, batch {batch}", self.epoch + 1)));
            }
            rates.push(eta);
            let mu = self.sgd.momentum;
            for ((v, gw), w) in self.velocity_w.iter_mut().zip(&g.weights).zip(&mut self.model.weights) {
                v.zip_mut_with(gw, |v, &g| *v = mu * *v + g);
                w.scaled_add(-eta, v);
            }
            for ((v, gb), b) in self.velocity_b.iter_mut().zip(&g.biases).zip(&mut self.model.biases) {
                v.zip_mut_with(gb, |v, &g| *v = mu * *v + g);
                b.scaled_add(-eta, v);
            }
        }
        self.epoch += 1;
        let (train_loss, _) = self.model.loss_and_accuracy(self.data.train.features.view(), &self.data.train.labels)?;
        let (val_loss, val_acc) = self.model.loss_and_accuracy(self.data.val.features.view(), &self.data.val.labels)?;
        let (_, test_acc) = self.model.loss_and_accuracy(self.data.test.features.view(), &self.data.test.labels)?;
        for (name, v) in [("train loss", train_loss), ("validation loss", val_loss)] {
            if !v.is_finite() {
                return Err(Error::state(format!("{name} became {v} at epoch {}", self.epoch)));
            }
        }
        source.end_epoch(val_loss);
        Ok(EpochMetrics { epoch: self.epoch, train_loss, val_loss, val_acc, test_acc, rates })
    }

    /// Probe activations from the training split at the model's tap layer.
    pub fn capture_activations(&self, probe: &ProbeSet) -> Result<ActivationMatrix> {
        capture_activations(&self.model, &self.data.train, probe, self.model.spec().tap_layer)
    }
}

/// Post-ReLU activations of `tap_layer` for the probe rows of `data`, one row per probe sample.
pub fn capture_activations(model: &Mlp, data: &Dataset, probe: &ProbeSet, tap_layer: usize) -> Result<ActivationMatrix> {
    if let Some(&bad) = probe.indices.iter().find(|&&i| i >= data.len()) {
        return Err(Error::arg(format!("probe index {bad} out of range for {} samples", data.len())));
    }
    let x = data.features.select(Axis(0), &probe.indices);
    let h = model.hidden_activations(x.view(), tap_layer)?;
    ActivationMatrix::new(h, probe.indices.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connectome::build_probe_set;
    use crate::schedules::SchedulePolicy;

    fn setup(seed: u64) -> Trainer {
        let data = split(&blobs(200, 2, 0.5, 7).unwrap(), 1).unwrap();
        let sgd = SgdConfig { momentum: 0.9, weight_decay: 5e-4, batch_size: 16, seed };
        Trainer::new(MlpSpec::new(vec![2, 16, 8, 2]), sgd, data).unwrap()
    }

    struct Zero;
    impl RateSource for Zero {
        fn rate(&mut self, _: &RateContext<'_>) -> f64 {
            0.0
        }
    }

    #[test]
    fn zero_rate_leaves_parameters() {
        let mut t = setup(0);
        let before = t.model().flat_params();
        let first = t.train_epoch(&mut Zero).unwrap();
        let second = t.train_epoch(&mut Zero).unwrap();
        assert_eq!(t.model().flat_params(), before);
        assert_eq!(first.train_loss, second.train_loss);
    }

    #[test]
    fn blobs_loss_decreases_early() {
        let mut t = setup(3);
        let mut src = SchedulePolicy::Constant.rate_source(0.01).unwrap();
        let losses: Vec<f64> = (0..5).map(|_| t.train_epoch(src.as_mut()).unwrap().train_loss).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn identical_seeds_identical_trajectories() {
        let (mut a, mut b) = (setup(11), setup(11));
        let mut sa = SchedulePolicy::Constant.rate_source(0.05).unwrap();
        let mut sb = SchedulePolicy::Constant.rate_source(0.05).unwrap();
        for _ in 0..3 {
            a.train_epoch(sa.as_mut()).unwrap();
            b.train_epoch(sb.as_mut()).unwrap();
        }
        assert_eq!(a.model().flat_params(), b.model().flat_params());
    }

    #[test]
    fn activation_capture_shape_and_repeatability() {
        let t = setup(0);
        let probe = build_probe_set(&t.data().train.labels, 40, 0).unwrap();
        let a = t.capture_activations(&probe).unwrap();
        assert_eq!((a.n_samples(), a.n_signals()), (40, 8));
        assert_eq!(a, t.capture_activations(&probe).unwrap());
        assert!(capture_activations(t.model(), &t.data().train, &probe, 2).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let data = split(&blobs(200, 2, 0.5, 7).unwrap(), 1).unwrap();
        let sgd = SgdConfig { momentum: 0.0, weight_decay: 0.0, batch_size: 8, seed: 0 };
        assert!(matches!(Trainer::new(MlpSpec::new(vec![3, 4, 2]), sgd, data), Err(Error::InvalidArgument(_))));
    }
}
