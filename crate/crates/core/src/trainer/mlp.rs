//! Fully connected ReLU network with softmax cross-entropy and manual backprop.

use std::io::{Read, Write};

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::rng;

/// Layer widths `(input, hidden..., classes)` and the tapped hidden layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    /// 0-based index among hidden layers.
    pub tap_layer: usize,
}

impl MlpSpec {
    /// Tap on the last hidden layer.
    pub fn new(layer_sizes: Vec<usize>) -> Self {
        let tap_layer = layer_sizes.len().saturating_sub(3);
        Self { layer_sizes, tap_layer }
    }

    pub fn hidden_layers(&self) -> usize {
        self.layer_sizes.len().saturating_sub(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 3 {
            return Err(Error::arg("network needs input, at least one hidden layer, and output"));
        }
        if self.layer_sizes.iter().any(|&w| w == 0) {
            return Err(Error::arg("layer widths must be positive"));
        }
        if *self.layer_sizes.last().unwrap() < 2 {
            return Err(Error::arg("network needs at least two output classes"));
        }
        if self.tap_layer >= self.hidden_layers() {
            return Err(Error::arg(format!("tap layer {} out of range for {} hidden layers", self.tap_layer, self.hidden_layers())));
        }
        if self.layer_sizes[self.tap_layer + 1] < 2 {
            return Err(Error::arg("tapped layer needs width >= 2"));
        }
        Ok(())
    }
}

/// Per-parameter gradients, laid out like the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    /// Same order as [`Mlp::flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn norm_sq(&self) -> f64 {
        self.weights.iter().flatten().chain(self.biases.iter().flatten()).map(|g| g * g).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    spec: MlpSpec,
    /// `weights[l]` maps layer `l` (rows) to layer `l + 1` (columns).
    pub(crate) weights: Vec<Array2<f64>>,
    pub(crate) biases: Vec<Array1<f64>>,
}

/// Row-wise softmax, shifted by the row max.
pub fn softmax(logits: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    out
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl Mlp {
    /// All-zero parameters.
    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let sizes = &spec.layer_sizes;
        let weights = sizes.windows(2).map(|w| Array2::zeros((w[0], w[1]))).collect();
        let biases = sizes[1..].iter().map(|&w| Array1::zeros(w)).collect();
        Ok(Self { spec, weights, biases })
    }

    /// He-uniform weights `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases.
    ///
    /// Entries are drawn layer by layer in row-major order.
    pub fn init(spec: MlpSpec, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(spec)?;
        let mut r = rng::seeded(seed);
        for w in &mut m.weights {
            let limit = (6.0 / w.nrows() as f64).sqrt();
            w.mapv_inplace(|_| rng::uniform(&mut r, -limit, limit));
        }
        Ok(m)
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Each layer's weights (row-major) followed by its biases.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::arg(format!("expected {} parameters, got {}", self.n_params(), flat.len())));
        }
        let mut it = flat.iter().copied();
        for (w, b) in self.weights.iter_mut().zip(&mut self.biases) {
            w.iter_mut().chain(b.iter_mut()).for_each(|p| *p = it.next().unwrap());
        }
        Ok(())
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.spec.layer_sizes[0] {
            return Err(Error::arg(format!("input has {} features, network expects {}", x.ncols(), self.spec.layer_sizes[0])));
        }
        Ok(())
    }

    /// Forward pass returning every layer's input (`inputs[0] = x`) and the logits.
    fn forward(&self, x: ArrayView2<'_, f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
        let last = self.weights.len() - 1;
        let mut inputs = vec![x.to_owned()];
        for l in 0..last {
            let mut z = inputs[l].dot(&self.weights[l]) + &self.biases[l];
            z.mapv_inplace(|v| v.max(0.0));
            inputs.push(z);
        }
        let logits = inputs[last].dot(&self.weights[last]) + &self.biases[last];
        (inputs, logits)
    }

    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        Ok(self.forward(x).1)
    }

    /// Post-ReLU activations of hidden layer `hidden` (0-based).
    pub fn hidden_activations(&self, x: ArrayView2<'_, f64>, hidden: usize) -> Result<Array2<f64>> {
        self.check_input(x)?;
        if hidden >= self.spec.hidden_layers() {
            return Err(Error::arg(format!("hidden layer {hidden} out of range for {} hidden layers", self.spec.hidden_layers())));
        }
        let mut h = x.to_owned();
        for l in 0..=hidden {
            h = h.dot(&self.weights[l]) + &self.biases[l];
            h.mapv_inplace(|v| v.max(0.0));
        }
        Ok(h)
    }

    fn check_labels(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<()> {
        self.check_input(x)?;
        if x.nrows() != labels.len() || labels.is_empty() {
            return Err(Error::arg(format!("{} rows but {} labels", x.nrows(), labels.len())));
        }
        let classes = *self.spec.layer_sizes.last().unwrap();
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::arg(format!("label {bad} exceeds {classes} output classes")));
        }
        Ok(())
    }

    /// Mean cross-entropy and accuracy. Ties in the argmax go to the lower class.
    pub fn loss_and_accuracy(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, f64)> {
        self.check_labels(x, labels)?;
        let logits = self.forward(x).1;
        let mut loss = 0.0;
        let mut correct = 0usize;
        for (row, &y) in logits.rows().into_iter().zip(labels) {
            loss += log_sum_exp(row.as_slice().expect("standard layout")) - row[y];
            let mut best = 0;
            for (k, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = k;
                }
            }
            correct += (best == y) as usize;
        }
        let n = labels.len() as f64;
        Ok((loss / n, correct as f64 / n))
    }

    /// Mean cross-entropy and its exact gradient over the batch.
    pub fn gradients(&self, x: ArrayView2<'_, f64>, labels: &[usize]) -> Result<(f64, Gradients)> {
        self.check_labels(x, labels)?;
        let (inputs, logits) = self.forward(x);
        let n = labels.len() as f64;
        let mut loss = 0.0;
        for (row, &y) in logits.rows().into_iter().zip(labels) {
            loss += log_sum_exp(row.as_slice().expect("standard layout")) - row[y];
        }
        let mut delta = softmax(logits.view());
        for (i, &y) in labels.iter().enumerate() {
            delta[[i, y]] -= 1.0;
        }
        delta /= n;
        let layers = self.weights.len();
        let mut gw = Vec::with_capacity(layers);
        let mut gb = Vec::with_capacity(layers);
        for l in (0..layers).rev() {
            gw.push(inputs[l].t().dot(&delta));
            gb.push(delta.sum_axis(Axis(0)));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l].t());
                // inputs[l] is relu(z); its derivative is 1 exactly where the output is positive
                back.zip_mut_with(&inputs[l], |d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        gw.reverse();
        gb.reverse();
        Ok((loss / n, Gradients { weights: gw, biases: gb }))
    }

    const MAGIC: &'static [u8; 8] = b"CGALRMLP";
    const VERSION: u32 = 1;

    /// Binary checkpoint: magic, version, tap layer, layer count and widths, then parameters (all little-endian).
    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(Self::MAGIC)?;
        out.write_all(&Self::VERSION.to_le_bytes())?;
        out.write_all(&(self.spec.tap_layer as u32).to_le_bytes())?;
        out.write_all(&(self.spec.layer_sizes.len() as u32).to_le_bytes())?;
        for &w in &self.spec.layer_sizes {
            out.write_all(&(w as u64).to_le_bytes())?;
        }
        for p in self.flat_params() {
            out.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut input: R) -> Result<Self> {
        let bad = |m: &str| Error::Parse { location: "checkpoint".into(), message: m.into() };
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(bad("bad magic"));
        }
        let mut word = [0u8; 4];
        input.read_exact(&mut word)?;
        if u32::from_le_bytes(word) != Self::VERSION {
            return Err(bad("unsupported version"));
        }
        input.read_exact(&mut word)?;
        let tap_layer = u32::from_le_bytes(word) as usize;
        input.read_exact(&mut word)?;
        let count = u32::from_le_bytes(word) as usize;
        if count > 1024 {
            return Err(bad("implausible layer count"));
        }
        let mut layer_sizes = Vec::with_capacity(count);
        let mut long = [0u8; 8];
        for _ in 0..count {
            input.read_exact(&mut long)?;
            layer_sizes.push(u64::from_le_bytes(long) as usize);
        }
        let mut m = Self::zeros(MlpSpec { layer_sizes, tap_layer })?;
        let mut flat = Vec::with_capacity(m.n_params());
        for _ in 0..m.n_params() {
            input.read_exact(&mut long)?;
            flat.push(f64::from_le_bytes(long));
        }
        m.set_flat_params(&flat)?;
        Ok(m)
    }
}
