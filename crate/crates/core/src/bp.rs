//! Backpropagation baseline on the same layer sizes as the constructed network.
//!
//! ReLU hidden layers, softmax cross-entropy output, mini-batch SGD with
//! momentum. Weights start either from Xavier-uniform draws or from a
//! constructed [`FFNetwork`].

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::network::{decide, FFNetwork};
use crate::rng::{derive_seed, rng_from};

/// Dense layer `z = W a + b` with `W` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            w: vec![0.0; inputs * outputs],
            b: vec![0.0; outputs],
        }
    }

    fn apply(&self, a: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.w[r * self.inputs..(r + 1) * self.inputs];
            let mut acc = 0.0;
            for (wi, ai) in row.iter().zip(a) {
                acc += wi * ai;
            }
            *o = acc + self.b[r];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    /// Prediction used when every logit is exactly zero, as in the
    /// constructed network.
    pub fallback_class: Option<usize>,
}

/// Per-layer activations of one forward pass; `acts[0]` is the input.
struct Cache {
    zs: Vec<Vec<f64>>,
    acts: Vec<Vec<f64>>,
}

impl Mlp {
    /// Xavier-uniform weights in `+-sqrt(6 / (fan_in + fan_out))`, zero biases.
    pub fn xavier(sizes: &[usize], seed: u64) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::param(format!("invalid layer sizes {sizes:?}")));
        }
        let mut rng = rng_from(seed);
        let layers = sizes
            .windows(2)
            .map(|s| {
                let bound = (6.0 / (s[0] + s[1]) as f64).sqrt();
                let mut layer = Layer::zeros(s[0], s[1]);
                for w in layer.w.iter_mut() {
                    *w = rng.random_range(-bound..=bound);
                }
                layer
            })
            .collect();
        Ok(Self {
            layers,
            fallback_class: None,
        })
    }

    /// Copies every weight and bias of a constructed network.
    pub fn from_ff(net: &FFNetwork) -> Self {
        let copy = |w: &nalgebra::DMatrix<f64>, b: &nalgebra::DVector<f64>| {
            let mut layer = Layer::zeros(w.ncols(), w.nrows());
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    layer.w[r * w.ncols() + c] = w[(r, c)];
                }
            }
            layer.b = b.as_slice().to_vec();
            layer
        };
        Self {
            layers: vec![copy(&net.w1, &net.b1), copy(&net.w2, &net.b2), copy(&net.w3, &net.b3)],
            fallback_class: Some(net.fallback_class),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn class_count(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    fn run(&self, x: &[f64]) -> Cache {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = vec![0.0; layer.outputs];
            layer.apply(&acts[i], &mut z);
            let a = if i == last {
                z.clone()
            } else {
                z.iter().map(|v| if *v > 0.0 { *v } else { 0.0 }).collect()
            };
            zs.push(z);
            acts.push(a);
        }
        Cache { zs, acts }
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::param(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(self.run(x).acts.pop().unwrap())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let z = self.logits(x)?;
        Ok(match self.fallback_class {
            Some(f) => decide(&z, f),
            None => decide_no_fallback(&z),
        })
    }

    pub fn accuracy(&self, ds: &LabeledDataset) -> Result<f64> {
        let mut hits = 0;
        for (x, y) in ds.rows().zip(ds.labels()) {
            if self.predict(x)? == *y {
                hits += 1;
            }
        }
        Ok(hits as f64 / ds.len() as f64)
    }

    /// Mean cross-entropy over a dataset.
    pub fn loss(&self, ds: &LabeledDataset) -> Result<f64> {
        let mut total = 0.0;
        for (x, y) in ds.rows().zip(ds.labels()) {
            total += cross_entropy(&self.logits(x)?, *y);
        }
        Ok(total / ds.len() as f64)
    }
}

fn decide_no_fallback(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = i;
        }
    }
    best
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `-log softmax(z)[y]`.
pub fn cross_entropy(z: &[f64], y: usize) -> f64 {
    log_sum_exp(z) - z[y]
}

/// Analytic gradients of the mean cross-entropy over `batch`, with the mean
/// loss. The ReLU derivative at zero is taken as zero.
pub fn gradients(mlp: &Mlp, batch: &[(&[f64], usize)]) -> Result<(Vec<Layer>, f64)> {
    if batch.is_empty() {
        return Err(Error::param("gradient batch is empty"));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads: Vec<Layer> = mlp.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
    let mut loss = 0.0;
    for &(x, y) in batch {
        if x.len() != mlp.input_dim() || y >= mlp.class_count() {
            return Err(Error::param("batch sample does not fit the network"));
        }
        let cache = mlp.run(x);
        let logits = cache.acts.last().unwrap();
        let lse = log_sum_exp(logits);
        loss += lse - logits[y];
        let mut delta: Vec<f64> = logits.iter().map(|v| (v - lse).exp()).collect();
        delta[y] -= 1.0;
        for (i, layer) in mlp.layers.iter().enumerate().rev() {
            let a_prev = &cache.acts[i];
            let g = &mut grads[i];
            for (r, dr) in delta.iter().enumerate() {
                let d = dr * scale;
                g.b[r] += d;
                let row = &mut g.w[r * layer.inputs..(r + 1) * layer.inputs];
                for (gw, a) in row.iter_mut().zip(a_prev) {
                    *gw += d * a;
                }
            }
            if i == 0 {
                break;
            }
            let z_prev = &cache.zs[i - 1];
            let mut next = vec![0.0; layer.inputs];
            for (r, dr) in delta.iter().enumerate() {
                let row = &layer.w[r * layer.inputs..(r + 1) * layer.inputs];
                for (n, w) in next.iter_mut().zip(row) {
                    *n += w * dr;
                }
            }
            for (n, z) in next.iter_mut().zip(z_prev) {
                if *z <= 0.0 {
                    *n = 0.0;
                }
            }
            delta = next;
        }
    }
    Ok((grads, loss * scale))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Init {
    Xavier,
    FromFf,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Init::Xavier => "xavier",
            Init::FromFf => "ff",
        })
    }
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xavier" | "xavier_uniform" => Ok(Init::Xavier),
            "ff" | "from_ff" => Ok(Init::FromFf),
            _ => Err(Error::param(format!("unknown init '{s}', expected ff or xavier"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub init: Init,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 0.01,
            momentum: 0.0,
            batch_size: 32,
            init: Init::Xavier,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::param("learning rate must be finite and >= 0"));
        }
        if !(self.momentum >= 0.0 && self.momentum < 1.0) {
            return Err(Error::param("momentum must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::param("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Mean training loss over the minibatches of the epoch.
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub initial_train_acc: f64,
    pub initial_test_acc: f64,
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn final_train_acc(&self) -> f64 {
        self.epochs.last().map_or(self.initial_train_acc, |e| e.train_acc)
    }

    pub fn final_test_acc(&self) -> f64 {
        self.epochs.last().map_or(self.initial_test_acc, |e| e.test_acc)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fail = |e: csv::Error| Error::format("history csv", e.to_string());
        w.write_record(["epoch", "train_acc", "test_acc", "loss"]).map_err(fail)?;
        for e in &self.epochs {
            w.write_record([
                e.epoch.to_string(),
                e.train_acc.to_string(),
                e.test_acc.to_string(),
                e.loss.to_string(),
            ])
            .map_err(fail)?;
        }
        w.flush().map_err(|e| Error::format("history csv", e.to_string()))
    }
}

/// Trains an MLP of layer sizes `arch` with mini-batch SGD.
///
/// With [`Init::FromFf`] the weights are copied from `init_net`, whose
/// architecture must equal `arch`. Each epoch shuffles the training set with
/// a stream derived from the seed and the epoch index.
pub fn train_bp(
    arch: &[usize],
    init_net: Option<&FFNetwork>,
    train: &LabeledDataset,
    test: &LabeledDataset,
    cfg: &TrainConfig,
) -> Result<(Mlp, TrainHistory)> {
    cfg.validate()?;
    let mut mlp = match cfg.init {
        Init::FromFf => {
            let net = init_net.ok_or_else(|| Error::param("init from_ff needs a constructed network"))?;
            if net.architecture().as_slice() != arch {
                return Err(Error::param(format!(
                    "architecture {arch:?} does not match the network's {:?}",
                    net.architecture()
                )));
            }
            Mlp::from_ff(net)
        }
        Init::Xavier => Mlp::xavier(arch, derive_seed(cfg.seed, 0))?,
    };
    if train.dim() != mlp.input_dim() || test.dim() != mlp.input_dim() {
        return Err(Error::param("dataset dimension does not match the architecture"));
    }
    if train.class_count() > mlp.class_count() || test.class_count() > mlp.class_count() {
        return Err(Error::param("dataset has more classes than output neurons"));
    }
    let mut history = TrainHistory {
        initial_train_acc: mlp.accuracy(train)?,
        initial_test_acc: mlp.accuracy(test)?,
        epochs: Vec::with_capacity(cfg.epochs),
    };
    let mut velocity: Vec<Layer> = mlp.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng_from(derive_seed(cfg.seed, epoch as u64)));
        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<(&[f64], usize)> = chunk.iter().map(|&i| (train.sample(i), train.labels()[i])).collect();
            let (grads, loss) = gradients(&mlp, &batch)?;
            if !loss.is_finite() {
                return Err(Error::Training {
                    epoch,
                    message: "loss is not finite".into(),
                });
            }
            loss_sum += loss * chunk.len() as f64;
            for ((layer, g), v) in mlp.layers.iter_mut().zip(&grads).zip(velocity.iter_mut()) {
                step(&mut layer.w, &g.w, &mut v.w, cfg);
                step(&mut layer.b, &g.b, &mut v.b, cfg);
            }
        }
        if mlp.layers.iter().any(|l| l.w.iter().chain(&l.b).any(|v| !v.is_finite())) {
            return Err(Error::Training {
                epoch,
                message: "weights diverged".into(),
            });
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_acc: mlp.accuracy(train)?,
            test_acc: mlp.accuracy(test)?,
            loss: loss_sum / train.len() as f64,
        });
    }
    Ok((mlp, history))
}

fn step(params: &mut [f64], grads: &[f64], velocity: &mut [f64], cfg: &TrainConfig) {
    for ((p, g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = cfg.momentum * *v + g;
        *p -= cfg.learning_rate * *v;
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_data() -> LabeledDataset {
        let x = vec![0.5, 1.0, -1.0, 0.3, 0.2, -0.7, -0.4, -0.9, 1.5, 0.1, -1.2, 0.8];
        LabeledDataset::new(x, 2, vec![0, 1, 2, 1, 0, 2], 3).unwrap()
    }

    #[test]
    fn zero_network_bias_gradient() {
        let mut mlp = Mlp::xavier(&[2, 3, 3], 1).unwrap();
        for l in &mut mlp.layers {
            l.w.iter_mut().for_each(|w| *w = 0.0);
        }
        let x = [0.4, -0.2];
        let (g, loss) = gradients(&mlp, &[(&x, 1)]).unwrap();
        let third = 1.0 / 3.0;
        assert!((g[1].b[0] - third).abs() < 1e-15);
        assert!((g[1].b[1] - (third - 1.0)).abs() < 1e-15);
        assert!((loss - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn dead_relu_blocks_gradient() {
        let mut mlp = Mlp::xavier(&[1, 2, 2], 3).unwrap();
        mlp.layers[0].w = vec![1.0, -1.0];
        mlp.layers[0].b = vec![0.0, 0.0];
        let (g, _) = gradients(&mlp, &[(&[2.0], 0)]).unwrap();
        assert_eq!(g[0].w[1], 0.0);
        assert_eq!(g[0].b[1], 0.0);
        assert_eq!(g[1].w[1], 0.0);
        assert_eq!(g[1].w[3], 0.0);
    }

    #[test]
    fn finite_differences() {
        let ds = toy_data();
        let mlp = Mlp::xavier(&[2, 4, 3, 3], 5).unwrap();
        let batch: Vec<(&[f64], usize)> = ds.rows().zip(ds.labels().iter().copied()).collect();
        let (g, _) = gradients(&mlp, &batch).unwrap();
        let loss_of = |m: &Mlp| gradients(m, &batch).unwrap().1;
        let h = 1e-5;
        for (li, layer) in mlp.layers.iter().enumerate() {
            for wi in 0..layer.w.len() {
                let mut plus = mlp.clone();
                plus.layers[li].w[wi] += h;
                let mut minus = mlp.clone();
                minus.layers[li].w[wi] -= h;
                let fd = (loss_of(&plus) - loss_of(&minus)) / (2.0 * h);
                let an = g[li].w[wi];
                let rel = (fd - an).abs() / an.abs().max(fd.abs()).max(1e-8);
                assert!(rel <= 1e-4 || (fd - an).abs() < 1e-9, "layer {li} w{wi}: {an} vs {fd}");
            }
        }
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let ds = toy_data();
        let cfg = TrainConfig {
            epochs: 3,
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        let (mlp, hist) = train_bp(&[2, 4, 3], None, &ds, &ds, &cfg).unwrap();
        assert_eq!(mlp, Mlp::xavier(&[2, 4, 3], derive_seed(0, 0)).unwrap());
        assert_eq!(hist.epochs.len(), 3);
        assert!(hist.epochs.iter().all(|e| e.train_acc == hist.initial_train_acc));
    }

    #[test]
    fn repeated_batch_descends() {
        let ds = toy_data();
        let mut mlp = Mlp::xavier(&[2, 5, 3], 9).unwrap();
        let batch: Vec<(&[f64], usize)> = ds.rows().zip(ds.labels().iter().copied()).collect();
        let mut prev = f64::INFINITY;
        for _ in 0..10 {
            let (g, loss) = gradients(&mlp, &batch).unwrap();
            assert!(loss <= prev + 1e-12);
            prev = loss;
            for (l, gl) in mlp.layers.iter_mut().zip(&g) {
                l.w.iter_mut().zip(&gl.w).for_each(|(w, d)| *w -= 0.01 * d);
                l.b.iter_mut().zip(&gl.b).for_each(|(b, d)| *b -= 0.01 * d);
            }
        }
    }

    #[test]
    fn xavier_bounds() {
        let mlp = Mlp::xavier(&[4, 6, 2], 0).unwrap();
        let b0 = (6.0f64 / 10.0).sqrt();
        assert!(mlp.layers[0].w.iter().all(|w| w.abs() <= b0));
        assert!(mlp.layers.iter().all(|l| l.b.iter().all(|b| *b == 0.0)));
        assert_eq!(mlp.sizes(), vec![4, 6, 2]);
    }

    #[test]
    fn history_csv_header() {
        let h = TrainHistory {
            initial_train_acc: 0.5,
            initial_test_acc: 0.5,
            epochs: vec![EpochRecord {
                epoch: 1,
                train_acc: 0.75,
                test_acc: 0.5,
                loss: 0.25,
            }],
        };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,train_acc,test_acc,loss\n1,0.75,0.5,0.25\n");
    }

    #[test]
    fn mean_and_std() {
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
