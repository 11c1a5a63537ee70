use log::debug;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::net::Net;
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Batch-norm running-average momentum.
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_snr_db: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::table_ii()
    }
}

impl TrainConfig {
    /// FNN and LSTM settings: 500 epochs, batch 128, ADAM at 1e-3, 40 dB.
    pub fn table_ii() -> Self {
        Self {
            epochs: 500,
            batch_size: 128,
            learning_rate: 1e-3,
            train_snr_db: 40.0,
            seed: 0,
        }
    }

    /// CNN settings: as above with 250 epochs.
    pub fn table_iii() -> Self {
        Self {
            epochs: 250,
            ..Self::table_ii()
        }
    }

    /// Reduced budget used by default on a workstation.
    pub fn desk() -> Self {
        Self {
            epochs: 50,
            ..Self::table_ii()
        }
    }
}

/// ADAM with `beta1 = 0.9`, `beta2 = 0.999`, `eps = 1e-8`.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for j in 0..params.len() {
            self.m[j] = Self::B1 * self.m[j] + (1.0 - Self::B1) * grad[j];
            self.v[j] = Self::B2 * self.v[j] + (1.0 - Self::B2) * grad[j] * grad[j];
            let mh = self.m[j] / c1;
            let vh = self.v[j] / c2;
            params[j] -= self.lr * mh / (vh.sqrt() + Self::EPS);
        }
    }
}

/// Mean squared error over all elements and its gradient.
pub fn mse(y: &Tensor, target: &Tensor) -> (f64, Tensor) {
    let n = y.len() as f64;
    let mut loss = 0.0;
    let mut g = vec![0.0; y.len()];
    for (j, (&a, &b)) in y.data.iter().zip(&target.data).enumerate() {
        let d = a - b;
        loss += d * d;
        g[j] = 2.0 * d / n;
    }
    (
        loss / n,
        Tensor {
            shape: y.shape.clone(),
            data: g,
        },
    )
}

/// Mini-batch ADAM on MSE. Returns the mean training loss of every epoch.
pub fn train(
    net: &mut Net,
    inputs: &Tensor,
    targets: &Tensor,
    cfg: &TrainConfig,
) -> Result<Vec<f64>> {
    let n = inputs.batch();
    if n == 0 || targets.batch() != n {
        return Err(Error::shape(format!(
            "{n} inputs vs {} targets; the dataset must be non-empty",
            targets.batch()
        )));
    }
    if cfg.batch_size == 0 {
        return Err(Error::config("batch size must be positive"));
    }
    let mut adam = Adam::new(net.param_count(), cfg.learning_rate);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut stream_rng(cfg.seed, epoch as u64, Stream::Shuffle));
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xb = inputs.gather(chunk);
            let yb = targets.gather(chunk);
            let (out, trace) = net.forward_train(&xb)?;
            if out.shape != yb.shape {
                return Err(Error::shape(format!(
                    "network output {:?} vs target {:?}",
                    out.shape, yb.shape
                )));
            }
            let (loss, g) = mse(&out, &yb);
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch, loss });
            }
            let (gp, _) = net.backward(&trace, &g);
            net.update_running_stats(&trace, BN_MOMENTUM);
            adam.step(net.params_mut(), &gp);
            total += loss * chunk.len() as f64;
        }
        let mean = total / n as f64;
        debug!("epoch {epoch}: loss {mean:e}");
        history.push(mean);
    }
    Ok(history)
}
