use rand::Rng;

use super::layers::{self, Cache, LayerSpec};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Global skip around the whole layer stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    None,
    /// `x + body(x)`.
    Add,
    /// `x - body(x)`; the body estimates the residual noise.
    Subtract,
}

impl Skip {
    pub(crate) fn id(self) -> u32 {
        match self {
            Skip::None => 0,
            Skip::Add => 1,
            Skip::Subtract => 2,
        }
    }

    pub(crate) fn from_id(id: u32) -> Option<Self> {
        match id {
            0 => Some(Skip::None),
            1 => Some(Skip::Add),
            2 => Some(Skip::Subtract),
            _ => None,
        }
    }
}

/// A stack of layers with one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Net {
    specs: Vec<LayerSpec>,
    skip: Skip,
    params: Vec<f64>,
    state: Vec<f64>,
    p_off: Vec<usize>,
    s_off: Vec<usize>,
}

/// Inputs and caches of a training forward pass.
#[derive(Debug)]
pub struct Trace {
    inputs: Vec<Tensor>,
    caches: Vec<Cache>,
    x: Tensor,
}

/// Recurrent state carried across [`Net::step`] calls.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    z: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
}

impl Net {
    /// All-zero parameters; batch-norm layers start with unit scale and unit
    /// running variance.
    pub fn zeros(specs: Vec<LayerSpec>, skip: Skip) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::config("a network needs at least one layer"));
        }
        let mut p_off = vec![0];
        let mut s_off = vec![0];
        for s in &specs {
            p_off.push(p_off.last().unwrap() + s.param_count());
            s_off.push(s_off.last().unwrap() + s.state_count());
        }
        let mut net = Self {
            params: vec![0.0; *p_off.last().unwrap()],
            state: vec![0.0; *s_off.last().unwrap()],
            specs,
            skip,
            p_off,
            s_off,
        };
        for l in 0..net.specs.len() {
            if let LayerSpec::BatchNorm { channels } = net.specs[l] {
                net.layer_params_mut(l)[..channels].fill(1.0);
                let (a, b) = (net.s_off[l], net.s_off[l + 1]);
                net.state[a + channels..b].fill(1.0);
            }
        }
        let closed: usize = net.specs.iter().map(|s| s.param_count()).sum();
        assert_eq!(closed, net.params.len());
        Ok(net)
    }

    /// He-uniform weights `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`, zero
    /// biases. Same seed, same parameters.
    pub fn new(specs: Vec<LayerSpec>, skip: Skip, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(specs, skip)?;
        let mut rng = stream_rng(seed, 0, Stream::Init);
        for l in 0..net.specs.len() {
            let (fan_in, n_weights) = net.specs[l].fan_in();
            if n_weights == 0 {
                continue;
            }
            let a = (6.0 / fan_in as f64).sqrt();
            for v in &mut net.layer_params_mut(l)[..n_weights] {
                *v = rng.gen_range(-a..a);
            }
        }
        Ok(net)
    }

    /// Dense stack `inputs -> hidden... -> outputs` with ReLU between layers
    /// and a linear output.
    pub fn fnn_specs(inputs: usize, hidden: &[usize], outputs: usize) -> Vec<LayerSpec> {
        let mut specs = Vec::new();
        let mut prev = inputs;
        for &h in hidden {
            specs.push(LayerSpec::Dense {
                inputs: prev,
                outputs: h,
            });
            specs.push(LayerSpec::Relu);
            prev = h;
        }
        specs.push(LayerSpec::Dense {
            inputs: prev,
            outputs,
        });
        specs
    }

    pub fn specs(&self) -> &[LayerSpec] {
        &self.specs
    }

    pub fn skip(&self) -> Skip {
        self.skip
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    pub(crate) fn set_state(&mut self, state: Vec<f64>) {
        self.state = state;
    }

    pub fn layer_params(&self, l: usize) -> &[f64] {
        &self.params[self.p_off[l]..self.p_off[l + 1]]
    }

    pub fn layer_params_mut(&mut self, l: usize) -> &mut [f64] {
        let (a, b) = (self.p_off[l], self.p_off[l + 1]);
        &mut self.params[a..b]
    }

    fn layer_state(&self, l: usize) -> &[f64] {
        &self.state[self.s_off[l]..self.s_off[l + 1]]
    }

    pub fn is_recurrent(&self) -> bool {
        self.specs
            .iter()
            .any(|s| matches!(s, LayerSpec::Lstm { .. } | LayerSpec::ConvLstm { .. }))
    }

    fn run(&self, x: &Tensor, train: bool) -> Result<(Tensor, Option<Trace>)> {
        let mut cur = x.clone();
        let mut inputs = Vec::new();
        let mut caches = Vec::new();
        for (l, spec) in self.specs.iter().enumerate() {
            spec.check_input(&cur)?;
            let (y, cache) =
                layers::forward(spec, self.layer_params(l), self.layer_state(l), &cur, train);
            if train {
                inputs.push(std::mem::replace(&mut cur, y));
                caches.push(cache);
            } else {
                cur = y;
            }
        }
        if self.skip != Skip::None {
            if cur.shape != x.shape {
                return Err(Error::shape(format!(
                    "skip connection needs matching shapes, {:?} vs {:?}",
                    cur.shape, x.shape
                )));
            }
            let sign = if self.skip == Skip::Add { 1.0 } else { -1.0 };
            for (o, &i) in cur.data.iter_mut().zip(&x.data) {
                *o = i + sign * *o;
            }
        }
        let trace = train.then(|| Trace {
            inputs,
            caches,
            x: x.clone(),
        });
        Ok((cur, trace))
    }

    /// Inference pass (batch norm uses running statistics).
    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.run(x, false)?.0)
    }

    pub fn forward_train(&self, x: &Tensor) -> Result<(Tensor, Trace)> {
        let (y, t) = self.run(x, true)?;
        Ok((y, t.expect("training trace")))
    }

    /// Gradients of the loss with respect to the parameters and the input,
    /// given the output gradient `gy`.
    pub fn backward(&self, trace: &Trace, gy: &Tensor) -> (Vec<f64>, Tensor) {
        let mut gp = vec![0.0; self.params.len()];
        let body_gy = match self.skip {
            Skip::Subtract => Tensor {
                shape: gy.shape.clone(),
                data: gy.data.iter().map(|v| -v).collect(),
            },
            _ => gy.clone(),
        };
        let mut g = body_gy;
        for l in (0..self.specs.len()).rev() {
            let (a, b) = (self.p_off[l], self.p_off[l + 1]);
            g = layers::backward(
                &self.specs[l],
                &self.params[a..b],
                &trace.inputs[l],
                &trace.caches[l],
                &g,
                &mut gp[a..b],
            );
        }
        if self.skip != Skip::None {
            for (o, &v) in g.data.iter_mut().zip(&gy.data) {
                *o += v;
            }
        }
        debug_assert_eq!(g.shape, trace.x.shape);
        (gp, g)
    }

    /// Folds the batch statistics of a training pass into the running
    /// averages: `run = momentum run + (1 - momentum) batch`.
    pub fn update_running_stats(&mut self, trace: &Trace, momentum: f64) {
        for l in 0..self.specs.len() {
            if let Some((mean, var)) = layers::batch_stats(&trace.caches[l]) {
                let c = mean.len();
                let off = self.s_off[l];
                for ch in 0..c {
                    let m = &mut self.state[off + ch];
                    *m = momentum * *m + (1.0 - momentum) * mean[ch];
                    let v = &mut self.state[off + c + ch];
                    *v = momentum * *v + (1.0 - momentum) * var[ch];
                }
            }
        }
    }

    pub fn new_step_state(&self) -> StepState {
        let mut z = Vec::new();
        let mut c = Vec::new();
        for s in &self.specs {
            let h = match *s {
                LayerSpec::Lstm { hidden, .. } => hidden,
                _ => 0,
            };
            z.push(vec![0.0; h]);
            c.push(vec![0.0; h]);
        }
        StepState { z, c }
    }

    /// One time step for a single sample of a dense/LSTM network.
    pub fn step(&self, x: &[f64], st: &mut StepState) -> Result<Vec<f64>> {
        let mut cur = x.to_vec();
        for (l, spec) in self.specs.iter().enumerate() {
            match *spec {
                LayerSpec::Lstm { inputs, hidden } => {
                    if cur.len() != inputs {
                        return Err(Error::shape(format!(
                            "LSTM expects {inputs} inputs, got {}",
                            cur.len()
                        )));
                    }
                    layers::lstm_step(
                        self.layer_params(l),
                        inputs,
                        hidden,
                        &cur,
                        &mut st.z[l],
                        &mut st.c[l],
                    );
                    cur = st.z[l].clone();
                }
                LayerSpec::Conv2d { .. } | LayerSpec::ConvLstm { .. } => {
                    return Err(Error::config(
                        "step mode supports dense and LSTM layers only",
                    ));
                }
                _ => {
                    let t = Tensor::new(&[1, cur.len()], cur)?;
                    spec.check_input(&t)?;
                    cur =
                        layers::forward(spec, self.layer_params(l), self.layer_state(l), &t, false)
                            .0
                            .data;
                }
            }
        }
        match self.skip {
            Skip::None => Ok(cur),
            _ if cur.len() != x.len() => Err(Error::shape("skip connection needs matching sizes")),
            Skip::Add => Ok(x.iter().zip(&cur).map(|(a, b)| a + b).collect()),
            Skip::Subtract => Ok(x.iter().zip(&cur).map(|(a, b)| a - b).collect()),
        }
    }
}
