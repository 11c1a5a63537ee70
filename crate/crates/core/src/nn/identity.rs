//! Networks that reproduce their input. Used to check that every pipeline
//! collapses onto its conventional pre-stage.

use super::layers::LayerSpec;
use super::net::{Net, Skip};
use crate::error::Result;

/// Dense ReLU stack computing `x` exactly as `relu(x) - relu(-x)`. Hidden
/// layers are `2n` wide.
pub fn identity_fnn(n: usize, hidden_layers: usize) -> Result<Net> {
    let hidden_layers = hidden_layers.max(1);
    let mut specs = vec![
        LayerSpec::Dense {
            inputs: n,
            outputs: 2 * n,
        },
        LayerSpec::Relu,
    ];
    for _ in 1..hidden_layers {
        specs.push(LayerSpec::Dense {
            inputs: 2 * n,
            outputs: 2 * n,
        });
        specs.push(LayerSpec::Relu);
    }
    specs.push(LayerSpec::Dense {
        inputs: 2 * n,
        outputs: n,
    });
    let mut net = Net::zeros(specs, Skip::None)?;
    let last = net.specs().len() - 1;
    for l in 0..net.specs().len() {
        let LayerSpec::Dense { inputs, .. } = net.specs()[l] else {
            continue;
        };
        let w = net.layer_params_mut(l);
        if l == 0 {
            for j in 0..n {
                w[j * inputs + j] = 1.0;
                w[(n + j) * inputs + j] = -1.0;
            }
        } else if l == last {
            for j in 0..n {
                w[j * inputs + j] = 1.0;
                w[j * inputs + n + j] = -1.0;
            }
        } else {
            for j in 0..2 * n {
                w[j * inputs + j] = 1.0;
            }
        }
    }
    Ok(net)
}

/// LSTM followed by a linear readout that passes the first `pass` inputs
/// through. The gates are pinned open or shut with `+-800` biases (exactly
/// 1 and 0 after the sigmoid); the cell input is `tanh(gain x)` and the
/// readout divides by `gain`, so the output is `x (1 + O(gain^2 x^2))`.
pub fn passthrough_lstm(inputs: usize, hidden: usize, outputs: usize, gain: f64) -> Result<Net> {
    let pass = outputs.min(inputs).min(hidden);
    let specs = vec![
        LayerSpec::Lstm { inputs, hidden },
        LayerSpec::Dense {
            inputs: hidden,
            outputs,
        },
    ];
    let mut net = Net::zeros(specs, Skip::None)?;
    let k = inputs + hidden;
    {
        let p = net.layer_params_mut(0);
        let (w, b) = p.split_at_mut(4 * hidden * k);
        for j in 0..hidden {
            b[j] = -800.0;
            b[hidden + j] = 800.0;
            b[3 * hidden + j] = 800.0;
        }
        for j in 0..pass {
            w[(2 * hidden + j) * k + j] = gain;
        }
    }
    let w = net.layer_params_mut(1);
    for j in 0..pass {
        w[j * hidden + j] = 1.0 / gain;
    }
    Ok(net)
}

/// Same-padded CNN of `layers >= 2` convolutions reproducing a 1-channel
/// image exactly, with centre-tap kernels and the ReLU split trick.
pub fn identity_cnn(layers: usize, kernel: usize) -> Result<Net> {
    let layers = layers.max(2);
    let mut specs = Vec::new();
    for l in 0..layers {
        let in_ch = if l == 0 { 1 } else { 2 };
        let out_ch = if l == layers - 1 { 1 } else { 2 };
        specs.push(LayerSpec::Conv2d {
            in_ch,
            out_ch,
            kh: kernel,
            kw: kernel,
        });
        if l < layers - 1 {
            specs.push(LayerSpec::Relu);
        }
    }
    let mut net = Net::zeros(specs, Skip::None)?;
    let centre = (kernel / 2) * kernel + kernel / 2;
    let kk = kernel * kernel;
    for l in 0..net.specs().len() {
        let LayerSpec::Conv2d { in_ch, out_ch, .. } = net.specs()[l] else {
            continue;
        };
        let w = net.layer_params_mut(l);
        let at = |o: usize, c: usize| (o * in_ch + c) * kk + centre;
        match (in_ch, out_ch) {
            (1, 2) => {
                w[at(0, 0)] = 1.0;
                w[at(1, 0)] = -1.0;
            }
            (2, 1) => {
                w[at(0, 0)] = 1.0;
                w[at(0, 1)] = -1.0;
            }
            _ => {
                w[at(0, 0)] = 1.0;
                w[at(1, 1)] = 1.0;
            }
        }
    }
    Ok(net)
}

/// Zeroes the last parameterized layer, so a skip network returns its input.
pub fn zero_last_layer(net: &mut Net) {
    if let Some(l) = (0..net.specs().len())
        .rev()
        .find(|&l| net.specs()[l].param_count() > 0)
    {
        net.layer_params_mut(l).fill(0.0);
    }
}

/// `b(a(x))` as one network. Both must be skip-free.
pub fn chain(a: &Net, b: &Net) -> Result<Net> {
    if a.skip() != Skip::None || b.skip() != Skip::None {
        return Err(crate::error::Error::config(
            "only skip-free networks can be chained",
        ));
    }
    let specs: Vec<LayerSpec> = a.specs().iter().chain(b.specs()).copied().collect();
    let mut net = Net::zeros(specs, Skip::None)?;
    let params: Vec<f64> = a.params().iter().chain(b.params()).copied().collect();
    net.params_mut().copy_from_slice(&params);
    net.set_state(a.state().iter().chain(b.state()).copied().collect());
    Ok(net)
}
