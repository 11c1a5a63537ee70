//! Network layouts of the studied estimators.

use crate::nn::{LayerSpec, Net, Skip};

/// Width of the LSTM state in both LSTM pipelines.
pub const LSTM_HIDDEN: usize = 128;

/// `2K_on -> hidden... -> 2K_on` with ReLU hidden layers.
pub fn fnn(k_on: usize, hidden: &[usize]) -> Vec<LayerSpec> {
    Net::fnn_specs(2 * k_on, hidden, 2 * k_on)
}

/// LSTM over `2K_on` inputs with a linear readout back to `2K_on`.
pub fn lstm_dpa_ta(k_on: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Lstm {
            inputs: 2 * k_on,
            hidden: LSTM_HIDDEN,
        },
        LayerSpec::Dense {
            inputs: LSTM_HIDDEN,
            outputs: 2 * k_on,
        },
    ]
}

/// LSTM over `2K_on + 2K_p` inputs, then one 40-neuron hidden layer.
pub fn lstm_fnn_dpa(k_on: usize, k_p: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Lstm {
            inputs: 2 * (k_on + k_p),
            hidden: LSTM_HIDDEN,
        },
        LayerSpec::Dense {
            inputs: LSTM_HIDDEN,
            outputs: 40,
        },
        LayerSpec::Relu,
        LayerSpec::Dense {
            inputs: 40,
            outputs: 2 * k_on,
        },
    ]
}

/// Three-layer super-resolution CNN `(9, c1; 1, c2; 5, 1)`.
pub fn sr_cnn(c1: usize, c2: usize) -> Vec<LayerSpec> {
    vec![
        LayerSpec::Conv2d {
            in_ch: 1,
            out_ch: c1,
            kh: 9,
            kw: 9,
        },
        LayerSpec::Relu,
        LayerSpec::Conv2d {
            in_ch: c1,
            out_ch: c2,
            kh: 1,
            kw: 1,
        },
        LayerSpec::Relu,
        LayerSpec::Conv2d {
            in_ch: c2,
            out_ch: 1,
            kh: 5,
            kw: 5,
        },
    ]
}

/// Denoising CNN: `layers` 3x3 convolutions of `ch` kernels, batch norm on
/// the inner ones. Used with a subtracting skip.
pub fn dn_cnn(layers: usize, ch: usize) -> Vec<LayerSpec> {
    let conv = |in_ch, out_ch| LayerSpec::Conv2d {
        in_ch,
        out_ch,
        kh: 3,
        kw: 3,
    };
    let mut specs = vec![conv(1, ch), LayerSpec::Relu];
    for _ in 0..layers.saturating_sub(2) {
        specs.push(conv(ch, ch));
        specs.push(LayerSpec::BatchNorm { channels: ch });
        specs.push(LayerSpec::Relu);
    }
    specs.push(conv(ch, 1));
    specs
}

/// ConvLSTM stack `(9, 64; 1, 32; 5, 1)` over the symbol axis, each step an
/// `2K_on x 1` image, followed by a scalar affine readout.
pub fn sr_convlstm() -> Vec<LayerSpec> {
    vec![
        LayerSpec::ConvLstm {
            in_ch: 1,
            hidden: 64,
            kh: 9,
            kw: 1,
        },
        LayerSpec::ConvLstm {
            in_ch: 64,
            hidden: 32,
            kh: 1,
            kw: 1,
        },
        LayerSpec::ConvLstm {
            in_ch: 32,
            hidden: 1,
            kh: 5,
            kw: 1,
        },
        LayerSpec::Dense {
            inputs: 1,
            outputs: 1,
        },
    ]
}

/// `(specs, skip)` pairs.
pub type Layout = (Vec<LayerSpec>, Skip);

pub fn channelnet_sr() -> Layout {
    (sr_cnn(64, 32), Skip::Add)
}

pub fn channelnet_dn() -> Layout {
    (dn_cnn(18, 64), Skip::Subtract)
}

pub fn optimized_sr() -> Layout {
    (sr_cnn(32, 16), Skip::Add)
}

pub fn optimized_dn() -> Layout {
    (dn_cnn(7, 16), Skip::Subtract)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::fnn_count;

    fn params(specs: &[LayerSpec]) -> usize {
        specs.iter().map(|s| s.param_count()).sum()
    }

    #[test]
    fn fnn_layouts_match_the_counted_architectures() {
        // Weight count equals the per-symbol multiplication count of the
        // complexity model.
        let weights =
            |s: &[LayerSpec]| -> usize { s.iter().map(|l| l.param_count()).sum::<usize>() };
        let sta = fnn(52, &[15, 15, 15]);
        assert_eq!(
            weights(&sta) - (15 + 15 + 15 + 104),
            fnn_count(52, 15, 15, 15).muldiv as usize
        );
        let dpa = fnn(52, &[40, 20, 40]);
        assert_eq!(
            weights(&dpa) - (40 + 20 + 40 + 104),
            fnn_count(52, 40, 20, 40).muldiv as usize
        );
    }

    #[test]
    fn lstm_input_sizes() {
        assert!(matches!(
            lstm_fnn_dpa(52, 4)[0],
            LayerSpec::Lstm {
                inputs: 112,
                hidden: 128
            }
        ));
        assert!(matches!(
            lstm_dpa_ta(52)[0],
            LayerSpec::Lstm {
                inputs: 104,
                hidden: 128
            }
        ));
    }

    #[test]
    fn cnn_sizes() {
        assert_eq!(
            dn_cnn(18, 64)
                .iter()
                .filter(|s| matches!(s, LayerSpec::Conv2d { .. }))
                .count(),
            18
        );
        assert_eq!(
            dn_cnn(7, 16)
                .iter()
                .filter(|s| matches!(s, LayerSpec::Conv2d { .. }))
                .count(),
            7
        );
        // Kernel weights of the optimized SR-CNN: 7008 multiplications per
        // complex grid element over two stacked real pixels.
        let w = params(&sr_cnn(32, 16)) - (32 + 16 + 1);
        assert_eq!(2 * w, 7008);
    }
}
