//! One simulated frame through transmitter, channel and receiver.

use crate::channel::{add_noise, apply_channel, generate_channel, true_channel_grid, ChannelModel};
use crate::error::Result;
use crate::est_conv::RxFrame;
use crate::grid::CGrid;
use crate::phy::{
    build_frame, ofdm_demodulate, ofdm_modulate, random_bits, PhyConfig, PilotLayout,
};
use crate::rng::{derive_seed, stream_rng, Stream};

/// Everything an estimator or a scorer needs about one frame.
#[derive(Debug, Clone)]
pub struct SimFrame {
    pub rx: RxFrame,
    /// Ground truth, `K_on x I`.
    pub truth: CGrid,
    /// Transmitted active grid, `K_on x I`.
    pub tx: CGrid,
    pub bits: Vec<u8>,
    /// Per-sample noise variance, equal to the per-subcarrier variance after
    /// the unitary DFT.
    pub noise_var: f64,
    pub layout: PilotLayout,
}

/// `sigma^2 = P_tx / 10^(snr / 10)` with `P_tx` the mean transmitted sample
/// power.
pub fn noise_variance(tx_power: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        tx_power / 10f64.powf(snr_db / 10.0)
    }
}

/// Frame `frame` of a run with master seed `seed`. Channel and bits depend
/// only on `(seed, frame)`, so every SNR point sees the same channels; the
/// noise additionally depends on `snr_index`.
pub fn simulate_frame(
    cfg: &PhyConfig,
    model: &ChannelModel,
    layout: &PilotLayout,
    seed: u64,
    frame: u64,
    snr_index: u64,
    snr_db: f64,
) -> Result<SimFrame> {
    let bits = random_bits(
        layout.data_bits(cfg),
        &mut stream_rng(seed, frame, Stream::Bits),
    );
    let grid = build_frame(&bits, cfg, layout)?;
    let sig = ofdm_modulate(&grid, cfg)?;
    let ch = generate_channel(
        model,
        cfg.sample_rate_hz,
        cfg.signal_len(),
        derive_seed(seed, frame, Stream::Channel),
    )?;
    let faded = apply_channel(&sig, &ch)?;
    let noise_var = noise_variance(sig.power(), snr_db);
    let noisy = add_noise(
        &faded,
        noise_var,
        derive_seed(seed, (snr_index << 32) | frame, Stream::Noise),
    );
    let rx_grid = ofdm_demodulate(&noisy, cfg)?;
    Ok(SimFrame {
        rx: RxFrame::from_grid(&rx_grid, cfg),
        truth: true_channel_grid(&ch, cfg)?,
        tx: grid.active(cfg),
        bits,
        noise_var,
        layout: layout.clone(),
    })
}
