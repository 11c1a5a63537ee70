//! Shared fixtures for the criterion benchmarks under `benches/`.

use ddce_core::channel::ChannelModel;
use ddce_core::est_conv::EstContext;
use ddce_core::est_dl::{FrameInfo, Pipeline, PipelineOptions};
use ddce_core::link::{simulate_frame, SimFrame};
use ddce_core::phy::{Modulation, PhyConfig};

/// One received 802.11p frame on VTV-SDWW at 500 Hz and 30 dB, laid out for
/// `pipeline`.
pub struct Fixture {
    pub ctx: EstContext,
    pub frame: SimFrame,
    pub info: FrameInfo,
}

pub fn fixture(pipeline: Pipeline, n_symbols: usize) -> Fixture {
    let cfg = PhyConfig::ieee80211p(n_symbols, Modulation::Qpsk);
    let model = ChannelModel::vtv_sdww(500.0);
    let layout = pipeline.frame_layout(&PipelineOptions::default(), n_symbols);
    let frame = simulate_frame(&cfg, &model, &layout, 1, 0, 0, 30.0).expect("simulate frame");
    let info = FrameInfo {
        noise_var: frame.noise_var,
        doppler_hz: model.doppler_hz,
    };
    Fixture {
        ctx: EstContext::new(&cfg),
        frame,
        info,
    }
}
