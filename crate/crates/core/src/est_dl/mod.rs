//! The learned estimators: conventional pre-processing feeding the networks
//! of [`crate::nn`].
//!
//! SBS pipelines (FNN and LSTM) run one symbol at a time and feed their
//! output into the next symbol's recursion. FBF pipelines read the whole
//! frame as a `2K_on x I` real image (real parts on top of imaginary parts).

pub mod arch;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::complexity::{CnnKind, CountTarget};
use crate::error::{Error, Result};
use crate::est_conv::{
    add_tt, blend, comb_interpolator, dpa, dpa_step, ls_preamble, rbf_apply, sta, sta_step, trfi,
    trfi_step, wi_interpolate, wi_pilot_estimates, AddTtParams, ChannelEstimate, EstContext,
    RbfInterpolator, RxFrame, StaParams, WiFrameConfig, WiScheme,
};
use crate::grid::{stack_vec, unstack_vec, CGrid, C64};
use crate::nn::identity::{chain, identity_fnn, passthrough_lstm, zero_last_layer};
use crate::nn::{train, LayerSpec, Net, Skip, Tensor, TrainConfig};
use crate::phy::PilotLayout;
use crate::tally::Tally;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    DpaFnn,
    StaFnn,
    TrfiFnn,
    LstmFnnDpa,
    LstmDpaTa,
    ChannelNet,
    TsChannelNet,
    WiCnn(WiScheme, CnnKind),
}

impl Pipeline {
    pub const ALL: [Pipeline; 8] = [
        Pipeline::DpaFnn,
        Pipeline::StaFnn,
        Pipeline::TrfiFnn,
        Pipeline::LstmFnnDpa,
        Pipeline::LstmDpaTa,
        Pipeline::ChannelNet,
        Pipeline::TsChannelNet,
        Pipeline::WiCnn(WiScheme::FpAls, CnnKind::Dn),
    ];

    pub fn target(self) -> CountTarget {
        match self {
            Pipeline::DpaFnn => CountTarget::DpaFnn,
            Pipeline::StaFnn => CountTarget::StaFnn,
            Pipeline::TrfiFnn => CountTarget::TrfiFnn,
            Pipeline::LstmFnnDpa => CountTarget::LstmFnnDpa,
            Pipeline::LstmDpaTa => CountTarget::LstmDpaTa,
            Pipeline::ChannelNet => CountTarget::ChannelNet,
            Pipeline::TsChannelNet => CountTarget::TsChannelNet,
            Pipeline::WiCnn(s, k) => CountTarget::WiCnn(s, k),
        }
    }

    pub fn name(self) -> String {
        self.target().name()
    }

    /// File-name friendly name.
    pub fn slug(self) -> String {
        self.name().to_ascii_lowercase()
    }

    pub fn is_sbs(self) -> bool {
        self.target().is_sbs()
    }

    pub fn is_recurrent(self) -> bool {
        matches!(
            self,
            Pipeline::LstmFnnDpa | Pipeline::LstmDpaTa | Pipeline::TsChannelNet
        )
    }

    /// Names of the trained networks, in stage order.
    pub fn roles(self) -> &'static [&'static str] {
        match self {
            Pipeline::ChannelNet => &["sr", "dn"],
            Pipeline::DpaFnn | Pipeline::StaFnn | Pipeline::TrfiFnn => &["fnn"],
            Pipeline::LstmFnnDpa | Pipeline::LstmDpaTa => &["lstm"],
            Pipeline::TsChannelNet => &["sr-convlstm"],
            Pipeline::WiCnn(_, CnnKind::Sr) => &["sr"],
            Pipeline::WiCnn(_, CnnKind::Dn) => &["dn"],
        }
    }

    /// Default network layouts, one per role.
    pub fn layouts(self, ctx: &EstContext) -> Vec<arch::Layout> {
        let k_on = ctx.k_on();
        match self {
            Pipeline::DpaFnn => vec![(arch::fnn(k_on, &[40, 20, 40]), Skip::None)],
            Pipeline::StaFnn | Pipeline::TrfiFnn => {
                vec![(arch::fnn(k_on, &[15, 15, 15]), Skip::None)]
            }
            Pipeline::LstmFnnDpa => {
                vec![(arch::lstm_fnn_dpa(k_on, ctx.pilot_pos.len()), Skip::None)]
            }
            Pipeline::LstmDpaTa => vec![(arch::lstm_dpa_ta(k_on), Skip::None)],
            Pipeline::ChannelNet => vec![arch::channelnet_sr(), arch::channelnet_dn()],
            Pipeline::TsChannelNet => vec![(arch::sr_convlstm(), Skip::Add)],
            Pipeline::WiCnn(_, CnnKind::Sr) => vec![arch::optimized_sr()],
            Pipeline::WiCnn(_, CnnKind::Dn) => vec![arch::optimized_dn()],
        }
    }

    /// Freshly initialized networks.
    pub fn init_nets(self, ctx: &EstContext, seed: u64) -> Result<Vec<Net>> {
        self.layouts(ctx)
            .into_iter()
            .enumerate()
            .map(|(r, (specs, skip))| Net::new(specs, skip, seed.wrapping_add(r as u64)))
            .collect()
    }

    /// Networks under which the pipeline reproduces its conventional
    /// pre-stage.
    pub fn identity_nets(self, ctx: &EstContext) -> Result<Vec<Net>> {
        let n = 2 * ctx.k_on();
        match self {
            Pipeline::DpaFnn | Pipeline::StaFnn | Pipeline::TrfiFnn => {
                Ok(vec![identity_fnn(n, 3)?])
            }
            Pipeline::LstmDpaTa => Ok(vec![passthrough_lstm(n, arch::LSTM_HIDDEN, n, 1e-6)?]),
            Pipeline::LstmFnnDpa => {
                let inputs = n + 2 * ctx.pilot_pos.len();
                let lstm = passthrough_lstm(inputs, arch::LSTM_HIDDEN, n, 1e-6)?;
                Ok(vec![chain(&lstm, &identity_fnn(n, 1)?)?])
            }
            _ => {
                let mut nets = Vec::new();
                for (specs, skip) in self.layouts(ctx) {
                    let mut net = Net::zeros(specs, skip)?;
                    zero_last_layer(&mut net);
                    nets.push(net);
                }
                Ok(nets)
            }
        }
    }

    /// Frame layout the pipeline is evaluated on.
    pub fn frame_layout(self, opts: &PipelineOptions, n_symbols: usize) -> PilotLayout {
        match self {
            Pipeline::WiCnn(s, _) => opts.wi_config(s, n_symbols).layout(),
            _ => PilotLayout::Comb,
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.parse::<CountTarget>()? {
            CountTarget::DpaFnn => Pipeline::DpaFnn,
            CountTarget::StaFnn => Pipeline::StaFnn,
            CountTarget::TrfiFnn => Pipeline::TrfiFnn,
            CountTarget::LstmFnnDpa => Pipeline::LstmFnnDpa,
            CountTarget::LstmDpaTa => Pipeline::LstmDpaTa,
            CountTarget::ChannelNet => Pipeline::ChannelNet,
            CountTarget::TsChannelNet => Pipeline::TsChannelNet,
            CountTarget::WiCnn(a, b) => Pipeline::WiCnn(a, b),
            other => {
                return Err(Error::config(format!(
                    "`{other}` is not a learned pipeline"
                )))
            }
        })
    }
}

/// Tunables of the conventional stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineOptions {
    /// Feed FNN outputs back into the conventional recursion. The networks
    /// are trained open-loop.
    pub closed_loop: bool,
    /// TA coefficient of LSTM-DPA-TA.
    pub ta_alpha: f64,
    pub sta_alpha: f64,
    pub sta_beta: usize,
    pub add_tt_alpha: f64,
    pub add_tt_beta: usize,
    pub add_tt_taps: usize,
    pub rbf_r0: f64,
    /// WI pilot symbol positions; empty means `{0, I/2, I-1}`.
    pub wi_positions: Vec<usize>,
    pub wi_taps: usize,
    pub wi_pilots: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        let s = StaParams::default();
        let a = AddTtParams::default();
        Self {
            closed_loop: false,
            ta_alpha: 2.0,
            sta_alpha: s.alpha,
            sta_beta: s.beta,
            add_tt_alpha: a.alpha,
            add_tt_beta: a.beta,
            add_tt_taps: a.taps,
            rbf_r0: 1024.0,
            wi_positions: Vec::new(),
            wi_taps: 8,
            wi_pilots: 8,
        }
    }
}

impl PipelineOptions {
    pub fn sta_params(&self) -> StaParams {
        StaParams {
            alpha: self.sta_alpha,
            beta: self.sta_beta,
        }
    }

    pub fn add_tt_params(&self) -> AddTtParams {
        AddTtParams {
            alpha: self.add_tt_alpha,
            beta: self.add_tt_beta,
            taps: self.add_tt_taps,
        }
    }

    pub fn wi_config(&self, scheme: WiScheme, n_symbols: usize) -> WiFrameConfig {
        let mut w = WiFrameConfig::new(scheme, n_symbols);
        if !self.wi_positions.is_empty() {
            w.positions = self.wi_positions.clone();
        }
        w.taps = self.wi_taps;
        w.n_pilots = self.wi_pilots;
        w
    }
}

/// CNN stage of the WI pipelines: SR-CNN for low mobility, DN-CNN above
/// 250 Hz.
pub fn wi_cnn_kind(doppler_hz: f64) -> CnnKind {
    if doppler_hz <= 250.0 {
        CnnKind::Sr
    } else {
        CnnKind::Dn
    }
}

/// Side information a receiver is assumed to know.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameInfo {
    pub noise_var: f64,
    pub doppler_hz: f64,
}

/// `K_on x I` grid as a row-major `2K_on x I` image.
pub fn grid_to_image(h: &CGrid) -> Vec<f64> {
    let (k, n) = (h.rows(), h.cols());
    let mut out = vec![0.0; 2 * k * n];
    for i in 0..n {
        for (r, z) in h.col(i).iter().enumerate() {
            out[r * n + i] = z.re;
            out[(k + r) * n + i] = z.im;
        }
    }
    out
}

pub fn image_to_grid(img: &[f64], k_on: usize, n: usize) -> CGrid {
    CGrid::from_fn(k_on, n, |r, i| {
        C64::new(img[r * n + i], img[(k_on + r) * n + i])
    })
}

/// Comb pilot LS values, `K_p x I`.
pub fn comb_pilot_ls(rx: &RxFrame, ctx: &EstContext) -> CGrid {
    CGrid::from_fn(ctx.pilot_pos.len(), rx.y.cols(), |j, i| {
        rx.y.get(ctx.pilot_pos[j], i) / ctx.pilot_vals[j]
    })
}

fn pilot_ls_column(y: &[C64], ctx: &EstContext) -> Vec<C64> {
    ctx.pilot_pos
        .iter()
        .zip(&ctx.pilot_vals)
        .map(|(&p, &v)| y[p] / v)
        .collect()
}

/// The conventional stage of a pipeline on its own.
#[derive(Debug)]
pub struct PreStage {
    pipeline: Pipeline,
    opts: PipelineOptions,
    rbf: OnceLock<(usize, RbfInterpolator)>,
}

impl PreStage {
    pub fn new(pipeline: Pipeline, opts: PipelineOptions) -> Self {
        Self {
            pipeline,
            opts,
            rbf: OnceLock::new(),
        }
    }

    pub fn pipeline(&self) -> Pipeline {
        self.pipeline
    }

    pub fn opts(&self) -> &PipelineOptions {
        &self.opts
    }

    fn interpolator(&self, n_symbols: usize, ctx: &EstContext) -> Result<&RbfInterpolator> {
        if let Some((n, i)) = self.rbf.get() {
            if *n == n_symbols {
                return Ok(i);
            }
            return Err(Error::shape(format!(
                "RBF interpolator built for {n} symbols, frame has {n_symbols}"
            )));
        }
        let built = comb_interpolator(n_symbols, self.opts.rbf_r0, ctx)?;
        Ok(&self.rbf.get_or_init(|| (n_symbols, built)).1)
    }

    pub fn estimate(
        &self,
        rx: &RxFrame,
        ctx: &EstContext,
        info: &FrameInfo,
    ) -> Result<ChannelEstimate> {
        let tally = Tally::new();
        let h0 = ls_preamble(&rx.preambles, &ctx.preamble, &tally)?;
        let mut est = match self.pipeline {
            Pipeline::DpaFnn | Pipeline::LstmFnnDpa => dpa(rx, &h0, ctx, &tally)?,
            Pipeline::StaFnn => sta(rx, &h0, self.opts.sta_params(), ctx, &tally)?,
            Pipeline::TrfiFnn => trfi(rx, &h0, ctx, &tally)?,
            Pipeline::LstmDpaTa => {
                let p = StaParams {
                    alpha: self.opts.ta_alpha,
                    beta: 0,
                };
                let mut e = sta(rx, &h0, p, ctx, &tally)?;
                e.method = "DPA-TA".into();
                e
            }
            Pipeline::ChannelNet => {
                let interp = self.interpolator(rx.y.cols(), ctx)?;
                rbf_apply(interp, &comb_pilot_ls(rx, ctx), ctx)?
            }
            Pipeline::TsChannelNet => add_tt(rx, &h0, self.opts.add_tt_params(), ctx, &tally)?,
            Pipeline::WiCnn(scheme, _) => {
                let wcfg = self.opts.wi_config(scheme, rx.y.cols());
                let pilots = wi_pilot_estimates(rx, &wcfg, ctx)?;
                let mut noise = vec![info.noise_var / ctx.cfg.n_preambles as f64];
                noise.extend(std::iter::repeat_n(
                    wcfg.pilot_noise(info.noise_var, ctx.k_on()),
                    wcfg.positions.len(),
                ));
                wi_interpolate(&pilots, &h0, &wcfg, info.doppler_hz, &noise, ctx)?
            }
        };
        est.reliable = None;
        Ok(est)
    }
}

/// A pipeline with its trained networks.
#[derive(Debug)]
pub struct DlEstimator {
    pub pipeline: Pipeline,
    nets: Vec<Net>,
    pre: PreStage,
}

/// `(input features, output features)` of a network: last-axis sizes for
/// dense and LSTM heads, channel counts for convolutional ones.
fn io_features(specs: &[LayerSpec]) -> (usize, usize) {
    let first = match specs.first() {
        Some(LayerSpec::Dense { inputs, .. }) | Some(LayerSpec::Lstm { inputs, .. }) => *inputs,
        Some(LayerSpec::Conv2d { in_ch, .. }) | Some(LayerSpec::ConvLstm { in_ch, .. }) => *in_ch,
        _ => 0,
    };
    let last = specs
        .iter()
        .rev()
        .find_map(|s| match *s {
            LayerSpec::Dense { outputs, .. } => Some(outputs),
            LayerSpec::Lstm { hidden, .. } | LayerSpec::ConvLstm { hidden, .. } => Some(hidden),
            LayerSpec::Conv2d { out_ch, .. } => Some(out_ch),
            _ => None,
        })
        .unwrap_or(0);
    (first, last)
}

impl DlEstimator {
    /// Checks that `nets` fit the pipeline: one per role, with matching
    /// input and output sizes.
    pub fn new(
        pipeline: Pipeline,
        nets: Vec<Net>,
        opts: PipelineOptions,
        ctx: &EstContext,
    ) -> Result<Self> {
        let roles = pipeline.roles();
        if nets.len() != roles.len() {
            return Err(Error::config(format!(
                "{pipeline} needs {} trained network(s), got {}",
                roles.len(),
                nets.len()
            )));
        }
        let n = 2 * ctx.k_on();
        let want = match pipeline {
            Pipeline::DpaFnn | Pipeline::StaFnn | Pipeline::TrfiFnn | Pipeline::LstmDpaTa => (n, n),
            Pipeline::LstmFnnDpa => (n + 2 * ctx.pilot_pos.len(), n),
            _ => (1, 1),
        };
        for (net, role) in nets.iter().zip(roles) {
            let got = io_features(net.specs());
            if got != want {
                return Err(Error::config(format!(
                    "{pipeline} network `{role}` maps {} -> {} features, expected {} -> {}",
                    got.0, got.1, want.0, want.1
                )));
            }
        }
        if pipeline == Pipeline::TsChannelNet && !nets[0].is_recurrent() {
            return Err(Error::config("TS-ChannelNet needs a recurrent network"));
        }
        if !(opts.ta_alpha >= 1.0) {
            return Err(Error::config(format!(
                "TA alpha must be >= 1, got {}",
                opts.ta_alpha
            )));
        }
        Ok(Self {
            pipeline,
            nets,
            pre: PreStage::new(pipeline, opts),
        })
    }

    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn opts(&self) -> &PipelineOptions {
        &self.pre.opts
    }

    /// The conventional estimate the pipeline refines.
    pub fn pre_stage(
        &self,
        rx: &RxFrame,
        ctx: &EstContext,
        info: &FrameInfo,
    ) -> Result<ChannelEstimate> {
        self.pre.estimate(rx, ctx, info)
    }

    pub fn estimate(
        &self,
        rx: &RxFrame,
        ctx: &EstContext,
        info: &FrameInfo,
    ) -> Result<ChannelEstimate> {
        let k_on = ctx.k_on();
        let n = rx.y.cols();
        let tally = Tally::new();
        let h0 = ls_preamble(&rx.preambles, &ctx.preamble, &tally)?;
        let mut h = CGrid::zeros(k_on, n);
        match self.pipeline {
            Pipeline::DpaFnn | Pipeline::StaFnn | Pipeline::TrfiFnn => {
                let net = &self.nets[0];
                let mut prev = h0;
                for i in 0..n {
                    let y = rx.y.col(i);
                    let conv = match self.pipeline {
                        Pipeline::DpaFnn => dpa_step(y, &prev, ctx, &tally).0,
                        Pipeline::StaFnn => {
                            sta_step(y, &prev, self.opts().sta_params(), ctx, &tally)
                        }
                        _ => {
                            let y_prev = if i == 0 { None } else { Some(rx.y.col(i - 1)) };
                            trfi_step(y, y_prev, &prev, ctx, &tally).0
                        }
                    };
                    let out = net.forward(&Tensor::new(&[1, 2 * k_on], stack_vec(&conv))?)?;
                    let refined = unstack_vec(&out.data);
                    h.col_mut(i).copy_from_slice(&refined);
                    prev = if self.opts().closed_loop {
                        refined
                    } else {
                        conv
                    };
                }
            }
            Pipeline::LstmDpaTa => {
                let net = &self.nets[0];
                let mut state = net.new_step_state();
                let w = 1.0 / self.opts().ta_alpha;
                let mut prev = h0;
                for i in 0..n {
                    let pred = unstack_vec(&net.step(&stack_vec(&prev), &mut state)?);
                    let (h_dpa, _) = dpa_step(rx.y.col(i), &pred, ctx, &tally);
                    let cur = blend(&prev, &h_dpa, w, &tally);
                    h.col_mut(i).copy_from_slice(&cur);
                    prev = cur;
                }
            }
            Pipeline::LstmFnnDpa => {
                let net = &self.nets[0];
                let mut state = net.new_step_state();
                let mut prev = h0;
                for i in 0..n {
                    let y = rx.y.col(i);
                    let mut x = stack_vec(&prev);
                    x.extend(stack_vec(&pilot_ls_column(y, ctx)));
                    let pred = unstack_vec(&net.step(&x, &mut state)?);
                    let (h_dpa, _) = dpa_step(y, &pred, ctx, &tally);
                    h.col_mut(i).copy_from_slice(&h_dpa);
                    prev = h_dpa;
                }
            }
            Pipeline::ChannelNet | Pipeline::WiCnn(..) => {
                let pre = self.pre_stage(rx, ctx, info)?;
                let mut img = Tensor::new(&[1, 1, 2 * k_on, n], grid_to_image(&pre.h))?;
                for net in &self.nets {
                    img = net.forward(&img)?;
                }
                h = image_to_grid(&img.data, k_on, n);
            }
            Pipeline::TsChannelNet => {
                let pre = self.pre_stage(rx, ctx, info)?;
                let seq = Tensor::new(&[1, n, 1, 2 * k_on, 1], pre.h.stack_real())?;
                let out = self.nets[0].forward(&seq)?;
                h = CGrid::unstack_real(k_on, n, &out.data);
            }
        }
        Ok(ChannelEstimate::new(h, self.pipeline.name()))
    }
}

/// Flattened `(inputs, targets)` per record.
pub type Records = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Training pairs of one frame: `(inputs, targets)`, one entry per record.
/// SBS FNN records are symbols; LSTM and FBF records are whole frames.
/// `tx` is the transmitted active grid, used for the genie-decision input
/// sequences of the LSTM pipelines.
pub fn frame_records(
    pre: &PreStage,
    rx: &RxFrame,
    tx: &CGrid,
    truth: &CGrid,
    ctx: &EstContext,
    info: &FrameInfo,
) -> Result<Records> {
    let n = rx.y.cols();
    let tally = Tally::new();
    let h0 = ls_preamble(&rx.preambles, &ctx.preamble, &tally)?;
    let target_seq = || truth.stack_real();
    Ok(match pre.pipeline {
        Pipeline::DpaFnn | Pipeline::StaFnn | Pipeline::TrfiFnn => {
            let pre = pre.estimate(rx, ctx, info)?;
            (0..n)
                .map(|i| (stack_vec(pre.h.col(i)), stack_vec(truth.col(i))))
                .unzip()
        }
        Pipeline::LstmDpaTa => {
            let w = 1.0 / pre.opts.ta_alpha;
            let mut prev = h0;
            let mut xs = Vec::with_capacity(n * 2 * ctx.k_on());
            for i in 0..n {
                xs.extend(stack_vec(&prev));
                let genie: Vec<C64> =
                    rx.y.col(i)
                        .iter()
                        .zip(tx.col(i))
                        .map(|(a, b)| a / b)
                        .collect();
                prev = blend(&prev, &genie, w, &tally);
            }
            (vec![xs], vec![target_seq()])
        }
        Pipeline::LstmFnnDpa => {
            let mut prev = h0;
            let mut xs = Vec::new();
            for i in 0..n {
                let y = rx.y.col(i);
                xs.extend(stack_vec(&prev));
                xs.extend(stack_vec(&pilot_ls_column(y, ctx)));
                prev = y.iter().zip(tx.col(i)).map(|(a, b)| a / b).collect();
            }
            (vec![xs], vec![target_seq()])
        }
        Pipeline::ChannelNet | Pipeline::WiCnn(..) => {
            let pre = pre.estimate(rx, ctx, info)?;
            (vec![grid_to_image(&pre.h)], vec![grid_to_image(truth)])
        }
        Pipeline::TsChannelNet => {
            let pre = pre.estimate(rx, ctx, info)?;
            (vec![pre.h.stack_real()], vec![target_seq()])
        }
    })
}

/// Per-record input and target shapes (without the batch axis).
pub fn record_shapes(
    pipeline: Pipeline,
    ctx: &EstContext,
    n_symbols: usize,
) -> (Vec<usize>, Vec<usize>) {
    let n = 2 * ctx.k_on();
    match pipeline {
        Pipeline::DpaFnn | Pipeline::StaFnn | Pipeline::TrfiFnn => (vec![n], vec![n]),
        Pipeline::LstmDpaTa => (vec![n_symbols, n], vec![n_symbols, n]),
        Pipeline::LstmFnnDpa => (
            vec![n_symbols, n + 2 * ctx.pilot_pos.len()],
            vec![n_symbols, n],
        ),
        Pipeline::ChannelNet | Pipeline::WiCnn(..) => {
            (vec![1, n, n_symbols], vec![1, n, n_symbols])
        }
        Pipeline::TsChannelNet => (vec![n_symbols, 1, n, 1], vec![n_symbols, 1, n, 1]),
    }
}

/// Trains every network of the pipeline in stage order. Later stages see
/// the outputs of the earlier trained stages as inputs. Returns the
/// networks and one loss history per network.
pub fn train_pipeline(
    pipeline: Pipeline,
    ctx: &EstContext,
    inputs: &Tensor,
    targets: &Tensor,
    cfg: &TrainConfig,
) -> Result<(Vec<Net>, Vec<Vec<f64>>)> {
    let mut nets = pipeline.init_nets(ctx, cfg.seed)?;
    // SBS batch sizes count symbols; LSTM records hold a whole frame each.
    let mut cfg = cfg.clone();
    if pipeline.is_sbs() && pipeline.is_recurrent() {
        let seq_len = inputs.shape.get(1).copied().unwrap_or(1).max(1);
        cfg.batch_size = (cfg.batch_size / seq_len).max(1);
    }
    let cfg = &cfg;
    let mut histories = Vec::new();
    let mut x = inputs.clone();
    let stages = nets.len();
    for (s, net) in nets.iter_mut().enumerate() {
        histories.push(train(net, &x, targets, cfg)?);
        if s + 1 < stages {
            x = forward_batched(net, &x, 64)?;
        }
    }
    Ok((nets, histories))
}

/// Inference over a large batch in chunks.
pub fn forward_batched(net: &Net, x: &Tensor, chunk: usize) -> Result<Tensor> {
    let n = x.batch();
    let mut data = Vec::with_capacity(x.len());
    let mut shape = None;
    let mut start = 0;
    while start < n {
        let rows: Vec<usize> = (start..(start + chunk).min(n)).collect();
        let y = net.forward(&x.gather(&rows))?;
        shape.get_or_insert_with(|| y.shape.clone());
        data.extend(y.data);
        start += chunk;
    }
    let mut shape = shape.unwrap_or_else(|| x.shape.clone());
    shape[0] = n;
    Tensor::new(&shape, data)
}
