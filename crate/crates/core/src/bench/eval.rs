//! Monte-Carlo BER/NMSE evaluation.

use rayon::prelude::*;

use super::report::{MetricRow, MetricsReport};
use super::{load_models, with_workers, EstimatorSpec, LmmseFrame, Scenario};
use crate::channel::ChannelModel;
use crate::complexity::{CountTarget, WiScheme};
use crate::error::{Error, Result};
use crate::est_conv::{
    ls_preamble, ChannelEstimate, CorrelationModel, EstContext, Lmmse, Observation, RxFrame,
};
use crate::est_dl::{DlEstimator, FrameInfo, Pipeline, PreStage};
use crate::grid::{CGrid, C64};
use crate::link::{noise_variance, simulate_frame, SimFrame};
use crate::nn::Net;
use crate::phy::{demap_bits, sparse_pilot_positions, PhyConfig, PilotLayout};
use crate::tally::Tally;

/// Per-frame outcome of one estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStat {
    /// `||H_hat - H||^2` over the active grid.
    pub err: f64,
    /// `||H||^2`.
    pub pow: f64,
    pub bit_errors: u64,
    pub bits: u64,
}

enum Runner {
    Genie,
    LsHeld,
    Lmmse,
    Pre(PreStage),
    Dl(DlEstimator),
}

/// Estimators bound to their networks, ready to run over frames.
pub struct Evaluator {
    scenario: Scenario,
    cfg: PhyConfig,
    ctx: EstContext,
    model: ChannelModel,
    specs: Vec<EstimatorSpec>,
    runners: Vec<Runner>,
    /// Distinct frame layouts and, per estimator, the index of its layout.
    layouts: Vec<PilotLayout>,
    layout_of: Vec<usize>,
}

impl Evaluator {
    /// `nets` supplies the trained networks of each learned pipeline.
    pub fn new(
        scenario: &Scenario,
        mut nets: impl FnMut(Pipeline) -> Result<Vec<Net>>,
    ) -> Result<Self> {
        scenario.validate()?;
        let specs = scenario.estimator_specs()?;
        if specs.is_empty() {
            return Err(Error::config("no estimators to evaluate"));
        }
        let cfg = scenario.phy_config();
        let ctx = EstContext::new(&cfg);
        let opts = &scenario.pipeline;
        let mut runners = Vec::new();
        let mut layouts: Vec<PilotLayout> = Vec::new();
        let mut layout_of = Vec::new();
        for &spec in &specs {
            runners.push(match spec {
                EstimatorSpec::Genie => Runner::Genie,
                EstimatorSpec::LsHeld => Runner::LsHeld,
                EstimatorSpec::Lmmse(_) => Runner::Lmmse,
                EstimatorSpec::Conventional(t) => {
                    let p = EstimatorSpec::pre_stage_of(t).expect("conventional spec");
                    Runner::Pre(PreStage::new(p, opts.clone()))
                }
                EstimatorSpec::Learned(p) => {
                    Runner::Dl(DlEstimator::new(p, nets(p)?, opts.clone(), &ctx)?)
                }
            });
            let layout = spec.layout(opts, cfg.n_symbols);
            let wi = match spec {
                EstimatorSpec::Conventional(CountTarget::Wi(s))
                | EstimatorSpec::Learned(Pipeline::WiCnn(s, _)) => Some(s),
                EstimatorSpec::Lmmse(LmmseFrame::Fp) => Some(WiScheme::FpAls),
                EstimatorSpec::Lmmse(LmmseFrame::Lp) => Some(WiScheme::Lp),
                _ => None,
            };
            if let Some(s) = wi {
                opts.wi_config(s, cfg.n_symbols)
                    .validate(cfg.n_symbols, ctx.k_on())?;
            }
            let idx = match layouts.iter().position(|l| *l == layout) {
                Some(i) => i,
                None => {
                    layouts.push(layout);
                    layouts.len() - 1
                }
            };
            layout_of.push(idx);
        }
        Ok(Self {
            scenario: scenario.clone(),
            model: scenario.channel_model()?,
            cfg,
            ctx,
            specs,
            runners,
            layouts,
            layout_of,
        })
    }

    pub fn specs(&self) -> &[EstimatorSpec] {
        &self.specs
    }

    /// Known cells of a frame as `(row, symbol, transmitted value)`; the
    /// preambles sit at symbols `-P..-1`.
    fn known_cells(&self, layout: &PilotLayout) -> Vec<(usize, isize, C64)> {
        let k_on = self.ctx.k_on();
        let p = self.cfg.n_preambles as isize;
        let mut cells = Vec::new();
        for j in 0..p {
            cells.extend((0..k_on).map(|r| (r, j - p, self.ctx.preamble[r])));
        }
        for i in 0..self.cfg.n_symbols {
            if layout.pilot_symbols().contains(&i) {
                let rows: Vec<usize> = match layout {
                    PilotLayout::SparsePilotSymbols { n_pilots, .. } => {
                        sparse_pilot_positions(k_on, *n_pilots)
                    }
                    _ => (0..k_on).collect(),
                };
                cells.extend(
                    rows.into_iter()
                        .map(|r| (r, i as isize, self.ctx.preamble[r])),
                );
            } else {
                let pilots = self.ctx.pilot_pos.iter().zip(&self.ctx.pilot_vals);
                cells.extend(pilots.map(|(&r, &v)| (r, i as isize, v)));
            }
        }
        cells
    }

    /// LMMSE over the known cells of `layout` at the nominal noise level of
    /// `snr_db`.
    fn lmmse(&self, layout: &PilotLayout, snr_db: f64) -> Result<Lmmse> {
        let k_on = self.ctx.k_on();
        let obs: Vec<Observation> = self
            .known_cells(layout)
            .into_iter()
            .map(|(row, t, _)| Observation {
                row,
                time: t as f64,
            })
            .collect();
        let nominal_power = k_on as f64 / self.cfg.fft_size as f64;
        let corr = CorrelationModel::new(&self.model, &self.ctx);
        Lmmse::new(
            &obs,
            k_on,
            self.cfg.n_symbols,
            &corr,
            noise_variance(nominal_power, snr_db),
        )
    }

    fn lmmse_observations(&self, rx: &RxFrame, layout: &PilotLayout) -> Vec<C64> {
        let p = rx.preambles.cols() as isize;
        self.known_cells(layout)
            .into_iter()
            .map(|(r, t, x)| {
                let y = if t < 0 {
                    rx.preambles.get(r, (t + p) as usize)
                } else {
                    rx.y.get(r, t as usize)
                };
                y / x
            })
            .collect()
    }

    fn estimate(&self, e: usize, f: &SimFrame, lmmse: Option<&Lmmse>) -> Result<CGrid> {
        let info = FrameInfo {
            noise_var: f.noise_var,
            doppler_hz: self.model.doppler_hz,
        };
        let est: ChannelEstimate = match &self.runners[e] {
            Runner::Genie => return Ok(f.truth.clone()),
            Runner::LsHeld => {
                let h0 = ls_preamble(&f.rx.preambles, &self.ctx.preamble, &Tally::new())?;
                return Ok(CGrid::from_columns(h0.len(), &vec![h0; f.rx.y.cols()]));
            }
            Runner::Lmmse => lmmse
                .expect("built per SNR")
                .estimate(&self.lmmse_observations(&f.rx, &f.layout))?,
            Runner::Pre(p) => p.estimate(&f.rx, &self.ctx, &info)?,
            Runner::Dl(d) => d.estimate(&f.rx, &self.ctx, &info)?,
        };
        Ok(est.h)
    }

    /// Scores every estimator on frame `frame` at SNR point `snr_index`.
    /// `lmmse[e]` holds the LMMSE of estimator `e` at this SNR, if it is one.
    pub fn run_frame(
        &self,
        frame: u64,
        snr_index: usize,
        lmmse: &[Option<Lmmse>],
    ) -> Result<Vec<FrameStat>> {
        let snr_db = self.scenario.snr_db[snr_index];
        let frames = self
            .layouts
            .iter()
            .map(|l| {
                simulate_frame(
                    &self.cfg,
                    &self.model,
                    l,
                    self.scenario.seed,
                    frame,
                    snr_index as u64,
                    snr_db,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        (0..self.runners.len())
            .map(|e| {
                let f = &frames[self.layout_of[e]];
                let h = self.estimate(e, f, lmmse[e].as_ref())?;
                Ok(score(&h, f, &self.ctx))
            })
            .collect()
    }

    /// Runs the scenario. The result does not depend on `workers`.
    pub fn run(&self, workers: usize) -> Result<MetricsReport> {
        let n_est = self.runners.len();
        let mut per_snr = Vec::with_capacity(self.scenario.snr_db.len());
        for (s, &snr_db) in self.scenario.snr_db.iter().enumerate() {
            let lmmse = (0..n_est)
                .map(|e| match self.runners[e] {
                    Runner::Lmmse => self
                        .lmmse(&self.layouts[self.layout_of[e]], snr_db)
                        .map(Some),
                    _ => Ok(None),
                })
                .collect::<Result<Vec<_>>>()?;
            let frames: Result<Vec<Vec<FrameStat>>> = with_workers(workers, || {
                (0..self.scenario.frames as u64)
                    .into_par_iter()
                    .map(|f| self.run_frame(f, s, &lmmse))
                    .collect()
            })?;
            per_snr.push(frames?);
        }
        let mut rows = Vec::with_capacity(n_est * per_snr.len());
        for (e, spec) in self.specs.iter().enumerate() {
            for (s, frames) in per_snr.iter().enumerate() {
                let stats: Vec<FrameStat> = frames.iter().map(|f| f[e]).collect();
                rows.push(MetricRow::from_frames(
                    &spec.name(),
                    self.scenario.snr_db[s],
                    &stats,
                ));
            }
        }
        MetricsReport::new(rows)
    }
}

/// Equalizes with `h`, demaps the data cells and compares against the sent
/// bits.
pub(crate) fn score(h: &CGrid, f: &SimFrame, ctx: &EstContext) -> FrameStat {
    let pilot_syms = f.layout.pilot_symbols();
    let mut eq = Vec::with_capacity(f.bits.len());
    for i in (0..f.rx.y.cols()).filter(|i| !pilot_syms.contains(i)) {
        let (y, hc) = (f.rx.y.col(i), h.col(i));
        eq.extend(ctx.data_pos.iter().map(|&k| y[k] / hc[k]));
    }
    let bits = demap_bits(&eq, ctx.modulation());
    let bit_errors = bits.iter().zip(&f.bits).filter(|(a, b)| a != b).count() as u64;
    FrameStat {
        err: h.distance_sqr(&f.truth),
        pow: f.truth.energy(),
        bit_errors,
        bits: f.bits.len() as u64,
    }
}

/// Loads the scenario's trained networks from its model directory and runs
/// it.
pub fn run_montecarlo(scenario: &Scenario) -> Result<MetricsReport> {
    let dir = scenario.models_dir.clone();
    Evaluator::new(scenario, |p| load_models(&dir, p))?.run(scenario.workers)
}
