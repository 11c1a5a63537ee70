//! Scenarios, datasets, Monte-Carlo evaluation and result files.

mod dataset;
mod eval;
mod models;
mod report;

pub use dataset::{gen_dataset, records_for_samples, Dataset, DatasetSplit};
pub use eval::{run_montecarlo, Evaluator, FrameStat};
pub use models::{load_models, model_paths, save_models, train_models, Trained};
pub use report::{MetricRow, MetricsReport};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelModel;
use crate::complexity::{CnnKind, CountTarget, WiScheme};
use crate::error::{Error, Result};
use crate::est_dl::{Pipeline, PipelineOptions};
use crate::nn::TrainConfig;
use crate::phy::{Modulation, PhyConfig, PilotLayout};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhySpec {
    pub n_symbols: usize,
    pub modulation: Modulation,
}

impl Default for PhySpec {
    fn default() -> Self {
        Self {
            n_symbols: 100,
            modulation: Modulation::Qpsk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSpec {
    /// `VTV-UC` or `VTV-SDWW`.
    pub model: String,
    /// Overrides the model default (UC 250 Hz, SDWW 500 Hz).
    pub doppler_hz: Option<f64>,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            model: "VTV-SDWW".into(),
            doppler_hz: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSpec {
    /// Training symbols for SBS pipelines, frames for FBF ones.
    pub samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub snr_db: f64,
}

impl Default for TrainSpec {
    fn default() -> Self {
        let d = TrainConfig::desk();
        Self {
            samples: 20_000,
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            snr_db: d.train_snr_db,
        }
    }
}

impl TrainSpec {
    pub fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            train_snr_db: self.snr_db,
            seed,
        }
    }
}

/// A simulation setup as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub seed: u64,
    /// Frames per SNR point.
    pub frames: usize,
    pub snr_db: Vec<f64>,
    pub estimators: Vec<String>,
    /// Where trained networks are read from and written to.
    pub models_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub phy: PhySpec,
    pub channel: ChannelSpec,
    pub pipeline: PipelineOptions,
    pub train: TrainSpec,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 1,
            frames: 200,
            snr_db: (0..=8).map(|i| 5.0 * i as f64).collect(),
            estimators: Vec::new(),
            models_dir: PathBuf::from("models"),
            workers: 0,
            phy: PhySpec::default(),
            channel: ChannelSpec::default(),
            pipeline: PipelineOptions::default(),
            train: TrainSpec::default(),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::config("frames must be at least 1"));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| s.is_nan()) {
            return Err(Error::config("snr_db must list at least one SNR"));
        }
        self.phy_config().validate()?;
        self.channel_model()?;
        self.estimator_specs()?;
        Ok(())
    }

    pub fn phy_config(&self) -> PhyConfig {
        PhyConfig::ieee80211p(self.phy.n_symbols, self.phy.modulation)
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        ChannelModel::by_name(&self.channel.model, self.channel.doppler_hz)
    }

    pub fn estimator_specs(&self) -> Result<Vec<EstimatorSpec>> {
        self.estimators.iter().map(|e| e.parse()).collect()
    }

    /// Short human-readable description stored in dataset headers.
    pub fn label(&self) -> String {
        let ch = self
            .channel_model()
            .map(|m| m.label())
            .unwrap_or_else(|_| self.channel.model.clone());
        format!("{ch}, I={}, {:?}", self.phy.n_symbols, self.phy.modulation)
    }
}

/// Frame layout an LMMSE curve is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LmmseFrame {
    /// 802.11p comb pilots only.
    Comb,
    /// The full pilot symbols of the FP WI schemes.
    Fp,
    /// The sparse pilot symbols of WI-LP.
    Lp,
}

/// One curve of an evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorSpec {
    /// The true channel.
    Genie,
    /// Preamble LS estimate held over the whole frame.
    LsHeld,
    /// 2D LMMSE with the true channel statistics over every known cell of
    /// its frame: preambles, comb pilots and any pilot symbols.
    Lmmse(LmmseFrame),
    /// DPA, STA, TRFI, ADD-TT, RBF or WI.
    Conventional(CountTarget),
    Learned(Pipeline),
}

impl EstimatorSpec {
    pub fn name(self) -> String {
        match self {
            EstimatorSpec::Genie => "Genie".into(),
            EstimatorSpec::LsHeld => "LS".into(),
            EstimatorSpec::Lmmse(LmmseFrame::Comb) => "LMMSE".into(),
            EstimatorSpec::Lmmse(LmmseFrame::Fp) => "LMMSE-FP".into(),
            EstimatorSpec::Lmmse(LmmseFrame::Lp) => "LMMSE-LP".into(),
            EstimatorSpec::Conventional(t) => t.name(),
            EstimatorSpec::Learned(p) => p.name(),
        }
    }

    /// The pipeline whose pre-stage a conventional estimator is.
    pub(crate) fn pre_stage_of(t: CountTarget) -> Option<Pipeline> {
        Some(match t {
            CountTarget::Dpa => Pipeline::DpaFnn,
            CountTarget::Sta => Pipeline::StaFnn,
            CountTarget::Trfi => Pipeline::TrfiFnn,
            CountTarget::AddTt => Pipeline::TsChannelNet,
            CountTarget::Rbf => Pipeline::ChannelNet,
            CountTarget::Wi(s) => Pipeline::WiCnn(s, CnnKind::Sr),
            _ => return None,
        })
    }

    pub fn layout(self, opts: &PipelineOptions, n_symbols: usize) -> PilotLayout {
        match self {
            EstimatorSpec::Conventional(t) => match Self::pre_stage_of(t) {
                Some(p) => p.frame_layout(opts, n_symbols),
                None => PilotLayout::Comb,
            },
            EstimatorSpec::Learned(p) => p.frame_layout(opts, n_symbols),
            EstimatorSpec::Lmmse(LmmseFrame::Fp) => {
                opts.wi_config(WiScheme::FpAls, n_symbols).layout()
            }
            EstimatorSpec::Lmmse(LmmseFrame::Lp) => {
                opts.wi_config(WiScheme::Lp, n_symbols).layout()
            }
            _ => PilotLayout::Comb,
        }
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GENIE" | "IDEAL" => return Ok(EstimatorSpec::Genie),
            "LMMSE" => return Ok(EstimatorSpec::Lmmse(LmmseFrame::Comb)),
            "LMMSE-FP" => return Ok(EstimatorSpec::Lmmse(LmmseFrame::Fp)),
            "LMMSE-LP" => return Ok(EstimatorSpec::Lmmse(LmmseFrame::Lp)),
            _ => {}
        }
        let t: CountTarget = s.parse()?;
        if t == CountTarget::Ls {
            return Ok(EstimatorSpec::LsHeld);
        }
        if Self::pre_stage_of(t).is_some() {
            return Ok(EstimatorSpec::Conventional(t));
        }
        s.parse().map(EstimatorSpec::Learned)
    }
}

/// Runs `f` on a pool of `workers` threads (0: all cores).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests;
