//! Conventional estimators. Everything here works on the active
//! subcarriers only (`K_on` rows, increasing frequency).

mod lmmse;
mod ls;
mod rbf;
mod sbs;
pub mod spline;
mod wi;

pub use lmmse::{lmmse_weights, CorrelationModel, Lmmse, Observation};
pub use ls::{ls_pilots, ls_preamble};
pub use rbf::{comb_interpolator, rbf_apply, rbf_interpolate, RbfInterpolator};
pub(crate) use sbs::blend;
pub use sbs::{
    add_tt, dpa, dpa_step, frequency_average, sta, sta_step, time_average, time_truncate, trfi,
    trfi_step, AddTtParams, StaParams,
};
pub use wi::{wi_interpolate, wi_pilot_estimates, wi_weights, WiFrameConfig, WiScheme};

use crate::grid::{CGrid, C64};
use crate::phy::{FrameGrid, Modulation, PhyConfig};

/// Estimated `K_on x I` channel with a provenance label. `reliable` holds the
/// per-symbol reliable-set size for TRFI.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub h: CGrid,
    pub method: String,
    pub reliable: Option<Vec<usize>>,
}

impl ChannelEstimate {
    pub fn new(h: CGrid, method: impl Into<String>) -> Self {
        Self {
            h,
            method: method.into(),
            reliable: None,
        }
    }
}

/// Received frame restricted to the active subcarriers.
#[derive(Debug, Clone, PartialEq)]
pub struct RxFrame {
    /// `K_on x I`.
    pub y: CGrid,
    /// `K_on x P`.
    pub preambles: CGrid,
}

impl RxFrame {
    pub fn from_grid(grid: &FrameGrid, cfg: &PhyConfig) -> Self {
        Self {
            y: grid.active(cfg),
            preambles: grid.active_preambles(cfg),
        }
    }
}

/// Static per-configuration facts every estimator needs.
#[derive(Debug, Clone, PartialEq)]
pub struct EstContext {
    pub cfg: PhyConfig,
    pub pilot_pos: Vec<usize>,
    pub data_pos: Vec<usize>,
    pub pilot_vals: Vec<C64>,
    pub preamble: Vec<C64>,
    pub is_pilot: Vec<bool>,
    /// Signed subcarrier index of each active row.
    pub carrier: Vec<i32>,
}

impl EstContext {
    pub fn new(cfg: &PhyConfig) -> Self {
        let pilot_pos = cfg.pilot_positions();
        let mut is_pilot = vec![false; cfg.k_on()];
        for &p in &pilot_pos {
            is_pilot[p] = true;
        }
        Self {
            cfg: cfg.clone(),
            data_pos: cfg.data_positions(),
            pilot_vals: cfg.pilot_values(),
            preamble: cfg.preamble_active(),
            carrier: cfg.used_carriers.clone(),
            pilot_pos,
            is_pilot,
        }
    }

    pub fn k_on(&self) -> usize {
        self.carrier.len()
    }

    pub fn modulation(&self) -> Modulation {
        self.cfg.modulation
    }

    /// Known symbols at the comb pilots, scattered over `K_on` (zero
    /// elsewhere).
    pub fn pilot_column(&self) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.k_on()];
        for (j, &p) in self.pilot_pos.iter().enumerate() {
            v[p] = self.pilot_vals[j];
        }
        v
    }
}
