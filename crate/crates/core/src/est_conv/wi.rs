//! Weighted interpolation between pilot OFDM symbols.

use log::warn;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{ChannelEstimate, EstContext, RxFrame};
pub use crate::complexity::WiScheme;
use crate::error::{Error, Result};
use crate::grid::{CGrid, C64};
use crate::phy::{sparse_pilot_positions, PilotLayout};
use crate::special::j0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WiFrameConfig {
    /// 0-based pilot symbol positions inside the frame.
    pub positions: Vec<usize>,
    pub scheme: WiScheme,
    /// Channel length assumed by ALS and LP.
    pub taps: usize,
    /// Pilots per pilot symbol for LP.
    pub n_pilots: usize,
}

impl WiFrameConfig {
    pub fn new(scheme: WiScheme, n_symbols: usize) -> Self {
        Self {
            positions: vec![0, n_symbols / 2, n_symbols - 1],
            scheme,
            taps: 8,
            n_pilots: 8,
        }
    }

    pub fn validate(&self, n_symbols: usize, k_on: usize) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::config("WI needs at least one pilot symbol"));
        }
        if !self.positions.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config(
                "WI pilot positions must be strictly increasing",
            ));
        }
        if *self.positions.last().unwrap() >= n_symbols {
            return Err(Error::config(format!(
                "WI pilot position {} outside a {n_symbols}-symbol frame",
                self.positions.last().unwrap()
            )));
        }
        if self.taps == 0 || self.taps > k_on {
            return Err(Error::config(format!(
                "WI taps {} outside 1..={k_on}",
                self.taps
            )));
        }
        if self.scheme == WiScheme::Lp && self.n_pilots < self.taps {
            return Err(Error::config(format!(
                "LP needs at least {} pilots per pilot symbol, got {}",
                self.taps, self.n_pilots
            )));
        }
        Ok(())
    }

    pub fn layout(&self) -> PilotLayout {
        match self.scheme {
            WiScheme::Lp => PilotLayout::SparsePilotSymbols {
                positions: self.positions.clone(),
                n_pilots: self.n_pilots,
            },
            _ => PilotLayout::PilotSymbols {
                positions: self.positions.clone(),
            },
        }
    }

    pub fn data_symbols(&self, n_symbols: usize) -> Vec<usize> {
        (0..n_symbols)
            .filter(|i| !self.positions.contains(i))
            .collect()
    }

    /// Noise energy of one pilot-symbol estimate relative to unit channel
    /// power.
    pub fn pilot_noise(&self, noise_var: f64, k_on: usize) -> f64 {
        match self.scheme {
            WiScheme::FpSls => noise_var,
            WiScheme::FpAls | WiScheme::Lp => noise_var * self.taps as f64 / k_on as f64,
        }
    }
}

/// `K_on x L` truncated DFT restricted to the given active rows.
fn truncated_dft(ctx: &EstContext, rows: &[usize], taps: usize) -> DMatrix<C64> {
    let k = ctx.cfg.fft_size as f64;
    DMatrix::from_fn(rows.len(), taps, |r, l| {
        let kk = ctx.carrier[rows[r]] as f64;
        C64::from_polar(1.0, -2.0 * std::f64::consts::PI * kk * l as f64 / k)
    })
}

fn pinv(f: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let fh = f.adjoint();
    let gram = &fh * f;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::config("truncated DFT is rank deficient"))?;
    Ok(chol.solve(&fh))
}

/// Per-pilot-symbol estimates, `K_on x P`.
pub fn wi_pilot_estimates(rx: &RxFrame, wcfg: &WiFrameConfig, ctx: &EstContext) -> Result<CGrid> {
    wcfg.validate(rx.y.cols(), ctx.k_on())?;
    let k_on = ctx.k_on();
    let all: Vec<usize> = (0..k_on).collect();
    let (rows, map) = match wcfg.scheme {
        WiScheme::FpSls => (all, None),
        WiScheme::FpAls => {
            let f = truncated_dft(ctx, &all, wcfg.taps);
            let proj = &f * pinv(&f)?;
            (all, Some(proj))
        }
        WiScheme::Lp => {
            let rows = sparse_pilot_positions(k_on, wcfg.n_pilots);
            let fp = truncated_dft(ctx, &rows, wcfg.taps);
            let fon = truncated_dft(ctx, &all, wcfg.taps);
            (rows, Some(fon * pinv(&fp)?))
        }
    };
    let mut out = CGrid::zeros(k_on, wcfg.positions.len());
    for (q, &pos) in wcfg.positions.iter().enumerate() {
        let y = rx.y.col(pos);
        let ls: Vec<C64> = rows.iter().map(|&r| y[r] / ctx.preamble[r]).collect();
        match &map {
            None => out.col_mut(q).copy_from_slice(&ls),
            Some(m) => {
                let v = m * DMatrix::from_column_slice(ls.len(), 1, &ls);
                out.col_mut(q).copy_from_slice(v.as_slice());
            }
        }
    }
    Ok(out)
}

/// Weights of the two pilot estimates bracketing a data symbol. Times are in
/// symbols; `ws = 2 pi f_d T_s`.
pub fn wi_weights(t: f64, a: f64, b: f64, e_a: f64, e_b: f64, ws: f64) -> [f64; 2] {
    let r = [j0(ws * (t - a)), j0(ws * (b - t))];
    let c = j0(ws * (b - a));
    let (mut m00, mut m11) = (1.0 + e_a, 1.0 + e_b);
    let mut det = m00 * m11 - c * c;
    if det.abs() < 1e-12 {
        warn!("WI weight matrix singular; adding 1e-8 diagonal loading");
        m00 += 1e-8;
        m11 += 1e-8;
        det = m00 * m11 - c * c;
    }
    [(m11 * r[0] - c * r[1]) / det, (m00 * r[1] - c * r[0]) / det]
}

/// Interpolates data symbols from the pilot-symbol estimates plus the
/// preamble LS estimate, which sits before symbol 0. `noise` holds the
/// relative noise energy of the preamble estimate followed by one per pilot
/// symbol.
pub fn wi_interpolate(
    pilot_est: &CGrid,
    preamble_ls: &[C64],
    wcfg: &WiFrameConfig,
    doppler_hz: f64,
    noise: &[f64],
    ctx: &EstContext,
) -> Result<ChannelEstimate> {
    let n = ctx.cfg.n_symbols;
    wcfg.validate(n, ctx.k_on())?;
    let p = wcfg.positions.len();
    if pilot_est.cols() != p || noise.len() != p + 1 || preamble_ls.len() != ctx.k_on() {
        return Err(Error::shape(format!(
            "WI expects {p} pilot estimates and {} noise energies",
            p + 1
        )));
    }
    if !(doppler_hz >= 0.0) {
        return Err(Error::config(format!(
            "Doppler must be non-negative, got {doppler_hz}"
        )));
    }
    let ws = 2.0 * std::f64::consts::PI * doppler_hz * ctx.cfg.symbol_duration();
    let mut times = vec![-(ctx.cfg.n_preambles as f64 + 1.0) / 2.0];
    times.extend(wcfg.positions.iter().map(|&x| x as f64));
    let cols: Vec<&[C64]> = std::iter::once(preamble_ls)
        .chain((0..p).map(|q| pilot_est.col(q)))
        .collect();

    let mut h = CGrid::zeros(ctx.k_on(), n);
    for i in 0..n {
        if let Some(q) = wcfg.positions.iter().position(|&x| x == i) {
            h.col_mut(i).copy_from_slice(pilot_est.col(q));
            continue;
        }
        let t = i as f64;
        let hi = times
            .iter()
            .position(|&x| x > t)
            .unwrap_or(times.len() - 1)
            .max(1);
        let lo = hi - 1;
        let w = wi_weights(t, times[lo], times[hi], noise[lo], noise[hi], ws);
        for (k, v) in h.col_mut(i).iter_mut().enumerate() {
            *v = cols[lo][k] * w[0] + cols[hi][k] * w[1];
        }
    }
    Ok(ChannelEstimate::new(
        h,
        format!("WI-{}", scheme_label(wcfg.scheme)),
    ))
}

fn scheme_label(s: WiScheme) -> &'static str {
    match s {
        WiScheme::FpSls => "FP-SLS",
        WiScheme::FpAls => "FP-ALS",
        WiScheme::Lp => "LP",
    }
}
