//! Genie 2D LMMSE with correlations built from the channel model.

use std::collections::HashMap;

use nalgebra::DMatrix;

use super::{ChannelEstimate, EstContext};
use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::grid::{CGrid, C64};
use crate::special::j0;

/// A time-frequency point: active row and time in symbols (symbol 0 is the
/// first OFDM symbol after the preambles).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub row: usize,
    pub time: f64,
}

/// Separable correlation `r_f(dk) * J0(2 pi f_d T_s dt)`.
#[derive(Debug, Clone)]
pub struct CorrelationModel {
    profile: Vec<(usize, f64)>,
    carriers: Vec<i32>,
    fft_size: usize,
    ws: f64,
}

impl CorrelationModel {
    pub fn new(model: &ChannelModel, ctx: &EstContext) -> Self {
        Self {
            profile: model.sampled_profile(ctx.cfg.sample_rate_hz),
            carriers: ctx.carrier.clone(),
            fft_size: ctx.cfg.fft_size,
            ws: 2.0 * std::f64::consts::PI * model.doppler_hz * ctx.cfg.symbol_duration(),
        }
    }

    fn freq(&self, dk: i32) -> C64 {
        let k = self.fft_size as f64;
        self.profile
            .iter()
            .map(|&(d, p)| {
                C64::from_polar(p, -2.0 * std::f64::consts::PI * d as f64 * dk as f64 / k)
            })
            .sum()
    }

    /// `E[h(a) h(b)^*]` for every pair, as an `a.len() x b.len()` matrix.
    pub fn matrix(&self, a: &[Observation], b: &[Observation]) -> DMatrix<C64> {
        let mut fcache: HashMap<i32, C64> = HashMap::new();
        let mut tcache: HashMap<i64, f64> = HashMap::new();
        DMatrix::from_fn(a.len(), b.len(), |i, j| {
            let dk = self.carriers[a[i].row] - self.carriers[b[j].row];
            let dt = a[i].time - b[j].time;
            let f = *fcache.entry(dk).or_insert_with(|| self.freq(dk));
            let key = (dt * 1024.0).round() as i64;
            let t = *tcache.entry(key).or_insert_with(|| j0(self.ws * dt));
            f * t
        })
    }
}

/// `R_dp (R_pp + sigma^2 I)^-1`. Fails with a configuration error when `R_pp`
/// is not positive semidefinite.
pub fn lmmse_weights(
    r_dp: &DMatrix<C64>,
    r_pp: &DMatrix<C64>,
    noise_var: f64,
) -> Result<DMatrix<C64>> {
    let n = r_pp.nrows();
    if r_pp.ncols() != n || r_dp.ncols() != n {
        return Err(Error::shape("LMMSE correlation shapes disagree"));
    }
    let scale = r_pp
        .diagonal()
        .iter()
        .map(|v| v.re)
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut jitter = 0.0;
    for _ in 0..4 {
        let mut c = r_pp.clone();
        for i in 0..n {
            c[(i, i)] += C64::new(noise_var + jitter, 0.0);
        }
        // nalgebra takes complex square roots of negative pivots, so check
        // the factor's diagonal as well.
        if let Some(chol) = c.cholesky() {
            let ok = chol
                .l_dirty()
                .diagonal()
                .iter()
                .all(|d| d.re > 0.0 && d.im.abs() <= 1e-12 * d.re);
            if ok {
                return Ok(chol.solve(&r_dp.adjoint()).adjoint());
            }
        }
        let eig = r_pp.clone().symmetric_eigenvalues();
        if eig.min() < -1e-9 * scale {
            return Err(Error::config(format!(
                "channel covariance is not positive semidefinite (eigenvalue {:e})",
                eig.min()
            )));
        }
        jitter = if jitter == 0.0 {
            1e-12 * scale
        } else {
            jitter * 100.0
        };
    }
    Err(Error::config("channel covariance could not be factorized"))
}

/// Precomputed estimator for a fixed observation layout and SNR.
#[derive(Debug, Clone)]
pub struct Lmmse {
    weights: DMatrix<C64>,
    n_rows: usize,
    n_cols: usize,
}

impl Lmmse {
    /// Estimates the `rows x cols` grid (column-major) from LS values at
    /// `obs`.
    pub fn new(
        obs: &[Observation],
        rows: usize,
        cols: usize,
        corr: &CorrelationModel,
        noise_var: f64,
    ) -> Result<Self> {
        let eval: Vec<Observation> = (0..cols)
            .flat_map(|i| {
                (0..rows).map(move |k| Observation {
                    row: k,
                    time: i as f64,
                })
            })
            .collect();
        let r_pp = corr.matrix(obs, obs);
        let r_dp = corr.matrix(&eval, obs);
        Ok(Self {
            weights: lmmse_weights(&r_dp, &r_pp, noise_var)?,
            n_rows: rows,
            n_cols: cols,
        })
    }

    pub fn n_observations(&self) -> usize {
        self.weights.ncols()
    }

    pub fn estimate(&self, ls: &[C64]) -> Result<ChannelEstimate> {
        if ls.len() != self.weights.ncols() {
            return Err(Error::shape(format!(
                "LMMSE built for {} observations, got {}",
                self.weights.ncols(),
                ls.len()
            )));
        }
        let v = &self.weights * DMatrix::from_column_slice(ls.len(), 1, ls);
        let h = CGrid::from_fn(self.n_rows, self.n_cols, |k, i| v[i * self.n_rows + k]);
        Ok(ChannelEstimate::new(h, "LMMSE"))
    }
}
