//! Symbol-by-symbol decision-directed estimators.

use log::warn;

use super::spline::CubicSpline;
use super::{ChannelEstimate, EstContext, RxFrame};
use crate::error::{Error, Result};
use crate::grid::{CGrid, C64};
use crate::phy::{unitary_dft, unitary_idft};
use crate::tally::Tally;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaParams {
    pub alpha: f64,
    pub beta: usize,
}

impl Default for StaParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AddTtParams {
    pub alpha: f64,
    pub beta: usize,
    pub taps: usize,
}

impl Default for AddTtParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 2,
            taps: 12,
        }
    }
}

fn check_init(rx: &RxFrame, h_init: &[C64], ctx: &EstContext) -> Result<()> {
    if rx.y.rows() != ctx.k_on() || h_init.len() != ctx.k_on() {
        return Err(Error::shape(format!(
            "expected {} active rows, got grid {} and h_init {}",
            ctx.k_on(),
            rx.y.rows(),
            h_init.len()
        )));
    }
    Ok(())
}

/// One DPA update. Equalizes `y` by `h_prev`, demaps data bins, puts the
/// known pilots back and divides. Returns `(h_dpa, d)`.
pub fn dpa_step(
    y: &[C64],
    h_prev: &[C64],
    ctx: &EstContext,
    tally: &Tally,
) -> (Vec<C64>, Vec<C64>) {
    let order = ctx.modulation();
    let mut d = Vec::with_capacity(y.len());
    let mut pilot = ctx.pilot_vals.iter();
    for k in 0..y.len() {
        let eq = tally.cdiv(y[k], h_prev[k]);
        if ctx.is_pilot[k] {
            d.push(*pilot.next().unwrap());
        } else {
            d.push(order.decide(eq));
        }
    }
    let h = y.iter().zip(&d).map(|(&a, &b)| tally.cdiv(a, b)).collect();
    (h, d)
}

/// DPA over a whole frame starting from `h_init` (normally the preamble LS).
pub fn dpa(
    rx: &RxFrame,
    h_init: &[C64],
    ctx: &EstContext,
    tally: &Tally,
) -> Result<ChannelEstimate> {
    check_init(rx, h_init, ctx)?;
    let mut h = CGrid::zeros(ctx.k_on(), rx.y.cols());
    let mut prev = h_init.to_vec();
    for i in 0..rx.y.cols() {
        let (cur, _) = dpa_step(rx.y.col(i), &prev, ctx, tally);
        h.col_mut(i).copy_from_slice(&cur);
        prev = cur;
    }
    Ok(ChannelEstimate::new(h, "DPA"))
}

/// Moving average with `2 beta + 1` taps at the listed rows. Window indices
/// are clamped to `[0, len)`. Rows not listed are copied.
pub fn frequency_average(h: &[C64], rows: &[usize], beta: usize, tally: &Tally) -> Vec<C64> {
    let n = h.len() as isize;
    let w = 1.0 / (2 * beta + 1) as f64;
    let mut out = h.to_vec();
    for &k in rows {
        let mut acc = C64::new(0.0, 0.0);
        for l in -(beta as isize)..=beta as isize {
            let j = (k as isize + l).clamp(0, n - 1) as usize;
            acc = tally.cadd(acc, h[j]);
        }
        out[k] = tally.scale(acc, w);
    }
    out
}

/// `(1 - w) prev + w cur`, elementwise.
pub(crate) fn blend(prev: &[C64], cur: &[C64], w: f64, tally: &Tally) -> Vec<C64> {
    prev.iter()
        .zip(cur)
        .map(|(&p, &c)| tally.cadd(tally.scale(p, 1.0 - w), tally.scale(c, w)))
        .collect()
}

/// Time-averaging recursion `(1 - 1/alpha) prev + (1/alpha) cur`.
pub fn time_average(prev: &[C64], cur: &[C64], alpha: f64, tally: &Tally) -> Vec<C64> {
    blend(prev, cur, 1.0 / alpha, tally)
}

/// One STA update from the previous STA estimate.
pub fn sta_step(
    y: &[C64],
    prev: &[C64],
    params: StaParams,
    ctx: &EstContext,
    tally: &Tally,
) -> Vec<C64> {
    let (h_dpa, _) = dpa_step(y, prev, ctx, tally);
    let fd = frequency_average(&h_dpa, &ctx.data_pos, params.beta, tally);
    time_average(prev, &fd, params.alpha, tally)
}

pub fn sta(
    rx: &RxFrame,
    h_init: &[C64],
    params: StaParams,
    ctx: &EstContext,
    tally: &Tally,
) -> Result<ChannelEstimate> {
    check_init(rx, h_init, ctx)?;
    if !(params.alpha >= 1.0) {
        return Err(Error::config(format!(
            "STA alpha must be >= 1, got {}",
            params.alpha
        )));
    }
    let mut h = CGrid::zeros(ctx.k_on(), rx.y.cols());
    let mut prev = h_init.to_vec();
    for i in 0..rx.y.cols() {
        let cur = sta_step(rx.y.col(i), &prev, params, ctx, tally);
        h.col_mut(i).copy_from_slice(&cur);
        prev = cur;
    }
    Ok(ChannelEstimate::new(h, "STA"))
}

/// One TRFI update. `y_prev` is the previous received symbol (`None` at the
/// start of a frame, where every subcarrier counts as reliable). Returns the
/// estimate and the size of the reliable set.
pub fn trfi_step(
    y: &[C64],
    y_prev: Option<&[C64]>,
    prev: &[C64],
    ctx: &EstContext,
    tally: &Tally,
) -> (Vec<C64>, usize) {
    let order = ctx.modulation();
    let k_on = ctx.k_on();
    let (h_dpa, _) = dpa_step(y, prev, ctx, tally);
    let reliable: Vec<bool> = match y_prev {
        None => vec![true; k_on],
        Some(y_prev) => (0..k_on)
            .map(|k| {
                let a = tally.cdiv(y_prev[k], h_dpa[k]);
                let b = tally.cdiv(y_prev[k], prev[k]);
                ctx.is_pilot[k] || order.decide(a) == order.decide(b)
            })
            .collect(),
    };
    let rs: Vec<usize> = (0..k_on).filter(|&k| reliable[k]).collect();
    let mut cur = h_dpa.clone();
    if rs.len() < k_on {
        let xs: Vec<f64> = rs.iter().map(|&k| ctx.carrier[k] as f64).collect();
        let ys: Vec<C64> = rs.iter().map(|&k| h_dpa[k]).collect();
        if let Some(s) = CubicSpline::new(&xs, &ys) {
            for k in (0..k_on).filter(|&k| !reliable[k]) {
                cur[k] = s.eval(ctx.carrier[k] as f64);
            }
        }
    }
    (cur, rs.len())
}

/// TRFI. Subcarriers whose previous-symbol decisions agree under the new DPA
/// estimate and the previous TRFI estimate are reliable; the rest are
/// cubic-interpolated over subcarrier index from the reliable ones. The
/// interpolation itself is not instrumented.
pub fn trfi(
    rx: &RxFrame,
    h_init: &[C64],
    ctx: &EstContext,
    tally: &Tally,
) -> Result<ChannelEstimate> {
    check_init(rx, h_init, ctx)?;
    let mut h = CGrid::zeros(ctx.k_on(), rx.y.cols());
    let mut sizes = Vec::with_capacity(rx.y.cols());
    let mut prev = h_init.to_vec();
    for i in 0..rx.y.cols() {
        let y_prev = if i == 0 { None } else { Some(rx.y.col(i - 1)) };
        let (cur, n_rs) = trfi_step(rx.y.col(i), y_prev, &prev, ctx, tally);
        sizes.push(n_rs);
        h.col_mut(i).copy_from_slice(&cur);
        prev = cur;
    }
    let mut est = ChannelEstimate::new(h, "TRFI");
    est.reliable = Some(sizes);
    Ok(est)
}

/// Zero-fills the guard bins, goes to the time domain with a `K`-point
/// unitary IDFT, keeps the first `taps` samples and transforms back.
pub fn time_truncate(h_active: &[C64], taps: usize, bins: &[usize], fft_size: usize) -> Vec<C64> {
    let mut full = vec![C64::new(0.0, 0.0); fft_size];
    for (&b, &v) in bins.iter().zip(h_active) {
        full[b] = v;
    }
    let mut t = unitary_idft(&full);
    for v in t.iter_mut().skip(taps) {
        *v = C64::new(0.0, 0.0);
    }
    let back = unitary_dft(&t);
    bins.iter().map(|&b| back[b]).collect()
}

/// ADD-TT: DPA, time-domain truncation, frequency average over all active
/// subcarriers, then `(1 - alpha) prev + alpha cur`.
pub fn add_tt(
    rx: &RxFrame,
    h_init: &[C64],
    params: AddTtParams,
    ctx: &EstContext,
    tally: &Tally,
) -> Result<ChannelEstimate> {
    check_init(rx, h_init, ctx)?;
    let k = ctx.cfg.fft_size;
    if params.taps == 0 || params.taps > k {
        return Err(Error::config(format!(
            "truncation length {} outside 1..={k}",
            params.taps
        )));
    }
    if !(0.0..=1.0).contains(&params.alpha) {
        warn!("ADD-TT alpha {} outside [0, 1]", params.alpha);
    }
    let bins = ctx.cfg.active_bins();
    let all: Vec<usize> = (0..ctx.k_on()).collect();
    let mut h = CGrid::zeros(ctx.k_on(), rx.y.cols());
    let mut prev = h_init.to_vec();
    for i in 0..rx.y.cols() {
        let (h_dpa, _) = dpa_step(rx.y.col(i), &prev, ctx, tally);
        let tt = time_truncate(&h_dpa, params.taps, &bins, k);
        let ftt = frequency_average(&tt, &all, params.beta, tally);
        let cur = blend(&prev, &ftt, params.alpha, tally);
        h.col_mut(i).copy_from_slice(&cur);
        prev = cur;
    }
    Ok(ChannelEstimate::new(h, "ADD-TT"))
}
