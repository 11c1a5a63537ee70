//! 2D Gaussian radial-basis interpolation over the pilot grid.

use log::warn;
use nalgebra::DMatrix;

use super::{ChannelEstimate, EstContext};
use crate::error::{Error, Result};
use crate::grid::{CGrid, C64};

fn kernel(a: (f64, f64), b: (f64, f64), r0: f64) -> f64 {
    let d = (a.0 - b.0).abs() + (a.1 - b.1).abs();
    (-d * d / r0).exp()
}

/// Precomputed map from pilot LS values to estimates at a fixed set of
/// evaluation points. Coordinates are `(subcarrier, symbol)`.
#[derive(Debug, Clone)]
pub struct RbfInterpolator {
    /// `n_eval x n_pilots`, row-major.
    map: Vec<f64>,
    n_pilots: usize,
    n_eval: usize,
    /// Diagonal loading that had to be added to the Gram matrix.
    pub regularization: f64,
}

impl RbfInterpolator {
    pub fn new(pilots: &[(f64, f64)], eval: &[(f64, f64)], r0: f64) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::config(format!(
                "RBF radius must be positive, got {r0}"
            )));
        }
        let n = pilots.len();
        if n == 0 {
            return Err(Error::shape("RBF needs at least one pilot"));
        }
        let gram = DMatrix::from_fn(n, n, |i, j| kernel(pilots[i], pilots[j], r0));
        let phi_t = DMatrix::from_fn(n, eval.len(), |j, i| kernel(eval[i], pilots[j], r0));
        // The Gram matrix is symmetric, so (phi A^-1)^T = A^-1 phi^T.
        let (mt, reg) = solve_refined(&gram, &phi_t)?;
        if reg > 0.0 {
            warn!("RBF Gram matrix ill-conditioned; diagonal loading {reg:e}");
        }
        let m = mt.transpose();
        let mut map = Vec::with_capacity(eval.len() * n);
        for i in 0..eval.len() {
            map.extend(m.row(i).iter());
        }
        Ok(Self {
            map,
            n_pilots: n,
            n_eval: eval.len(),
            regularization: reg,
        })
    }

    pub fn apply(&self, pilot_ls: &[C64]) -> Vec<C64> {
        assert_eq!(pilot_ls.len(), self.n_pilots);
        (0..self.n_eval)
            .map(|i| {
                let row = &self.map[i * self.n_pilots..(i + 1) * self.n_pilots];
                row.iter().zip(pilot_ls).map(|(&w, &h)| h * w).sum()
            })
            .collect()
    }
}

/// Solves `A X = B` by LU with one refinement step. Adds growing diagonal
/// loading while the residual stays large.
fn solve_refined(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = a.nrows();
    let scale = a.diagonal().max();
    let mut reg = 0.0;
    for _ in 0..12 {
        let mut m = a.clone();
        for i in 0..n {
            m[(i, i)] += reg;
        }
        let lu = m.clone().lu();
        if let Some(mut x) = lu.solve(b) {
            let resid = b - &m * &x;
            if let Some(corr) = lu.solve(&resid) {
                x += corr;
            }
            let err = (b - &m * &x).amax();
            if err.is_finite() && err < 1e-9 * b.amax().max(1.0) {
                return Ok((x, reg));
            }
        }
        reg = if reg == 0.0 {
            1e-14 * scale
        } else {
            reg * 10.0
        };
    }
    Err(Error::config(
        "RBF Gram matrix is singular even after regularization",
    ))
}

/// RBF on the comb pilot grid. `pilot_ls` is `K_p x I`; the result covers
/// every active subcarrier of every symbol.
pub fn rbf_interpolate(pilot_ls: &CGrid, r0: f64, ctx: &EstContext) -> Result<ChannelEstimate> {
    let interp = comb_interpolator(pilot_ls.cols(), r0, ctx)?;
    rbf_apply(&interp, pilot_ls, ctx)
}

/// Interpolator for the comb pilots of an `n_symbols` frame.
pub fn comb_interpolator(n_symbols: usize, r0: f64, ctx: &EstContext) -> Result<RbfInterpolator> {
    let mut pilots = Vec::new();
    for i in 0..n_symbols {
        for &p in &ctx.pilot_pos {
            pilots.push((ctx.carrier[p] as f64, i as f64));
        }
    }
    let mut eval = Vec::new();
    for i in 0..n_symbols {
        for &k in &ctx.carrier {
            eval.push((k as f64, i as f64));
        }
    }
    RbfInterpolator::new(&pilots, &eval, r0)
}

pub fn rbf_apply(
    interp: &RbfInterpolator,
    pilot_ls: &CGrid,
    ctx: &EstContext,
) -> Result<ChannelEstimate> {
    if pilot_ls.rows() != ctx.pilot_pos.len() || interp.n_pilots != pilot_ls.as_slice().len() {
        return Err(Error::shape(format!(
            "pilot grid {}x{} does not match the interpolator",
            pilot_ls.rows(),
            pilot_ls.cols()
        )));
    }
    let out = interp.apply(pilot_ls.as_slice());
    let h = CGrid::from_fn(ctx.k_on(), pilot_ls.cols(), |k, i| out[i * ctx.k_on() + k]);
    Ok(ChannelEstimate::new(h, "RBF"))
}
