//! Central finite-difference gradient check on the MSE loss.

use super::net::Net;
use super::tensor::Tensor;
use super::train::mse;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradReport {
    /// `|analytic - numeric| / max(|analytic|, |numeric|)` over the
    /// checked parameters (2-norms).
    pub param_rel: f64,
    pub input_rel: f64,
    pub checked: usize,
}

fn loss(net: &Net, x: &Tensor, target: &Tensor) -> Result<f64> {
    let (y, _) = net.forward_train(x)?;
    Ok(mse(&y, target).0)
}

fn rel(a: &[f64], n: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(n)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nn: f64 = n.iter().map(|v| v * v).sum::<f64>().sqrt();
    let den = na.max(nn);
    if den == 0.0 {
        0.0
    } else {
        diff / den
    }
}

/// Compares backprop against `(L(p + h) - L(p - h)) / 2h` for up to
/// `max_params` evenly strided parameters and every input element.
pub fn grad_check(
    net: &Net,
    x: &Tensor,
    target: &Tensor,
    step: f64,
    max_params: usize,
) -> Result<GradReport> {
    let (y, trace) = net.forward_train(x)?;
    let (_, gy) = mse(&y, target);
    let (gp, gx) = net.backward(&trace, &gy);

    let n = net.param_count();
    let stride = (n / max_params.max(1)).max(1);
    let mut probe = net.clone();
    let mut analytic = Vec::new();
    let mut numeric = Vec::new();
    for j in (0..n).step_by(stride) {
        let p0 = probe.params()[j];
        probe.params_mut()[j] = p0 + step;
        let lp = loss(&probe, x, target)?;
        probe.params_mut()[j] = p0 - step;
        let lm = loss(&probe, x, target)?;
        probe.params_mut()[j] = p0;
        analytic.push(gp[j]);
        numeric.push((lp - lm) / (2.0 * step));
    }
    let checked = analytic.len();

    let mut xi = x.clone();
    let mut num_x = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let v = xi.data[j];
        xi.data[j] = v + step;
        let lp = loss(net, &xi, target)?;
        xi.data[j] = v - step;
        let lm = loss(net, &xi, target)?;
        xi.data[j] = v;
        num_x.push((lp - lm) / (2.0 * step));
    }
    Ok(GradReport {
        param_rel: rel(&analytic, &numeric),
        input_rel: rel(&gx.data, &num_x),
        checked,
    })
}
