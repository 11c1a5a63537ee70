//! Layer kernels: forward and reverse-mode passes over batched tensors.

use super::tensor::{gemm, Tensor};
use crate::error::{Error, Result};

/// One layer of a [`super::Net`]. Convolutions are stride 1 with zero
/// "same" padding and odd kernel sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    /// Acts on the last axis.
    Dense {
        inputs: usize,
        outputs: usize,
    },
    Relu,
    /// Channel axis 1 (or the features of a rank-2 tensor).
    BatchNorm {
        channels: usize,
    },
    /// `[N, C, H, W] -> [N, F, H, W]`.
    Conv2d {
        in_ch: usize,
        out_ch: usize,
        kh: usize,
        kw: usize,
    },
    /// `[N, T, In] -> [N, T, H]`, state reset per sequence.
    Lstm {
        inputs: usize,
        hidden: usize,
    },
    /// `[N, T, C, H, W] -> [N, T, Hc, H, W]`.
    ConvLstm {
        in_ch: usize,
        hidden: usize,
        kh: usize,
        kw: usize,
    },
}

impl LayerSpec {
    pub fn param_count(&self) -> usize {
        match *self {
            LayerSpec::Dense { inputs, outputs } => inputs * outputs + outputs,
            LayerSpec::Relu => 0,
            LayerSpec::BatchNorm { channels } => 2 * channels,
            LayerSpec::Conv2d {
                in_ch,
                out_ch,
                kh,
                kw,
            } => out_ch * in_ch * kh * kw + out_ch,
            LayerSpec::Lstm { inputs, hidden } => 4 * hidden * (inputs + hidden) + 4 * hidden,
            LayerSpec::ConvLstm {
                in_ch,
                hidden,
                kh,
                kw,
            } => 4 * hidden * (in_ch + hidden) * kh * kw + 4 * hidden,
        }
    }

    /// Non-trainable state (batch-norm running mean and variance).
    pub fn state_count(&self) -> usize {
        match *self {
            LayerSpec::BatchNorm { channels } => 2 * channels,
            _ => 0,
        }
    }

    /// Fan-in used for initialization and the number of weights (the rest
    /// of the parameters are biases).
    pub(crate) fn fan_in(&self) -> (usize, usize) {
        match *self {
            LayerSpec::Dense { inputs, outputs } => (inputs, inputs * outputs),
            LayerSpec::Conv2d {
                in_ch,
                out_ch,
                kh,
                kw,
            } => (in_ch * kh * kw, out_ch * in_ch * kh * kw),
            LayerSpec::Lstm { inputs, hidden } => (inputs + hidden, 4 * hidden * (inputs + hidden)),
            LayerSpec::ConvLstm {
                in_ch,
                hidden,
                kh,
                kw,
            } => (
                (in_ch + hidden) * kh * kw,
                4 * hidden * (in_ch + hidden) * kh * kw,
            ),
            LayerSpec::Relu | LayerSpec::BatchNorm { .. } => (0, 0),
        }
    }

    pub(crate) fn check_input(&self, x: &Tensor) -> Result<()> {
        let bad = |what: String| {
            Err(Error::shape(format!(
                "{self:?}: {what}, got shape {:?}",
                x.shape
            )))
        };
        match *self {
            LayerSpec::Dense { inputs, .. } => {
                if x.rank() < 2 || x.last_dim() != inputs {
                    return bad(format!("expected last axis {inputs}"));
                }
            }
            LayerSpec::Relu => {}
            LayerSpec::BatchNorm { channels } => {
                if x.rank() < 2 || x.shape[1] != channels {
                    return bad(format!("expected {channels} channels on axis 1"));
                }
            }
            LayerSpec::Conv2d { in_ch, kh, kw, .. } => {
                if kh % 2 == 0 || kw % 2 == 0 {
                    return bad("kernel sizes must be odd".into());
                }
                if x.rank() != 4 || x.shape[1] != in_ch {
                    return bad(format!("expected [N, {in_ch}, H, W]"));
                }
            }
            LayerSpec::Lstm { inputs, .. } => {
                if x.rank() != 3 || x.shape[2] != inputs {
                    return bad(format!("expected [N, T, {inputs}]"));
                }
            }
            LayerSpec::ConvLstm { in_ch, kh, kw, .. } => {
                if kh % 2 == 0 || kw % 2 == 0 {
                    return bad("kernel sizes must be odd".into());
                }
                if x.rank() != 5 || x.shape[2] != in_ch {
                    return bad(format!("expected [N, T, {in_ch}, H, W]"));
                }
            }
        }
        Ok(())
    }
}

/// Per-layer values kept from a training forward pass.
#[derive(Debug, Clone)]
pub(crate) enum Cache {
    None,
    Bn {
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
        mean: Vec<f64>,
        var: Vec<f64>,
    },
    Seq(SeqCache),
}

/// Recurrent cache, indexed `[t]`; each entry holds all batch rows.
#[derive(Debug, Clone, Default)]
pub(crate) struct SeqCache {
    xz: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    tc: Vec<Vec<f64>>,
}

pub(crate) const BN_EPS: f64 = 1e-5;

#[inline]
fn sigmoid(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

// ---------------------------------------------------------------- dense

fn dense_forward(p: &[f64], inputs: usize, outputs: usize, x: &Tensor) -> Tensor {
    let rows = x.len() / inputs;
    let (w, b) = p.split_at(inputs * outputs);
    let mut shape = x.shape.clone();
    *shape.last_mut().unwrap() = outputs;
    let mut y = vec![0.0; rows * outputs];
    for r in 0..rows {
        y[r * outputs..(r + 1) * outputs].copy_from_slice(b);
    }
    gemm(
        rows, inputs, outputs, 1.0, &x.data, false, w, true, 1.0, &mut y,
    );
    Tensor { shape, data: y }
}

fn dense_backward(
    p: &[f64],
    inputs: usize,
    outputs: usize,
    x: &Tensor,
    gy: &Tensor,
    gp: &mut [f64],
) -> Tensor {
    let rows = x.len() / inputs;
    let (w, _) = p.split_at(inputs * outputs);
    let (gw, gb) = gp.split_at_mut(inputs * outputs);
    gemm(
        outputs, rows, inputs, 1.0, &gy.data, true, &x.data, false, 1.0, gw,
    );
    for r in 0..rows {
        for (o, g) in gb.iter_mut().enumerate() {
            *g += gy.data[r * outputs + o];
        }
    }
    let mut gx = vec![0.0; rows * inputs];
    gemm(
        rows, outputs, inputs, 1.0, &gy.data, false, w, false, 0.0, &mut gx,
    );
    Tensor {
        shape: x.shape.clone(),
        data: gx,
    }
}

// ---------------------------------------------------------- batch norm

/// `(N, C, S)` view used by batch norm.
fn bn_dims(x: &Tensor) -> (usize, usize, usize) {
    let n = x.shape[0];
    let c = x.shape[1];
    (n, c, x.len() / (n * c).max(1))
}

fn bn_apply(
    x: &Tensor,
    gamma: &[f64],
    beta: &[f64],
    mean: &[f64],
    inv_std: &[f64],
) -> (Tensor, Vec<f64>) {
    let (n, c, s) = bn_dims(x);
    let mut y = vec![0.0; x.len()];
    let mut xhat = vec![0.0; x.len()];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * s;
            for j in base..base + s {
                let h = (x.data[j] - mean[ch]) * inv_std[ch];
                xhat[j] = h;
                y[j] = gamma[ch] * h + beta[ch];
            }
        }
    }
    (
        Tensor {
            shape: x.shape.clone(),
            data: y,
        },
        xhat,
    )
}

fn bn_forward_train(p: &[f64], x: &Tensor) -> (Tensor, Cache) {
    let (n, c, s) = bn_dims(x);
    let m = (n * s) as f64;
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * s;
            mean[ch] += x.data[base..base + s].iter().sum::<f64>();
        }
    }
    for v in &mut mean {
        *v /= m;
    }
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * s;
            var[ch] += x.data[base..base + s]
                .iter()
                .map(|v| (v - mean[ch]).powi(2))
                .sum::<f64>();
        }
    }
    for v in &mut var {
        *v /= m;
    }
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let (gamma, beta) = p.split_at(c);
    let (y, xhat) = bn_apply(x, gamma, beta, &mean, &inv_std);
    (
        y,
        Cache::Bn {
            xhat,
            inv_std,
            mean,
            var,
        },
    )
}

fn bn_forward_eval(p: &[f64], state: &[f64], x: &Tensor) -> Tensor {
    let c = x.shape[1];
    let (gamma, beta) = p.split_at(c);
    let (mean, var) = state.split_at(c);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    bn_apply(x, gamma, beta, mean, &inv_std).0
}

fn bn_backward(p: &[f64], x: &Tensor, cache: &Cache, gy: &Tensor, gp: &mut [f64]) -> Tensor {
    let Cache::Bn { xhat, inv_std, .. } = cache else {
        unreachable!("batch-norm cache");
    };
    let (n, c, s) = bn_dims(x);
    let m = (n * s) as f64;
    let gamma = &p[..c];
    let mut sum_g = vec![0.0; c];
    let mut sum_gx = vec![0.0; c];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * s;
            for j in base..base + s {
                sum_g[ch] += gy.data[j];
                sum_gx[ch] += gy.data[j] * xhat[j];
            }
        }
    }
    for ch in 0..c {
        gp[ch] += sum_gx[ch];
        gp[c + ch] += sum_g[ch];
    }
    let mut gx = vec![0.0; x.len()];
    for b in 0..n {
        for ch in 0..c {
            let base = (b * c + ch) * s;
            let k = gamma[ch] * inv_std[ch] / m;
            for j in base..base + s {
                gx[j] = k * (m * gy.data[j] - sum_g[ch] - xhat[j] * sum_gx[ch]);
            }
        }
    }
    Tensor {
        shape: x.shape.clone(),
        data: gx,
    }
}

// --------------------------------------------------------- convolution

/// Geometry of a same-padded convolution on one `c x h x w` image.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeom {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub kh: usize,
    pub kw: usize,
}

impl ConvGeom {
    fn rows(&self) -> usize {
        self.c * self.kh * self.kw
    }

    fn hw(&self) -> usize {
        self.h * self.w
    }

    /// `(c kh kw) x (h w)` patch matrix.
    pub fn im2col(&self, x: &[f64], cols: &mut [f64]) {
        let (ph, pw) = (self.kh / 2, self.kw / 2);
        let hw = self.hw();
        for ci in 0..self.c {
            for i in 0..self.kh {
                for j in 0..self.kw {
                    let row = (ci * self.kh + i) * self.kw + j;
                    let out = &mut cols[row * hw..(row + 1) * hw];
                    for y in 0..self.h {
                        let sy = y as isize + i as isize - ph as isize;
                        let dst = &mut out[y * self.w..(y + 1) * self.w];
                        if sy < 0 || sy >= self.h as isize {
                            dst.fill(0.0);
                            continue;
                        }
                        let src = &x[(ci * self.h + sy as usize) * self.w..][..self.w];
                        for (xx, d) in dst.iter_mut().enumerate() {
                            let sx = xx as isize + j as isize - pw as isize;
                            *d = if sx < 0 || sx >= self.w as isize {
                                0.0
                            } else {
                                src[sx as usize]
                            };
                        }
                    }
                }
            }
        }
    }

    /// Adjoint of [`Self::im2col`], accumulating into `gx`.
    pub fn col2im(&self, cols: &[f64], gx: &mut [f64]) {
        let (ph, pw) = (self.kh / 2, self.kw / 2);
        let hw = self.hw();
        for ci in 0..self.c {
            for i in 0..self.kh {
                for j in 0..self.kw {
                    let row = (ci * self.kh + i) * self.kw + j;
                    let src = &cols[row * hw..(row + 1) * hw];
                    for y in 0..self.h {
                        let sy = y as isize + i as isize - ph as isize;
                        if sy < 0 || sy >= self.h as isize {
                            continue;
                        }
                        let dst = &mut gx[(ci * self.h + sy as usize) * self.w..][..self.w];
                        for xx in 0..self.w {
                            let sx = xx as isize + j as isize - pw as isize;
                            if sx >= 0 && sx < self.w as isize {
                                dst[sx as usize] += src[y * self.w + xx];
                            }
                        }
                    }
                }
            }
        }
    }

    /// `out (f x hw) = K cols + b` for one image.
    pub fn forward(
        &self,
        k: &[f64],
        b: &[f64],
        f: usize,
        x: &[f64],
        cols: &mut [f64],
        out: &mut [f64],
    ) {
        self.im2col(x, cols);
        let hw = self.hw();
        for (o, &bias) in b.iter().enumerate().take(f) {
            out[o * hw..(o + 1) * hw].fill(bias);
        }
        gemm(f, self.rows(), hw, 1.0, k, false, cols, false, 1.0, out);
    }

    /// Accumulates kernel and bias gradients; writes (not accumulates) the
    /// input gradient of one image.
    #[allow(clippy::too_many_arguments)]
    pub fn backward(
        &self,
        k: &[f64],
        f: usize,
        x: &[f64],
        gy: &[f64],
        gk: &mut [f64],
        gb: &mut [f64],
        cols: &mut [f64],
        gx: &mut [f64],
    ) {
        let hw = self.hw();
        self.im2col(x, cols);
        gemm(f, hw, self.rows(), 1.0, gy, false, cols, true, 1.0, gk);
        for (o, g) in gb.iter_mut().enumerate().take(f) {
            *g += gy[o * hw..(o + 1) * hw].iter().sum::<f64>();
        }
        gemm(self.rows(), f, hw, 1.0, k, true, gy, false, 0.0, cols);
        gx.fill(0.0);
        self.col2im(cols, gx);
    }
}

fn conv_forward(p: &[f64], spec: (usize, usize, usize, usize), x: &Tensor) -> Tensor {
    let (c, f, kh, kw) = spec;
    let (n, h, w) = (x.shape[0], x.shape[2], x.shape[3]);
    let g = ConvGeom { c, h, w, kh, kw };
    let (k, b) = p.split_at(f * g.rows());
    let mut cols = vec![0.0; g.rows() * g.hw()];
    let mut y = vec![0.0; n * f * g.hw()];
    for s in 0..n {
        g.forward(
            k,
            b,
            f,
            x.item(s),
            &mut cols,
            &mut y[s * f * g.hw()..(s + 1) * f * g.hw()],
        );
    }
    Tensor {
        shape: vec![n, f, h, w],
        data: y,
    }
}

fn conv_backward(
    p: &[f64],
    spec: (usize, usize, usize, usize),
    x: &Tensor,
    gy: &Tensor,
    gp: &mut [f64],
) -> Tensor {
    let (c, f, kh, kw) = spec;
    let (n, h, w) = (x.shape[0], x.shape[2], x.shape[3]);
    let g = ConvGeom { c, h, w, kh, kw };
    let (k, _) = p.split_at(f * g.rows());
    let (gk, gb) = gp.split_at_mut(f * g.rows());
    let mut cols = vec![0.0; g.rows() * g.hw()];
    let mut gx = vec![0.0; x.len()];
    let m = c * g.hw();
    for s in 0..n {
        g.backward(
            k,
            f,
            x.item(s),
            &gy.data[s * f * g.hw()..(s + 1) * f * g.hw()],
            gk,
            gb,
            &mut cols,
            &mut gx[s * m..(s + 1) * m],
        );
    }
    Tensor {
        shape: x.shape.clone(),
        data: gx,
    }
}

// ------------------------------------------------------------ recurrent

/// Gate nonlinearity for one row of `4U` pre-activations laid out
/// `[f | i | g | o]`. Replaces `a` with the activations.
fn gates_forward(a: &mut [f64], c_prev: &[f64], c: &mut [f64], tc: &mut [f64], z: &mut [f64]) {
    let u = c.len();
    for j in 0..u {
        let f = sigmoid(a[j]);
        let i = sigmoid(a[u + j]);
        let g = a[2 * u + j].tanh();
        let o = sigmoid(a[3 * u + j]);
        a[j] = f;
        a[u + j] = i;
        a[2 * u + j] = g;
        a[3 * u + j] = o;
        c[j] = f * c_prev[j] + i * g;
        tc[j] = c[j].tanh();
        z[j] = o * tc[j];
    }
}

/// Reverse of [`gates_forward`]. `dc` holds the cell gradient flowing in
/// from the next step and is replaced by the gradient for `c_prev`.
fn gates_backward(
    act: &[f64],
    c_prev: &[f64],
    tc: &[f64],
    dz: &[f64],
    dc: &mut [f64],
    da: &mut [f64],
) {
    let u = dc.len();
    for j in 0..u {
        let (f, i, g, o) = (act[j], act[u + j], act[2 * u + j], act[3 * u + j]);
        let d_o = dz[j] * tc[j];
        let dcj = dc[j] + dz[j] * o * (1.0 - tc[j] * tc[j]);
        da[j] = dcj * c_prev[j] * f * (1.0 - f);
        da[u + j] = dcj * g * i * (1.0 - i);
        da[2 * u + j] = dcj * i * (1.0 - g * g);
        da[3 * u + j] = d_o * o * (1.0 - o);
        dc[j] = dcj * f;
    }
}

fn lstm_forward(
    p: &[f64],
    inputs: usize,
    hidden: usize,
    x: &Tensor,
    keep: bool,
) -> (Tensor, Cache) {
    let (n, t) = (x.shape[0], x.shape[1]);
    let k = inputs + hidden;
    let (w, b) = p.split_at(4 * hidden * k);
    let mut out = vec![0.0; n * t * hidden];
    let mut z = vec![0.0; n * hidden];
    let mut c_prev = vec![0.0; n * hidden];
    let mut cache = SeqCache::default();
    for step in 0..t {
        let mut xz = vec![0.0; n * k];
        for r in 0..n {
            xz[r * k..r * k + inputs].copy_from_slice(&x.data[(r * t + step) * inputs..][..inputs]);
            xz[r * k + inputs..(r + 1) * k].copy_from_slice(&z[r * hidden..(r + 1) * hidden]);
        }
        let mut a = vec![0.0; n * 4 * hidden];
        for r in 0..n {
            a[r * 4 * hidden..(r + 1) * 4 * hidden].copy_from_slice(b);
        }
        gemm(n, k, 4 * hidden, 1.0, &xz, false, w, true, 1.0, &mut a);
        let mut c = vec![0.0; n * hidden];
        let mut tc = vec![0.0; n * hidden];
        for r in 0..n {
            let rows = r * hidden..(r + 1) * hidden;
            gates_forward(
                &mut a[r * 4 * hidden..(r + 1) * 4 * hidden],
                &c_prev[rows.clone()],
                &mut c[rows.clone()],
                &mut tc[rows.clone()],
                &mut z[rows.clone()],
            );
            out[(r * t + step) * hidden..][..hidden].copy_from_slice(&z[rows]);
        }
        if keep {
            cache.xz.push(xz);
            cache.act.push(a);
            cache.c.push(c.clone());
            cache.tc.push(tc);
        }
        c_prev = c;
    }
    (
        Tensor {
            shape: vec![n, t, hidden],
            data: out,
        },
        Cache::Seq(cache),
    )
}

fn lstm_backward(
    p: &[f64],
    inputs: usize,
    hidden: usize,
    x: &Tensor,
    cache: &Cache,
    gy: &Tensor,
    gp: &mut [f64],
) -> Tensor {
    let Cache::Seq(sc) = cache else {
        unreachable!("recurrent cache");
    };
    let (n, t) = (x.shape[0], x.shape[1]);
    let k = inputs + hidden;
    let (w, _) = p.split_at(4 * hidden * k);
    let (gw, gb) = gp.split_at_mut(4 * hidden * k);
    let mut gx = vec![0.0; x.len()];
    let mut dz_next = vec![0.0; n * hidden];
    let mut dc = vec![0.0; n * hidden];
    let zeros = vec![0.0; n * hidden];
    let mut da = vec![0.0; n * 4 * hidden];
    let mut dxz = vec![0.0; n * k];
    for step in (0..t).rev() {
        let c_prev = if step == 0 { &zeros } else { &sc.c[step - 1] };
        for r in 0..n {
            let rows = r * hidden..(r + 1) * hidden;
            let mut dz: Vec<f64> = gy.data[(r * t + step) * hidden..][..hidden].to_vec();
            for (d, e) in dz.iter_mut().zip(&dz_next[rows.clone()]) {
                *d += e;
            }
            gates_backward(
                &sc.act[step][r * 4 * hidden..(r + 1) * 4 * hidden],
                &c_prev[rows.clone()],
                &sc.tc[step][rows.clone()],
                &dz,
                &mut dc[rows],
                &mut da[r * 4 * hidden..(r + 1) * 4 * hidden],
            );
        }
        gemm(
            4 * hidden,
            n,
            k,
            1.0,
            &da,
            true,
            &sc.xz[step],
            false,
            1.0,
            gw,
        );
        for r in 0..n {
            for (j, g) in gb.iter_mut().enumerate() {
                *g += da[r * 4 * hidden + j];
            }
        }
        gemm(n, 4 * hidden, k, 1.0, &da, false, w, false, 0.0, &mut dxz);
        for r in 0..n {
            gx[(r * t + step) * inputs..][..inputs].copy_from_slice(&dxz[r * k..r * k + inputs]);
            dz_next[r * hidden..(r + 1) * hidden]
                .copy_from_slice(&dxz[r * k + inputs..(r + 1) * k]);
        }
    }
    Tensor {
        shape: x.shape.clone(),
        data: gx,
    }
}

/// One LSTM step for a single sample: updates `(z, c)` in place.
pub(crate) fn lstm_step(
    p: &[f64],
    inputs: usize,
    hidden: usize,
    x: &[f64],
    z: &mut [f64],
    c: &mut [f64],
) {
    let k = inputs + hidden;
    let (w, b) = p.split_at(4 * hidden * k);
    let mut xz = Vec::with_capacity(k);
    xz.extend_from_slice(x);
    xz.extend_from_slice(z);
    let mut a = b.to_vec();
    gemm(1, k, 4 * hidden, 1.0, &xz, false, w, true, 1.0, &mut a);
    let c_prev = c.to_vec();
    let mut tc = vec![0.0; hidden];
    gates_forward(&mut a, &c_prev, c, &mut tc, z);
}

fn convlstm_forward(
    p: &[f64],
    spec: (usize, usize, usize, usize),
    x: &Tensor,
    keep: bool,
) -> (Tensor, Cache) {
    let (cin, hid, kh, kw) = spec;
    let (n, t, h, w) = (x.shape[0], x.shape[1], x.shape[3], x.shape[4]);
    let hw = h * w;
    let g = ConvGeom {
        c: cin + hid,
        h,
        w,
        kh,
        kw,
    };
    let (k, b) = p.split_at(4 * hid * g.rows());
    let u = hid * hw;
    let mut out = vec![0.0; n * t * u];
    let mut cols = vec![0.0; g.rows() * hw];
    let mut cache = SeqCache::default();
    // Cache entries are laid out [t] -> all samples concatenated.
    let mut xz_all = vec![vec![0.0; n * (cin + hid) * hw]; if keep { t } else { 0 }];
    let mut act_all = vec![vec![0.0; n * 4 * u]; if keep { t } else { 0 }];
    let mut c_all = vec![vec![0.0; n * u]; if keep { t } else { 0 }];
    let mut tc_all = vec![vec![0.0; n * u]; if keep { t } else { 0 }];
    for s in 0..n {
        let mut z = vec![0.0; u];
        let mut c_prev = vec![0.0; u];
        for step in 0..t {
            let mut xz = Vec::with_capacity((cin + hid) * hw);
            xz.extend_from_slice(&x.data[(s * t + step) * cin * hw..][..cin * hw]);
            xz.extend_from_slice(&z);
            let mut a = vec![0.0; 4 * u];
            g.forward(k, b, 4 * hid, &xz, &mut cols, &mut a);
            let mut c = vec![0.0; u];
            let mut tc = vec![0.0; u];
            gates_forward(&mut a, &c_prev, &mut c, &mut tc, &mut z);
            out[(s * t + step) * u..][..u].copy_from_slice(&z);
            if keep {
                xz_all[step][s * xz.len()..(s + 1) * xz.len()].copy_from_slice(&xz);
                act_all[step][s * 4 * u..(s + 1) * 4 * u].copy_from_slice(&a);
                c_all[step][s * u..(s + 1) * u].copy_from_slice(&c);
                tc_all[step][s * u..(s + 1) * u].copy_from_slice(&tc);
            }
            c_prev = c;
        }
    }
    cache.xz = xz_all;
    cache.act = act_all;
    cache.c = c_all;
    cache.tc = tc_all;
    (
        Tensor {
            shape: vec![n, t, hid, h, w],
            data: out,
        },
        Cache::Seq(cache),
    )
}

fn convlstm_backward(
    p: &[f64],
    spec: (usize, usize, usize, usize),
    x: &Tensor,
    cache: &Cache,
    gy: &Tensor,
    gp: &mut [f64],
) -> Tensor {
    let Cache::Seq(sc) = cache else {
        unreachable!("recurrent cache");
    };
    let (cin, hid, kh, kw) = spec;
    let (n, t, h, w) = (x.shape[0], x.shape[1], x.shape[3], x.shape[4]);
    let hw = h * w;
    let g = ConvGeom {
        c: cin + hid,
        h,
        w,
        kh,
        kw,
    };
    let (k, _) = p.split_at(4 * hid * g.rows());
    let (gk, gb) = gp.split_at_mut(4 * hid * g.rows());
    let u = hid * hw;
    let m = (cin + hid) * hw;
    let mut gx = vec![0.0; x.len()];
    let mut cols = vec![0.0; g.rows() * hw];
    let zeros = vec![0.0; u];
    let mut da = vec![0.0; 4 * u];
    let mut dxz = vec![0.0; m];
    for s in 0..n {
        let mut dz_next = vec![0.0; u];
        let mut dc = vec![0.0; u];
        for step in (0..t).rev() {
            let c_prev = if step == 0 {
                &zeros[..]
            } else {
                &sc.c[step - 1][s * u..(s + 1) * u]
            };
            let mut dz: Vec<f64> = gy.data[(s * t + step) * u..][..u].to_vec();
            for (d, e) in dz.iter_mut().zip(&dz_next) {
                *d += e;
            }
            gates_backward(
                &sc.act[step][s * 4 * u..(s + 1) * 4 * u],
                c_prev,
                &sc.tc[step][s * u..(s + 1) * u],
                &dz,
                &mut dc,
                &mut da,
            );
            g.backward(
                k,
                4 * hid,
                &sc.xz[step][s * m..(s + 1) * m],
                &da,
                gk,
                gb,
                &mut cols,
                &mut dxz,
            );
            gx[(s * t + step) * cin * hw..][..cin * hw].copy_from_slice(&dxz[..cin * hw]);
            dz_next.copy_from_slice(&dxz[cin * hw..]);
        }
    }
    Tensor {
        shape: x.shape.clone(),
        data: gx,
    }
}

// ------------------------------------------------------------- dispatch

pub(crate) fn forward(
    spec: &LayerSpec,
    p: &[f64],
    state: &[f64],
    x: &Tensor,
    train: bool,
) -> (Tensor, Cache) {
    match *spec {
        LayerSpec::Dense { inputs, outputs } => (dense_forward(p, inputs, outputs, x), Cache::None),
        LayerSpec::Relu => (
            Tensor {
                shape: x.shape.clone(),
                data: x.data.iter().map(|&v| v.max(0.0)).collect(),
            },
            Cache::None,
        ),
        LayerSpec::BatchNorm { .. } => {
            if train {
                bn_forward_train(p, x)
            } else {
                (bn_forward_eval(p, state, x), Cache::None)
            }
        }
        LayerSpec::Conv2d {
            in_ch,
            out_ch,
            kh,
            kw,
        } => (conv_forward(p, (in_ch, out_ch, kh, kw), x), Cache::None),
        LayerSpec::Lstm { inputs, hidden } => lstm_forward(p, inputs, hidden, x, train),
        LayerSpec::ConvLstm {
            in_ch,
            hidden,
            kh,
            kw,
        } => convlstm_forward(p, (in_ch, hidden, kh, kw), x, train),
    }
}

pub(crate) fn backward(
    spec: &LayerSpec,
    p: &[f64],
    x: &Tensor,
    cache: &Cache,
    gy: &Tensor,
    gp: &mut [f64],
) -> Tensor {
    match *spec {
        LayerSpec::Dense { inputs, outputs } => dense_backward(p, inputs, outputs, x, gy, gp),
        LayerSpec::Relu => Tensor {
            shape: x.shape.clone(),
            data: x
                .data
                .iter()
                .zip(&gy.data)
                .map(|(&v, &g)| if v > 0.0 { g } else { 0.0 })
                .collect(),
        },
        LayerSpec::BatchNorm { .. } => bn_backward(p, x, cache, gy, gp),
        LayerSpec::Conv2d {
            in_ch,
            out_ch,
            kh,
            kw,
        } => conv_backward(p, (in_ch, out_ch, kh, kw), x, gy, gp),
        LayerSpec::Lstm { inputs, hidden } => lstm_backward(p, inputs, hidden, x, cache, gy, gp),
        LayerSpec::ConvLstm {
            in_ch,
            hidden,
            kh,
            kw,
        } => convlstm_backward(p, (in_ch, hidden, kh, kw), x, cache, gy, gp),
    }
}

/// Batch statistics gathered by a training pass, for running averages.
pub(crate) fn batch_stats(cache: &Cache) -> Option<(&[f64], &[f64])> {
    match cache {
        Cache::Bn { mean, var, .. } => Some((mean, var)),
        _ => None,
    }
}
