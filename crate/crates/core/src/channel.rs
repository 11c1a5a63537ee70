//! Doubly-dispersive vehicular channels: WSSUS tapped delay lines with
//! per-tap Jakes fading (Clarke sum of sinusoids), AWGN, and the
//! ground-truth responses estimators are scored against.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CGrid, C64};
use crate::phy::{unitary_dft, PhyConfig, TimeSignal};

/// Oscillators per tap in the sum-of-sinusoids generator.
pub const JAKES_OSCILLATORS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelName {
    #[serde(rename = "VTV-UC")]
    VtvUc,
    #[serde(rename = "VTV-SDWW")]
    VtvSdww,
    #[serde(rename = "custom")]
    Custom,
}

impl ModelName {
    pub fn id(self) -> u32 {
        match self {
            ModelName::VtvUc => 0,
            ModelName::VtvSdww => 1,
            ModelName::Custom => 2,
        }
    }

    fn from_id(id: u32) -> Result<Self> {
        match id {
            0 => Ok(ModelName::VtvUc),
            1 => Ok(ModelName::VtvSdww),
            2 => Ok(ModelName::Custom),
            _ => Err(Error::config(format!("unknown channel model id {id}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub name: ModelName,
    pub path_gains_db: Vec<f64>,
    pub path_delays_ns: Vec<f64>,
    pub doppler_hz: f64,
    pub velocity_kmph: f64,
}

impl ChannelModel {
    /// Urban canyon, 45 km/h.
    pub fn vtv_uc() -> Self {
        Self {
            name: ModelName::VtvUc,
            path_gains_db: vec![
                0.0, 0.0, -10.0, -10.0, -10.0, -17.8, -17.8, -17.8, -21.1, -21.1, -26.3, -26.3,
            ],
            path_delays_ns: vec![
                0.0, 1.0, 100.0, 101.0, 102.0, 200.0, 201.0, 202.0, 300.0, 301.0, 400.0, 401.0,
            ],
            doppler_hz: 250.0,
            velocity_kmph: 45.0,
        }
    }

    /// Expressway same direction with wall. `doppler_hz` is 500 (100 km/h)
    /// or 1000 (200 km/h) in the studied scenarios.
    pub fn vtv_sdww(doppler_hz: f64) -> Self {
        Self {
            name: ModelName::VtvSdww,
            path_gains_db: vec![
                0.0, 0.0, -11.2, -11.2, -19.0, -21.9, -25.3, -25.3, -24.4, -28.0, -26.1, -26.1,
            ],
            path_delays_ns: vec![
                0.0, 1.0, 100.0, 101.0, 200.0, 300.0, 400.0, 401.0, 500.0, 600.0, 700.0, 701.0,
            ],
            doppler_hz,
            velocity_kmph: if doppler_hz >= 1000.0 { 200.0 } else { 100.0 },
        }
    }

    /// Looks up a model by name (`VTV-UC`, `VTV-SDWW`). A `doppler_hz` of
    /// `None` keeps the model default (SDWW defaults to 500 Hz).
    pub fn by_name(name: &str, doppler_hz: Option<f64>) -> Result<Self> {
        let mut m = match name.trim().to_ascii_uppercase().as_str() {
            "VTV-UC" | "VTV_UC" | "UC" => Self::vtv_uc(),
            "VTV-SDWW" | "VTV_SDWW" | "SDWW" => Self::vtv_sdww(500.0),
            other => return Err(Error::config(format!("unknown channel model `{other}`"))),
        };
        if let Some(fd) = doppler_hz {
            if !(fd >= 0.0 && fd.is_finite()) {
                return Err(Error::config(format!("invalid Doppler frequency {fd}")));
            }
            m.doppler_hz = fd;
        }
        Ok(m)
    }

    pub fn with_doppler(mut self, doppler_hz: f64) -> Self {
        self.doppler_hz = doppler_hz;
        self
    }

    pub fn label(&self) -> String {
        let n = match self.name {
            ModelName::VtvUc => "VTV-UC",
            ModelName::VtvSdww => "VTV-SDWW",
            ModelName::Custom => "custom",
        };
        format!("{n} {} Hz", self.doppler_hz)
    }

    /// Linear path powers normalized to unit sum, one per listed path.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self
            .path_gains_db
            .iter()
            .map(|g| 10f64.powf(g / 10.0))
            .collect();
        let total: f64 = lin.iter().sum();
        lin.iter().map(|p| p / total).collect()
    }

    pub fn max_delay_s(&self) -> f64 {
        self.path_delays_ns.iter().cloned().fold(0.0, f64::max) * 1e-9
    }

    /// Sample-spaced profile: delays rounded to the nearest sample and the
    /// powers of coincident paths merged. Sorted by delay.
    pub fn sampled_profile(&self, sample_rate_hz: f64) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = Vec::new();
        for (d, p) in self.path_delays_ns.iter().zip(self.normalized_powers()) {
            let s = (d * 1e-9 * sample_rate_hz).round() as usize;
            match out.iter_mut().find(|(x, _)| *x == s) {
                Some(e) => e.1 += p,
                None => out.push((s, p)),
            }
        }
        out.sort_by_key(|e| e.0);
        out
    }

    /// Number of sample-spaced taps spanned by the profile (max delay + 1).
    pub fn tap_span(&self, sample_rate_hz: f64) -> usize {
        self.sampled_profile(sample_rate_hz)
            .last()
            .map_or(1, |e| e.0 + 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_gains_db.is_empty() || self.path_gains_db.len() != self.path_delays_ns.len() {
            return Err(Error::config(
                "path gains and delays must be non-empty and equal length",
            ));
        }
        if self
            .path_delays_ns
            .iter()
            .any(|d| *d < 0.0 || !d.is_finite())
        {
            return Err(Error::config("path delays must be finite and non-negative"));
        }
        if !(self.doppler_hz >= 0.0 && self.doppler_hz.is_finite()) {
            return Err(Error::config(
                "Doppler frequency must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

/// One realization: `taps[t][n]` is the gain of tap `t` (delay `delays[t]`
/// samples) at sample `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub delays: Vec<usize>,
    pub taps: Vec<Vec<C64>>,
    pub model: ChannelModel,
    pub seed: u64,
    pub sample_rate_hz: f64,
}

impl ChannelRealization {
    pub fn n_taps(&self) -> usize {
        self.taps.len()
    }

    pub fn n_samples(&self) -> usize {
        self.taps.first().map_or(0, |t| t.len())
    }

    /// Time-invariant channel with the given taps at the given delays.
    pub fn fixed(delays: &[usize], gains: &[C64], n_samples: usize, sample_rate_hz: f64) -> Self {
        let powers: Vec<f64> = gains.iter().map(|g| g.norm_sqr()).collect();
        let total: f64 = powers.iter().sum::<f64>().max(f64::MIN_POSITIVE);
        Self {
            delays: delays.to_vec(),
            taps: gains.iter().map(|&g| vec![g; n_samples]).collect(),
            model: ChannelModel {
                name: ModelName::Custom,
                path_gains_db: powers.iter().map(|p| 10.0 * (p / total).log10()).collect(),
                path_delays_ns: delays
                    .iter()
                    .map(|&d| d as f64 / sample_rate_hz * 1e9)
                    .collect(),
                doppler_hz: 0.0,
                velocity_kmph: 0.0,
            },
            seed: 0,
            sample_rate_hz,
        }
    }

    /// Dense tap vector (index = delay) at sample `n`.
    pub fn impulse_response(&self, n: usize) -> Vec<C64> {
        let span = self.delays.iter().max().map_or(0, |d| d + 1);
        let mut h = vec![C64::new(0.0, 0.0); span];
        for (t, &d) in self.delays.iter().enumerate() {
            h[d] += self.taps[t][n];
        }
        h
    }

    /// Frequency response `sum_l h[l, n] e^{-j 2 pi l k / K}` over all `K`
    /// bins at sample `n` (non-unitary, so a unit tap gives unit gain).
    pub fn frequency_response(&self, n: usize, fft_size: usize) -> Vec<C64> {
        let mut h = vec![C64::new(0.0, 0.0); fft_size];
        for (t, &d) in self.delays.iter().enumerate() {
            h[d % fft_size] += self.taps[t][n];
        }
        let scale = (fft_size as f64).sqrt();
        unitary_dft(&h).into_iter().map(|z| z * scale).collect()
    }
}

/// Generates a realization of `n_samples` samples. Each sample-spaced tap
/// is an independent sum of [`JAKES_OSCILLATORS`] complex sinusoids with
/// uniform arrival angles and phases.
pub fn generate_channel(
    model: &ChannelModel,
    sample_rate_hz: f64,
    n_samples: usize,
    seed: u64,
) -> Result<ChannelRealization> {
    model.validate()?;
    if n_samples == 0 {
        return Err(Error::shape("channel needs at least one sample"));
    }
    let profile = model.sampled_profile(sample_rate_hz);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = JAKES_OSCILLATORS;
    let nu = model.doppler_hz / sample_rate_hz;
    let mut taps = Vec::with_capacity(profile.len());
    for &(_, power) in &profile {
        let amp = (power / m as f64).sqrt();
        let mut phasors = Vec::with_capacity(m);
        let mut steps = Vec::with_capacity(m);
        for _ in 0..m {
            let theta: f64 = rng.gen_range(0.0..2.0 * PI);
            let phi: f64 = rng.gen_range(0.0..2.0 * PI);
            phasors.push(C64::from_polar(amp, phi));
            steps.push(C64::from_polar(1.0, 2.0 * PI * nu * theta.cos()));
        }
        let mut tap = Vec::with_capacity(n_samples);
        for n in 0..n_samples {
            // Re-anchor periodically to keep the recurrence from drifting.
            if n > 0 && n % 4096 == 0 {
                for z in phasors.iter_mut() {
                    *z = C64::from_polar(amp, z.arg());
                }
            }
            tap.push(phasors.iter().sum());
            for (z, s) in phasors.iter_mut().zip(&steps) {
                *z *= s;
            }
        }
        taps.push(tap);
    }
    Ok(ChannelRealization {
        delays: profile.iter().map(|e| e.0).collect(),
        taps,
        model: model.clone(),
        seed,
        sample_rate_hz,
    })
}

/// `y[n] = sum_l h[l, n] x[n - d_l]`, samples before the start of the
/// signal taken as zero.
pub fn apply_channel(sig: &TimeSignal, ch: &ChannelRealization) -> Result<TimeSignal> {
    let n = sig.samples.len();
    if ch.n_samples() < n {
        return Err(Error::shape(format!(
            "channel has {} samples, signal has {n}",
            ch.n_samples()
        )));
    }
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (t, &d) in ch.delays.iter().enumerate() {
        let tap = &ch.taps[t];
        for k in d..n {
            out[k] += tap[k] * sig.samples[k - d];
        }
    }
    Ok(TimeSignal {
        samples: out,
        sample_rate_hz: sig.sample_rate_hz,
    })
}

/// Adds circular complex Gaussian noise of total per-sample variance `var`.
pub fn add_noise(sig: &TimeSignal, var: f64, seed: u64) -> TimeSignal {
    if var <= 0.0 {
        return sig.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = (var / 2.0).sqrt();
    let samples = sig
        .samples
        .iter()
        .map(|&x| {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            x + C64::new(a * s, b * s)
        })
        .collect();
    TimeSignal {
        samples,
        sample_rate_hz: sig.sample_rate_hz,
    }
}

/// AWGN at `snr_db` relative to the measured power of `sig`. Returns the
/// noisy signal and the noise variance used; `+inf` leaves the signal
/// unchanged with variance 0.
pub fn add_awgn(sig: &TimeSignal, snr_db: f64, seed: u64) -> Result<(TimeSignal, f64)> {
    if snr_db == f64::INFINITY {
        return Ok((sig.clone(), 0.0));
    }
    let p = sig.power();
    if !(p > 0.0) {
        return Err(Error::shape("AWGN needs a signal with positive power"));
    }
    let var = p / 10f64.powf(snr_db / 10.0);
    Ok((add_noise(sig, var, seed), var))
}

/// First sample of the useful (post-CP) part of OFDM symbol `s`, counting
/// preambles first.
fn useful_start(cfg: &PhyConfig, s: usize) -> usize {
    s * cfg.symbol_len() + cfg.cp_len
}

/// Per-symbol average of the frequency response over the useful samples,
/// at the active subcarriers of the given OFDM symbol slots.
fn averaged_response(ch: &ChannelRealization, cfg: &PhyConfig, slots: &[usize]) -> Result<CGrid> {
    let k = cfg.fft_size;
    let last = slots.iter().max().map_or(0, |&s| useful_start(cfg, s) + k);
    if ch.n_samples() < last {
        return Err(Error::shape("channel realization shorter than the frame"));
    }
    let bins = cfg.active_bins();
    let mut cols = Vec::with_capacity(slots.len());
    for &s in slots {
        let start = useful_start(cfg, s);
        let mut avg = vec![C64::new(0.0, 0.0); k];
        for (t, &d) in ch.delays.iter().enumerate() {
            let mean: C64 = ch.taps[t][start..start + k].iter().sum::<C64>() / k as f64;
            avg[d % k] += mean;
        }
        let scale = (k as f64).sqrt();
        let freq = unitary_dft(&avg);
        cols.push(bins.iter().map(|&b| freq[b] * scale).collect());
    }
    Ok(CGrid::from_columns(bins.len(), &cols))
}

/// Ground-truth grid `K_on x I`: the frequency response averaged over the
/// `K` useful samples of each data symbol.
pub fn true_channel_grid(ch: &ChannelRealization, cfg: &PhyConfig) -> Result<CGrid> {
    let slots: Vec<usize> = (0..cfg.n_symbols).map(|i| cfg.n_preambles + i).collect();
    averaged_response(ch, cfg, &slots)
}

/// Averaged response during the preamble symbols, `K_on x P`.
pub fn true_preamble_grid(ch: &ChannelRealization, cfg: &PhyConfig) -> Result<CGrid> {
    let slots: Vec<usize> = (0..cfg.n_preambles).collect();
    averaged_response(ch, cfg, &slots)
}

/// Empirical Doppler interference variance per active subcarrier: the
/// inter-carrier leakage term of the received model, evaluated against
/// random unit-energy QPSK symbols on the active subcarriers. `draws`
/// symbol vectors are drawn per data symbol of the frame.
pub fn doppler_interference_variance(
    ch: &ChannelRealization,
    cfg: &PhyConfig,
    draws: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(doppler_interference_stats(ch, cfg, draws, seed)?.0)
}

/// Variance per active subcarrier and the mean cross-subcarrier
/// correlation matrix (`K_on x K_on`, row-major).
pub fn doppler_interference_stats(
    ch: &ChannelRealization,
    cfg: &PhyConfig,
    draws: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<C64>)> {
    let k = cfg.fft_size;
    let bins = cfg.active_bins();
    let kon = bins.len();
    let last = useful_start(cfg, cfg.n_preambles + cfg.n_symbols - 1) + k;
    if ch.n_samples() < last {
        return Err(Error::shape("channel realization shorter than the frame"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut var = vec![0.0; kon];
    let mut cross = vec![C64::new(0.0, 0.0); kon * kon];
    let mut count = 0usize;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..cfg.n_symbols {
        let start = useful_start(cfg, cfg.n_preambles + i);
        // resp[n][q]: frequency response at useful sample n.
        let resp: Vec<Vec<C64>> = (0..k)
            .map(|n| ch.frequency_response(start + n, k))
            .collect();
        // g[a][b] = (1/K) sum_n resp[n][q_b] e^{-j 2 pi n (k_a - q_b) / K}
        let mut g = vec![C64::new(0.0, 0.0); kon * kon];
        for (b, &qb) in bins.iter().enumerate() {
            let series: Vec<C64> = (0..k).map(|n| resp[n][qb]).collect();
            let spec = unitary_dft(&series);
            let s = 1.0 / (k as f64).sqrt();
            for (a, &ka) in bins.iter().enumerate() {
                if a != b {
                    g[a * kon + b] = spec[(ka + k - qb) % k] * s;
                }
            }
        }
        for _ in 0..draws {
            let x: Vec<C64> = (0..kon)
                .map(|_| {
                    C64::new(
                        if rng.gen::<bool>() { r } else { -r },
                        if rng.gen::<bool>() { r } else { -r },
                    )
                })
                .collect();
            let e: Vec<C64> = (0..kon)
                .map(|a| (0..kon).map(|b| g[a * kon + b] * x[b]).sum())
                .collect();
            for a in 0..kon {
                var[a] += e[a].norm_sqr();
                for b in 0..kon {
                    cross[a * kon + b] += e[a] * e[b].conj();
                }
            }
            count += 1;
        }
    }
    let n = count.max(1) as f64;
    var.iter_mut().for_each(|v| *v /= n);
    cross.iter_mut().for_each(|v| *v /= n);
    Ok((var, cross))
}

const TRACE_MAGIC: &[u8; 4] = b"DDCT";

/// Writes the realization as a little-endian trace: magic `DDCT`, `L: u32`,
/// `N: u64`, `f_d: f64`, `model_id: u32`, the `L` tap delays as `u32`, then
/// `L x N` row-major complex64 (`f32` re, `f32` im) taps.
pub fn write_trace(ch: &ChannelRealization, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&(ch.n_taps() as u32).to_le_bytes())?;
    w.write_all(&(ch.n_samples() as u64).to_le_bytes())?;
    w.write_all(&ch.model.doppler_hz.to_le_bytes())?;
    w.write_all(&ch.model.name.id().to_le_bytes())?;
    for &d in &ch.delays {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for tap in &ch.taps {
        for z in tap {
            w.write_all(&(z.re as f32).to_le_bytes())?;
            w.write_all(&(z.im as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Trace contents as read back: taps at `f32` precision.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    pub model: ModelName,
    pub doppler_hz: f64,
    pub delays: Vec<usize>,
    pub taps: Vec<Vec<C64>>,
}

pub fn read_trace(r: &mut impl Read) -> Result<ChannelTrace> {
    let bad = |m: &str| Error::shape(format!("malformed channel trace: {m}"));
    let mut buf4 = [0u8; 4];
    let mut buf8 = [0u8; 8];
    let io = |e: std::io::Error| bad(&e.to_string());
    r.read_exact(&mut buf4).map_err(io)?;
    if &buf4 != TRACE_MAGIC {
        return Err(bad("bad magic"));
    }
    r.read_exact(&mut buf4).map_err(io)?;
    let l = u32::from_le_bytes(buf4) as usize;
    r.read_exact(&mut buf8).map_err(io)?;
    let n = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8).map_err(io)?;
    let doppler_hz = f64::from_le_bytes(buf8);
    r.read_exact(&mut buf4).map_err(io)?;
    let model = ModelName::from_id(u32::from_le_bytes(buf4))?;
    let mut delays = Vec::with_capacity(l);
    for _ in 0..l {
        r.read_exact(&mut buf4).map_err(io)?;
        delays.push(u32::from_le_bytes(buf4) as usize);
    }
    let mut taps = Vec::with_capacity(l);
    for _ in 0..l {
        let mut tap = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut buf4).map_err(io)?;
            let re = f32::from_le_bytes(buf4);
            r.read_exact(&mut buf4).map_err(io)?;
            let im = f32::from_le_bytes(buf4);
            tap.push(C64::new(re as f64, im as f64));
        }
        taps.push(tap);
    }
    Ok(ChannelTrace {
        model,
        doppler_hz,
        delays,
        taps,
    })
}

pub fn save_trace(ch: &ChannelRealization, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_trace(ch, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{
        build_frame, ofdm_demodulate, ofdm_modulate, random_bits, Modulation, PilotLayout,
    };
    use crate::special::j0;

    const FS: f64 = 10e6;

    #[test]
    fn table_iv_power_profiles() {
        for m in [ChannelModel::vtv_uc(), ChannelModel::vtv_sdww(500.0)] {
            let p = m.normalized_powers();
            assert_eq!(p.len(), 12);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let total: f64 = m.path_gains_db.iter().map(|g| 10f64.powf(g / 10.0)).sum();
            for (pi, g) in p.iter().zip(&m.path_gains_db) {
                assert!((pi - 10f64.powf(g / 10.0) / total).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_profiles_merge_coincident_paths() {
        let uc = ChannelModel::vtv_uc().sampled_profile(FS);
        assert_eq!(
            uc.iter().map(|e| e.0).collect::<Vec<_>>(),
            vec![0, 1, 2, 3, 4]
        );
        let sd = ChannelModel::vtv_sdww(500.0).sampled_profile(FS);
        assert_eq!(sd.len(), 8);
        assert!((sd.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(ChannelModel::vtv_sdww(1000.0).max_delay_s() <= 16.0 / FS);
    }

    #[test]
    fn unknown_model_is_rejected() {
        assert!(matches!(
            ChannelModel::by_name("TDL-A", None),
            Err(Error::Config(_))
        ));
        assert_eq!(
            ChannelModel::by_name("vtv-sdww", Some(1000.0))
                .unwrap()
                .doppler_hz,
            1000.0
        );
    }

    #[test]
    fn zero_doppler_is_static() {
        let ch = generate_channel(&ChannelModel::vtv_uc().with_doppler(0.0), FS, 500, 3).unwrap();
        for tap in &ch.taps {
            assert!(tap.iter().all(|z| (z - tap[0]).norm() < 1e-12));
        }
    }

    #[test]
    fn same_seed_same_realization() {
        let m = ChannelModel::vtv_uc();
        let a = generate_channel(&m, FS, 1000, 7).unwrap();
        let b = generate_channel(&m, FS, 1000, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_channel(&m, FS, 1000, 8).unwrap();
        assert_ne!(a.taps, c.taps);
    }

    #[test]
    fn identity_channel_passes_signal() {
        let sig = TimeSignal {
            samples: (0..50).map(|n| C64::new(n as f64, -1.0)).collect(),
            sample_rate_hz: FS,
        };
        let ch = ChannelRealization::fixed(&[0], &[C64::new(1.0, 0.0)], 50, FS);
        assert_eq!(apply_channel(&sig, &ch).unwrap(), sig);
        let short = ChannelRealization::fixed(&[0], &[C64::new(1.0, 0.0)], 10, FS);
        assert!(matches!(apply_channel(&sig, &short), Err(Error::Shape(_))));
    }

    #[test]
    fn impulse_reproduces_taps() {
        let gains = [C64::new(0.5, 0.1), C64::new(0.0, -0.3), C64::new(0.2, 0.2)];
        let ch = ChannelRealization::fixed(&[0, 1, 2], &gains, 20, FS);
        let mut samples = vec![C64::new(0.0, 0.0); 20];
        samples[5] = C64::new(1.0, 0.0);
        let y = apply_channel(
            &TimeSignal {
                samples,
                sample_rate_hz: FS,
            },
            &ch,
        )
        .unwrap();
        assert_eq!(&y.samples[5..8], &gains);
    }

    #[test]
    fn static_channel_is_diagonal_in_frequency() {
        let cfg = PhyConfig::ieee80211p(4, Modulation::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let bits = random_bits(PilotLayout::Comb.data_bits(&cfg), &mut rng);
        let frame = build_frame(&bits, &cfg, &PilotLayout::Comb).unwrap();
        let x = ofdm_modulate(&frame, &cfg).unwrap();
        let gains = [
            C64::new(0.8, 0.1),
            C64::new(-0.3, 0.4),
            C64::new(0.0, 0.2),
            C64::new(0.1, -0.1),
        ];
        let delays = [0, 1, 3, 7];
        let ch = ChannelRealization::fixed(&delays, &gains, x.samples.len(), FS);
        let y = ofdm_demodulate(&apply_channel(&x, &ch).unwrap(), &cfg).unwrap();
        // Oracle: DFT of the zero-padded impulse response, computed directly.
        let h: Vec<C64> = (0..64)
            .map(|k| {
                delays
                    .iter()
                    .zip(&gains)
                    .map(|(&d, &g)| g * C64::from_polar(1.0, -2.0 * PI * (d * k) as f64 / 64.0))
                    .sum()
            })
            .collect();
        for i in 0..4 {
            for k in 0..64 {
                let want = h[k] * frame.values.get(k, i);
                assert!((y.values.get(k, i) - want).norm() < 1e-9);
            }
        }
        let truth = true_channel_grid(&ch, &cfg).unwrap();
        for (r, &b) in cfg.active_bins().iter().enumerate() {
            for i in 0..4 {
                assert!((truth.get(r, i) - h[b]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_tap_truth_is_all_ones() {
        let cfg = PhyConfig::ieee80211p(3, Modulation::Qpsk);
        let ch = ChannelRealization::fixed(&[0], &[C64::new(1.0, 0.0)], cfg.signal_len(), FS);
        let t = true_channel_grid(&ch, &cfg).unwrap();
        assert!(t
            .as_slice()
            .iter()
            .all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn zero_doppler_truth_columns_identical() {
        let cfg = PhyConfig::ieee80211p(5, Modulation::Qpsk);
        let m = ChannelModel::vtv_sdww(0.0);
        let ch = generate_channel(&m, FS, cfg.signal_len(), 1).unwrap();
        let t = true_channel_grid(&ch, &cfg).unwrap();
        for i in 1..5 {
            for r in 0..52 {
                assert!((t.get(r, i) - t.get(r, 0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn awgn_power_and_sentinel() {
        let sig = TimeSignal {
            samples: vec![C64::new(1.0, 0.0); 1_000_000],
            sample_rate_hz: FS,
        };
        let (noisy, var) = add_awgn(&sig, 0.0, 1).unwrap();
        assert!((var - 1.0).abs() < 1e-12);
        let p: f64 = noisy
            .samples
            .iter()
            .map(|z| (z - C64::new(1.0, 0.0)).norm_sqr())
            .sum::<f64>()
            / 1e6;
        assert!((p - 1.0).abs() < 0.02);
        let (same, v0) = add_awgn(&sig, f64::INFINITY, 1).unwrap();
        assert_eq!((same, v0), (sig.clone(), 0.0));
        let (other, _) = add_awgn(&sig, 0.0, 2).unwrap();
        assert_ne!(other, noisy);
    }

    #[test]
    fn autocorrelation_follows_bessel() {
        let m = ChannelModel::vtv_sdww(1000.0);
        // 2 ms covers f_d * tau up to 2.
        let n = 20_001;
        let lags: Vec<usize> = (0..=20).map(|j| j * 1000).collect();
        let mut acc = vec![0.0; lags.len()];
        let mut p0 = 0.0;
        let reals = 200;
        for s in 0..reals {
            let ch = generate_channel(&m, FS, n, 1000 + s).unwrap();
            let tap = &ch.taps[0];
            p0 += ch.taps[0]
                .iter()
                .step_by(97)
                .map(|z| z.norm_sqr())
                .sum::<f64>()
                / tap.iter().step_by(97).count() as f64;
            for (j, &lag) in lags.iter().enumerate() {
                acc[j] += (tap[0] * tap[lag].conj()).re;
            }
        }
        p0 /= reals as f64;
        let mut worst: f64 = 0.0;
        for (j, &lag) in lags.iter().enumerate() {
            let tau = lag as f64 / FS;
            let want = j0(2.0 * PI * 1000.0 * tau);
            worst = worst.max((acc[j] / reals as f64 / p0 - want).abs());
        }
        // Single-origin estimate; the acceptance suite uses many origins.
        assert!(worst < 0.25, "worst deviation {worst}");
    }

    #[test]
    fn doppler_interference_vanishes_without_doppler_and_grows_with_it() {
        let cfg = PhyConfig::ieee80211p(4, Modulation::Qpsk);
        let still =
            generate_channel(&ChannelModel::vtv_sdww(0.0), FS, cfg.signal_len(), 2).unwrap();
        let v = doppler_interference_variance(&still, &cfg, 10, 1).unwrap();
        assert!(v.iter().all(|x| *x < 1e-20));
        let mut means = Vec::new();
        for fd in [250.0, 500.0, 1000.0] {
            let mut acc = 0.0;
            for s in 0..20 {
                let ch =
                    generate_channel(&ChannelModel::vtv_sdww(fd), FS, cfg.signal_len(), s).unwrap();
                let v = doppler_interference_variance(&ch, &cfg, 5, s).unwrap();
                acc += v.iter().sum::<f64>();
            }
            means.push(acc);
        }
        assert!(means[0] < means[1] && means[1] < means[2], "{means:?}");
    }

    #[test]
    fn trace_round_trip() {
        let ch = generate_channel(&ChannelModel::vtv_uc(), FS, 33, 4).unwrap();
        let mut buf = Vec::new();
        write_trace(&ch, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 8 + 8 + 4 + 4 * 5 + 5 * 33 * 8);
        let t = read_trace(&mut buf.as_slice()).unwrap();
        assert_eq!(t.delays, ch.delays);
        assert_eq!(t.model, ModelName::VtvUc);
        for (a, b) in t.taps.iter().flatten().zip(ch.taps.iter().flatten()) {
            assert!((a - b).norm() < 1e-6);
        }
        assert!(read_trace(&mut &b"XXXX"[..]).is_err());
    }
}
