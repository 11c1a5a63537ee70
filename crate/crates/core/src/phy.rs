//! OFDM physical layer with the IEEE 802.11p (10 MHz) parameterization.
//!
//! Subcarriers are addressed by signed logical index `k` in `[-K/2, K/2)`;
//! the DFT bin of `k` is `(k + K) mod K`. The active set is ordered by
//! increasing frequency, which is the ordering every estimator uses.

use std::sync::Arc;

use rand::Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{CGrid, C64};

/// 802.11a/p long training sequence for subcarriers -26..=26 (DC is 0).
const LONG_TRAINING: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1, -1,
    -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modulation {
    Qpsk,
    #[serde(rename = "16qam")]
    Qam16,
}

// Gray-coded amplitude levels per axis, indexed by the axis bits (MSB first).
const QPSK_LEVELS: [f64; 2] = [1.0, -1.0];
const QAM16_LEVELS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
        }
    }

    fn axis_bits(self) -> usize {
        self.bits_per_symbol() / 2
    }

    fn scale(self) -> f64 {
        match self {
            Modulation::Qpsk => std::f64::consts::FRAC_1_SQRT_2,
            Modulation::Qam16 => 1.0 / 10f64.sqrt(),
        }
    }

    fn levels(self) -> &'static [f64] {
        match self {
            Modulation::Qpsk => &QPSK_LEVELS,
            Modulation::Qam16 => &QAM16_LEVELS,
        }
    }

    /// Constellation point for a symbol word (first half of the bits on I).
    pub fn point(self, word: usize) -> C64 {
        let ab = self.axis_bits();
        let mask = (1 << ab) - 1;
        let levels = self.levels();
        let i = levels[(word >> ab) & mask];
        let q = levels[word & mask];
        C64::new(i, q) * self.scale()
    }

    /// All points, indexed by symbol word.
    pub fn constellation(self) -> Vec<C64> {
        (0..1usize << self.bits_per_symbol())
            .map(|w| self.point(w))
            .collect()
    }

    /// Nearest axis level (unscaled) with ties resolved toward the smaller
    /// level; returns `(level, axis bits)`.
    fn slice_axis(self, x: f64) -> (f64, usize) {
        let levels = self.levels();
        let mut best = 0;
        for (idx, &l) in levels.iter().enumerate() {
            let d = (x - l).abs();
            let bd = (x - levels[best]).abs();
            if d < bd || (d == bd && l < levels[best]) {
                best = idx;
            }
        }
        (levels[best], best)
    }

    /// Hard decision to the nearest constellation point. Ties are broken
    /// toward the lexicographically smallest point (real, then imaginary).
    pub fn decide(self, y: C64) -> C64 {
        let s = self.scale();
        let (i, _) = self.slice_axis(y.re / s);
        let (q, _) = self.slice_axis(y.im / s);
        C64::new(i * s, q * s)
    }

    /// Hard decision returning the symbol word.
    pub fn decide_word(self, y: C64) -> usize {
        let s = self.scale();
        let (_, wi) = self.slice_axis(y.re / s);
        let (_, wq) = self.slice_axis(y.im / s);
        (wi << self.axis_bits()) | wq
    }
}

/// Maps bits (one `u8` per bit, 0 or 1) to unit-average-energy symbols.
pub fn modulate(bits: &[u8], order: Modulation) -> Result<Vec<C64>> {
    let bps = order.bits_per_symbol();
    if !bits.len().is_multiple_of(bps) {
        return Err(Error::shape(format!(
            "{} bits is not a multiple of {} bits per symbol",
            bits.len(),
            bps
        )));
    }
    Ok(bits
        .chunks(bps)
        .map(|c| order.point(c.iter().fold(0usize, |w, &b| (w << 1) | (b & 1) as usize)))
        .collect())
}

/// Nearest-point demapping.
pub fn demap(symbols: &[C64], order: Modulation) -> Vec<C64> {
    symbols.iter().map(|&y| order.decide(y)).collect()
}

/// Hard-decision bits for each symbol, MSB first.
pub fn demap_bits(symbols: &[C64], order: Modulation) -> Vec<u8> {
    let bps = order.bits_per_symbol();
    let mut out = Vec::with_capacity(symbols.len() * bps);
    for &y in symbols {
        let w = order.decide_word(y);
        for b in (0..bps).rev() {
            out.push(((w >> b) & 1) as u8);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhyConfig {
    /// Total subcarriers `K` (DFT size).
    pub fft_size: usize,
    pub cp_len: usize,
    /// Frame length `I` in OFDM symbols, excluding preambles.
    pub n_symbols: usize,
    pub sample_rate_hz: f64,
    pub modulation: Modulation,
    /// Number of repeated preamble symbols `P`.
    pub n_preambles: usize,
    /// Active subcarriers, signed logical indices in increasing order.
    pub used_carriers: Vec<i32>,
    /// Comb pilot subcarriers, a subset of `used_carriers`.
    pub pilot_carriers: Vec<i32>,
}

impl PhyConfig {
    /// IEEE 802.11p: 64 subcarriers, 52 active, 4 pilots, 10 MHz, 1.6 us guard.
    pub fn ieee80211p(n_symbols: usize, modulation: Modulation) -> Self {
        let used_carriers = (-26..=26).filter(|&k| k != 0).collect();
        Self {
            fft_size: 64,
            cp_len: 16,
            n_symbols,
            sample_rate_hz: 10e6,
            modulation,
            n_preambles: 2,
            used_carriers,
            pilot_carriers: vec![-21, -7, 7, 21],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.fft_size as i32;
        if self.fft_size == 0 || self.n_preambles == 0 {
            return Err(Error::config("fft_size and n_preambles must be positive"));
        }
        if self.used_carriers.len() > self.fft_size {
            return Err(Error::config("more active subcarriers than the DFT size"));
        }
        if !self.used_carriers.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::config("used_carriers must be strictly increasing"));
        }
        if self
            .used_carriers
            .iter()
            .any(|&c| c < -k / 2 || c >= k - k / 2)
        {
            return Err(Error::config("used carrier outside [-K/2, K/2)"));
        }
        if self
            .pilot_carriers
            .iter()
            .any(|p| !self.used_carriers.contains(p))
        {
            return Err(Error::config("pilot carrier is not an active subcarrier"));
        }
        Ok(())
    }

    pub fn k_on(&self) -> usize {
        self.used_carriers.len()
    }

    pub fn k_p(&self) -> usize {
        self.pilot_carriers.len()
    }

    pub fn k_d(&self) -> usize {
        self.k_on() - self.k_p()
    }

    pub fn symbol_len(&self) -> usize {
        self.fft_size + self.cp_len
    }

    /// OFDM symbol duration in seconds, CP included.
    pub fn symbol_duration(&self) -> f64 {
        self.symbol_len() as f64 / self.sample_rate_hz
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.sample_rate_hz / self.fft_size as f64
    }

    pub fn signal_len(&self) -> usize {
        (self.n_preambles + self.n_symbols) * self.symbol_len()
    }

    /// DFT bin of a logical subcarrier index.
    pub fn bin(&self, carrier: i32) -> usize {
        carrier.rem_euclid(self.fft_size as i32) as usize
    }

    /// DFT bins of the active subcarriers, in active order.
    pub fn active_bins(&self) -> Vec<usize> {
        self.used_carriers.iter().map(|&c| self.bin(c)).collect()
    }

    /// Positions of the comb pilots within the active set.
    pub fn pilot_positions(&self) -> Vec<usize> {
        self.pilot_carriers
            .iter()
            .map(|p| self.used_carriers.iter().position(|c| c == p).unwrap())
            .collect()
    }

    /// Positions of the data subcarriers within the active set.
    pub fn data_positions(&self) -> Vec<usize> {
        let pilots = self.pilot_positions();
        (0..self.k_on()).filter(|p| !pilots.contains(p)).collect()
    }

    /// Comb pilot values (BPSK, 802.11 base polarity 1, 1, 1, -1 for four pilots).
    pub fn pilot_values(&self) -> Vec<C64> {
        let base = [1.0, 1.0, 1.0, -1.0];
        (0..self.k_p())
            .map(|i| C64::new(if self.k_p() == 4 { base[i] } else { 1.0 }, 0.0))
            .collect()
    }

    /// Preamble sequence on the active subcarriers (long training sequence;
    /// carriers outside +-26 use +1).
    pub fn preamble_active(&self) -> Vec<C64> {
        self.used_carriers
            .iter()
            .map(|&c| {
                let v = if (-26..=26).contains(&c) {
                    LONG_TRAINING[(c + 26) as usize] as f64
                } else {
                    1.0
                };
                C64::new(if v == 0.0 { 1.0 } else { v }, 0.0)
            })
            .collect()
    }

    /// Active-subcarrier values scattered onto all `K` bins.
    pub fn scatter(&self, active: &[C64]) -> Vec<C64> {
        let mut full = vec![C64::new(0.0, 0.0); self.fft_size];
        for (v, b) in active.iter().zip(self.active_bins()) {
            full[b] = *v;
        }
        full
    }

    pub fn gather(&self, full: &[C64]) -> Vec<C64> {
        self.active_bins().iter().map(|&b| full[b]).collect()
    }
}

/// Frequency-domain frame: `K x I` symbol grid, pilot mask and the
/// preamble columns (`K x P`).
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGrid {
    pub values: CGrid,
    /// Column-major `K x I`.
    pub pilot_mask: Vec<bool>,
    pub preambles: CGrid,
}

impl FrameGrid {
    pub fn is_pilot(&self, bin: usize, symbol: usize) -> bool {
        self.pilot_mask[symbol * self.values.rows() + bin]
    }

    /// Active-subcarrier view `K_on x I`.
    pub fn active(&self, cfg: &PhyConfig) -> CGrid {
        self.values.select_rows(&cfg.active_bins())
    }

    pub fn active_preambles(&self, cfg: &PhyConfig) -> CGrid {
        self.preambles.select_rows(&cfg.active_bins())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal {
    pub samples: Vec<C64>,
    pub sample_rate_hz: f64,
}

impl TimeSignal {
    pub fn power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Which symbols of a frame carry pilots and where.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PilotLayout {
    /// 802.11p comb pilots on every symbol.
    Comb,
    /// Full pilot OFDM symbols at the given 0-based positions; remaining
    /// symbols carry 802.11p data symbols (with comb pilots).
    PilotSymbols { positions: Vec<usize> },
    /// Pilot OFDM symbols carrying only `n_pilots` evenly spaced pilots
    /// (other subcarriers of those symbols are left empty).
    SparsePilotSymbols {
        positions: Vec<usize>,
        n_pilots: usize,
    },
}

impl PilotLayout {
    pub fn pilot_symbols(&self) -> &[usize] {
        match self {
            PilotLayout::Comb => &[],
            PilotLayout::PilotSymbols { positions }
            | PilotLayout::SparsePilotSymbols { positions, .. } => positions,
        }
    }

    /// Number of data bits carried by a frame with this layout.
    pub fn data_bits(&self, cfg: &PhyConfig) -> usize {
        let data_symbols = cfg.n_symbols - self.pilot_symbols().len();
        data_symbols * cfg.k_d() * cfg.modulation.bits_per_symbol()
    }
}

/// Active positions of the pilots in a sparse pilot symbol: `n` positions
/// spread evenly over the active set.
pub fn sparse_pilot_positions(k_on: usize, n: usize) -> Vec<usize> {
    (0..n).map(|j| (j * k_on + k_on / (2 * n)) / n).collect()
}

/// Builds the transmitted frame. Data bits fill the data subcarriers of the
/// data symbols in symbol order.
pub fn build_frame(bits: &[u8], cfg: &PhyConfig, layout: &PilotLayout) -> Result<FrameGrid> {
    cfg.validate()?;
    let need = layout.data_bits(cfg);
    if bits.len() != need {
        return Err(Error::shape(format!(
            "frame carries {need} data bits, got {}",
            bits.len()
        )));
    }
    let symbols = modulate(bits, cfg.modulation)?;
    let k = cfg.fft_size;
    let active_bins = cfg.active_bins();
    let pilot_pos = cfg.pilot_positions();
    let data_pos = cfg.data_positions();
    let pilot_vals = cfg.pilot_values();
    let preamble = cfg.preamble_active();
    let pilot_syms = layout.pilot_symbols();

    let mut values = CGrid::zeros(k, cfg.n_symbols);
    let mut mask = vec![false; k * cfg.n_symbols];
    let mut next = symbols.iter();
    for i in 0..cfg.n_symbols {
        if pilot_syms.contains(&i) {
            match layout {
                PilotLayout::SparsePilotSymbols { n_pilots, .. } => {
                    for p in sparse_pilot_positions(cfg.k_on(), *n_pilots) {
                        values.set(active_bins[p], i, preamble[p]);
                        mask[i * k + active_bins[p]] = true;
                    }
                }
                _ => {
                    for (p, &b) in active_bins.iter().enumerate() {
                        values.set(b, i, preamble[p]);
                        mask[i * k + b] = true;
                    }
                }
            }
            continue;
        }
        for (j, &p) in pilot_pos.iter().enumerate() {
            values.set(active_bins[p], i, pilot_vals[j]);
            mask[i * k + active_bins[p]] = true;
        }
        for &p in &data_pos {
            values.set(active_bins[p], i, *next.next().expect("bit count checked"));
        }
    }
    let pre_col = cfg.scatter(&preamble);
    let preambles = CGrid::from_columns(k, &vec![pre_col; cfg.n_preambles]);
    Ok(FrameGrid {
        values,
        pilot_mask: mask,
        preambles,
    })
}

/// Uniform random bits.
pub fn random_bits<R: Rng>(n: usize, rng: &mut R) -> Vec<u8> {
    (0..n).map(|_| rng.gen::<bool>() as u8).collect()
}

struct Dft {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Dft {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
            scale: 1.0 / (n as f64).sqrt(),
        }
    }

    fn forward(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }

    fn inverse(&self, buf: &mut [C64]) {
        self.inv.process(buf);
        buf.iter_mut().for_each(|z| *z *= self.scale);
    }
}

/// Unitary DFT of a length-`n` vector.
pub fn unitary_dft(x: &[C64]) -> Vec<C64> {
    let mut buf = x.to_vec();
    Dft::new(x.len()).forward(&mut buf);
    buf
}

/// Unitary inverse DFT.
pub fn unitary_idft(x: &[C64]) -> Vec<C64> {
    let mut buf = x.to_vec();
    Dft::new(x.len()).inverse(&mut buf);
    buf
}

/// Unitary IDFT per symbol, cyclic prefix prepended, preambles first.
pub fn ofdm_modulate(grid: &FrameGrid, cfg: &PhyConfig) -> Result<TimeSignal> {
    let k = cfg.fft_size;
    if grid.values.rows() != k || grid.values.cols() != cfg.n_symbols {
        return Err(Error::shape(format!(
            "grid is {}x{}, config expects {}x{}",
            grid.values.rows(),
            grid.values.cols(),
            k,
            cfg.n_symbols
        )));
    }
    if grid.preambles.rows() != k || grid.preambles.cols() != cfg.n_preambles {
        return Err(Error::shape("preamble block does not match config"));
    }
    let dft = Dft::new(k);
    let mut samples = Vec::with_capacity(cfg.signal_len());
    let columns = (0..cfg.n_preambles)
        .map(|p| grid.preambles.col(p))
        .chain((0..cfg.n_symbols).map(|i| grid.values.col(i)));
    let mut buf = vec![C64::new(0.0, 0.0); k];
    for col in columns {
        buf.copy_from_slice(col);
        dft.inverse(&mut buf);
        samples.extend_from_slice(&buf[k - cfg.cp_len..]);
        samples.extend_from_slice(&buf);
    }
    Ok(TimeSignal {
        samples,
        sample_rate_hz: cfg.sample_rate_hz,
    })
}

/// Strips the cyclic prefix and applies the unitary DFT per symbol. The
/// returned grid has no pilot mask information (all false).
pub fn ofdm_demodulate(sig: &TimeSignal, cfg: &PhyConfig) -> Result<FrameGrid> {
    let k = cfg.fft_size;
    let sl = cfg.symbol_len();
    if sig.samples.len() < cfg.signal_len() {
        return Err(Error::shape(format!(
            "signal has {} samples, frame needs {}",
            sig.samples.len(),
            cfg.signal_len()
        )));
    }
    let dft = Dft::new(k);
    let demod = |s: usize| {
        let start = s * sl + cfg.cp_len;
        let mut buf = sig.samples[start..start + k].to_vec();
        dft.forward(&mut buf);
        buf
    };
    let pre: Vec<Vec<C64>> = (0..cfg.n_preambles).map(demod).collect();
    let sym: Vec<Vec<C64>> = (0..cfg.n_symbols)
        .map(|i| demod(cfg.n_preambles + i))
        .collect();
    Ok(FrameGrid {
        values: CGrid::from_columns(k, &sym),
        pilot_mask: vec![false; k * cfg.n_symbols],
        preambles: CGrid::from_columns(k, &pre),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cfg(n: usize) -> PhyConfig {
        PhyConfig::ieee80211p(n, Modulation::Qpsk)
    }

    #[test]
    fn table_v_defaults() {
        let c = cfg(100);
        assert_eq!((c.fft_size, c.k_on(), c.k_p(), c.k_d()), (64, 52, 4, 48));
        assert_eq!(c.cp_len, 16);
        assert!((c.cp_len as f64 / c.sample_rate_hz - 1.6e-6).abs() < 1e-15);
        assert!((c.subcarrier_spacing_hz() - 156_250.0).abs() < 1e-9);
        assert!((c.symbol_duration() - 8e-6).abs() < 1e-15);
        c.validate().unwrap();
    }

    #[test]
    fn qpsk_first_gray_point() {
        let s = modulate(&[0, 0], Modulation::Qpsk).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s[0], C64::new(r, r));
    }

    #[test]
    fn qam16_unit_average_energy() {
        let pts = Modulation::Qam16.constellation();
        let e: f64 = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / 16.0;
        assert!((e - 1.0).abs() < 1e-12);
        let e4: f64 = Modulation::Qpsk
            .constellation()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            / 4.0;
        assert!((e4 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qam16_gray_neighbours_differ_in_one_bit() {
        let m = Modulation::Qam16;
        let pts = m.constellation();
        let d_min = 2.0 / 10f64.sqrt();
        for a in 0..16 {
            for b in 0..16 {
                if ((pts[a] - pts[b]).norm() - d_min).abs() < 1e-9 {
                    assert_eq!((a ^ b).count_ones(), 1, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn demap_inverts_modulate_for_all_qam16_words() {
        for w in 0..16u8 {
            let bits: Vec<u8> = (0..4).rev().map(|b| (w >> b) & 1).collect();
            let s = modulate(&bits, Modulation::Qam16).unwrap();
            assert_eq!(demap_bits(&s, Modulation::Qam16), bits);
            assert_eq!(demap(&s, Modulation::Qam16), s);
        }
    }

    #[test]
    fn modulate_rejects_partial_symbols() {
        assert!(matches!(
            modulate(&[0, 1, 1], Modulation::Qpsk),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn qpsk_nearest_point() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(
            demap(&[C64::new(0.9, 0.8)], Modulation::Qpsk)[0],
            C64::new(r, r)
        );
    }

    fn brute_force(y: C64, m: Modulation) -> C64 {
        let mut pts = m.constellation();
        pts.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        let mut best = pts[0];
        for p in pts {
            // Distances within rounding of each other count as ties.
            if (y - p).norm_sqr() < (y - best).norm_sqr() - 1e-12 {
                best = p;
            }
        }
        best
    }

    #[test]
    fn demap_matches_brute_force_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            let pts = m.constellation();
            for n in 0..1000 {
                let p = pts[n % pts.len()];
                let e: f64 = StandardNormal.sample(&mut rng);
                let f: f64 = StandardNormal.sample(&mut rng);
                let y = p + C64::new(e, f) * 0.3;
                assert_eq!(m.decide(y), brute_force(y, m));
            }
            // Exact ties on decision boundaries.
            for y in [
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.5),
                C64::new(2.0 / 10f64.sqrt(), 0.0),
            ] {
                assert_eq!(m.decide(y), brute_force(y, m));
            }
        }
    }

    #[test]
    fn demap_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ys: Vec<C64> = (0..200)
            .map(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
            .collect();
        for m in [Modulation::Qpsk, Modulation::Qam16] {
            let once = demap(&ys, m);
            assert_eq!(demap(&once, m), once);
        }
    }

    #[test]
    fn frame_places_pilots_and_data() {
        let c = cfg(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bits = random_bits(PilotLayout::Comb.data_bits(&c), &mut rng);
        let g = build_frame(&bits, &c, &PilotLayout::Comb).unwrap();
        let pilot_bins: Vec<usize> = c.pilot_carriers.iter().map(|&p| c.bin(p)).collect();
        for i in 0..5 {
            for b in 0..64 {
                assert_eq!(g.is_pilot(b, i), pilot_bins.contains(&b));
                if pilot_bins.contains(&b) {
                    assert!((g.values.get(b, i).norm() - 1.0).abs() < 1e-15);
                }
            }
            // Guard bins and DC are empty.
            for b in [0usize, 27, 32, 37] {
                assert_eq!(g.values.get(b, i), C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn zero_grid_gives_zero_signal() {
        let c = cfg(3);
        let g = FrameGrid {
            values: CGrid::zeros(64, 3),
            pilot_mask: vec![false; 192],
            preambles: CGrid::zeros(64, 2),
        };
        let s = ofdm_modulate(&g, &c).unwrap();
        assert_eq!(s.samples.len(), c.signal_len());
        assert!(s.samples.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }

    #[test]
    fn single_dc_tone_gives_constant_symbol() {
        let c = cfg(1);
        let mut values = CGrid::zeros(64, 1);
        values.set(0, 0, C64::new(8.0, 0.0));
        let g = FrameGrid {
            values,
            pilot_mask: vec![false; 64],
            preambles: CGrid::zeros(64, 2),
        };
        let s = ofdm_modulate(&g, &c).unwrap();
        for z in &s.samples[2 * 80..] {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn modulate_demodulate_round_trip_and_parseval() {
        let c = PhyConfig::ieee80211p(6, Modulation::Qam16);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let bits = random_bits(PilotLayout::Comb.data_bits(&c), &mut rng);
        let g = build_frame(&bits, &c, &PilotLayout::Comb).unwrap();
        let s = ofdm_modulate(&g, &c).unwrap();
        let back = ofdm_demodulate(&s, &c).unwrap();
        assert!(back.values.distance_sqr(&g.values).sqrt() < 1e-12);
        assert!(back.preambles.distance_sqr(&g.preambles).sqrt() < 1e-12);
        for i in 0..6 {
            let start = (2 + i) * 80 + 16;
            let t: f64 = s.samples[start..start + 64]
                .iter()
                .map(|z| z.norm_sqr())
                .sum();
            let f: f64 = g.values.col(i).iter().map(|z| z.norm_sqr()).sum();
            assert!((t - f).abs() < 1e-10);
        }
    }

    #[test]
    fn truncated_signal_is_rejected() {
        let c = cfg(2);
        let sig = TimeSignal {
            samples: vec![C64::new(0.0, 0.0); 100],
            sample_rate_hz: 10e6,
        };
        assert!(matches!(ofdm_demodulate(&sig, &c), Err(Error::Shape(_))));
    }

    #[test]
    fn demodulated_awgn_keeps_its_variance() {
        let mut c = cfg(10_000);
        c.n_preambles = 1;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples: Vec<C64> = (0..c.signal_len())
            .map(|_| {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        let g = ofdm_demodulate(
            &TimeSignal {
                samples,
                sample_rate_hz: 10e6,
            },
            &c,
        )
        .unwrap();
        for b in [0usize, 5, 40, 63] {
            let v: f64 = (0..c.n_symbols)
                .map(|i| g.values.get(b, i).norm_sqr())
                .sum::<f64>()
                / c.n_symbols as f64;
            assert!((v - 1.0).abs() < 0.05, "bin {b}: {v}");
        }
    }

    #[test]
    fn sparse_pilots_are_distinct_and_in_range() {
        let p = sparse_pilot_positions(52, 8);
        assert_eq!(p.len(), 8);
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(*p.last().unwrap() < 52);
    }
}
