//! Real-valued operation counts per received frame.
//!
//! Per-symbol closed forms are multiplied by the frame length `I` for SBS
//! estimators. The FBF counts add an interpolation term to a CNN term whose
//! per-grid-cell constants are the published ones for the stated networks.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpCount {
    pub muldiv: u128,
    pub addsub: u128,
}

impl OpCount {
    pub const fn new(muldiv: u128, addsub: u128) -> Self {
        Self { muldiv, addsub }
    }
}

impl Add for OpCount {
    type Output = OpCount;
    fn add(self, o: OpCount) -> OpCount {
        OpCount::new(self.muldiv + o.muldiv, self.addsub + o.addsub)
    }
}

impl Mul<u128> for OpCount {
    type Output = OpCount;
    fn mul(self, k: u128) -> OpCount {
        OpCount::new(self.muldiv * k, self.addsub * k)
    }
}

impl fmt::Display for OpCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} mul/div, {} add/sub", self.muldiv, self.addsub)
    }
}

/// Symbol set of the complexity tables. Unset fields are reported by name
/// when an estimator needs them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostParams {
    pub k_on: Option<u64>,
    pub k_d: Option<u64>,
    pub k_p: Option<u64>,
    pub k_int: Option<u64>,
    pub k_in: Option<u64>,
    pub l: Option<u64>,
    pub i: Option<u64>,
    pub i_d: Option<u64>,
    pub p: Option<u64>,
    pub p_hidden: Option<u64>,
}

impl CostParams {
    /// 802.11p defaults: K_on=52, K_d=48, K_p=4, I=100, K_int=10, P_hidden=128,
    /// L=12, K_in=112, P=3 pilot symbols with I_d=97.
    pub fn defaults() -> Self {
        Self {
            k_on: Some(52),
            k_d: Some(48),
            k_p: Some(4),
            k_int: Some(10),
            k_in: Some(112),
            l: Some(12),
            i: Some(100),
            i_d: Some(97),
            p: Some(3),
            p_hidden: Some(128),
        }
    }

    /// Fills unset fields from `base`.
    pub fn or(self, base: &CostParams) -> Self {
        Self {
            k_on: self.k_on.or(base.k_on),
            k_d: self.k_d.or(base.k_d),
            k_p: self.k_p.or(base.k_p),
            k_int: self.k_int.or(base.k_int),
            k_in: self.k_in.or(base.k_in),
            l: self.l.or(base.l),
            i: self.i.or(base.i),
            i_d: self.i_d.or(base.i_d),
            p: self.p.or(base.p),
            p_hidden: self.p_hidden.or(base.p_hidden),
        }
    }
}

fn need(v: Option<u64>, name: &str) -> Result<u128> {
    v.map(u128::from)
        .ok_or_else(|| Error::config(format!("missing complexity parameter `{name}`")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WiScheme {
    FpSls,
    FpAls,
    Lp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CnnKind {
    Sr,
    Dn,
}

/// Every estimator with a closed-form count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CountTarget {
    Ls,
    Dpa,
    Sta,
    Trfi,
    DpaFnn,
    StaFnn,
    TrfiFnn,
    LstmFnnDpa,
    LstmDpaTa,
    AddTt,
    Rbf,
    ChannelNet,
    TsChannelNet,
    Wi(WiScheme),
    WiCnn(WiScheme, CnnKind),
}

impl CountTarget {
    pub const SBS_FIGURE: [CountTarget; 5] = [
        CountTarget::LstmFnnDpa,
        CountTarget::LstmDpaTa,
        CountTarget::DpaFnn,
        CountTarget::TrfiFnn,
        CountTarget::StaFnn,
    ];

    pub const FBF_FIGURE: [CountTarget; 4] = [
        CountTarget::ChannelNet,
        CountTarget::TsChannelNet,
        CountTarget::WiCnn(WiScheme::FpAls, CnnKind::Dn),
        CountTarget::WiCnn(WiScheme::FpAls, CnnKind::Sr),
    ];

    pub fn is_sbs(self) -> bool {
        matches!(
            self,
            CountTarget::Ls
                | CountTarget::Dpa
                | CountTarget::Sta
                | CountTarget::Trfi
                | CountTarget::DpaFnn
                | CountTarget::StaFnn
                | CountTarget::TrfiFnn
                | CountTarget::LstmFnnDpa
                | CountTarget::LstmDpaTa
        )
    }

    pub fn name(self) -> String {
        let wi = |s: WiScheme| match s {
            WiScheme::FpSls => "FP-SLS",
            WiScheme::FpAls => "FP-ALS",
            WiScheme::Lp => "LP",
        };
        match self {
            CountTarget::Ls => "LS".into(),
            CountTarget::Dpa => "DPA".into(),
            CountTarget::Sta => "STA".into(),
            CountTarget::Trfi => "TRFI".into(),
            CountTarget::DpaFnn => "DPA-FNN".into(),
            CountTarget::StaFnn => "STA-FNN".into(),
            CountTarget::TrfiFnn => "TRFI-FNN".into(),
            CountTarget::LstmFnnDpa => "LSTM-FNN-DPA".into(),
            CountTarget::LstmDpaTa => "LSTM-DPA-TA".into(),
            CountTarget::AddTt => "ADD-TT".into(),
            CountTarget::Rbf => "RBF".into(),
            CountTarget::ChannelNet => "ChannelNet".into(),
            CountTarget::TsChannelNet => "TS-ChannelNet".into(),
            CountTarget::Wi(s) => format!("WI-{}", wi(s)),
            CountTarget::WiCnn(s, CnnKind::Sr) => format!("{}-SR-CNN", wi(s)),
            CountTarget::WiCnn(s, CnnKind::Dn) => format!("{}-DN-CNN", wi(s)),
        }
    }
}

impl fmt::Display for CountTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for CountTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('_', "-");
        let all = [
            CountTarget::Ls,
            CountTarget::Dpa,
            CountTarget::Sta,
            CountTarget::Trfi,
            CountTarget::DpaFnn,
            CountTarget::StaFnn,
            CountTarget::TrfiFnn,
            CountTarget::LstmFnnDpa,
            CountTarget::LstmDpaTa,
            CountTarget::AddTt,
            CountTarget::Rbf,
            CountTarget::ChannelNet,
            CountTarget::TsChannelNet,
        ];
        let schemes = [WiScheme::FpSls, WiScheme::FpAls, WiScheme::Lp];
        let wi = schemes.iter().flat_map(|&s| {
            [
                CountTarget::Wi(s),
                CountTarget::WiCnn(s, CnnKind::Sr),
                CountTarget::WiCnn(s, CnnKind::Dn),
            ]
        });
        all.into_iter()
            .chain(wi)
            .find(|t| t.name().to_ascii_uppercase() == norm)
            .ok_or_else(|| Error::config(format!("unknown estimator `{s}`")))
    }
}

/// Dense stack `2K_on -> J2 -> J3 -> J4 -> 2K_on`, same count in both columns.
pub fn fnn_count(k_on: u128, j2: u128, j3: u128, j4: u128) -> OpCount {
    let c = 2 * k_on * j2 + j2 * j3 + j3 * j4 + 2 * k_on * j4;
    OpCount::new(c, c)
}

/// Single LSTM unit as listed per row of the SBS table.
pub fn lstm_count(p: u128, k_in: u128) -> OpCount {
    OpCount::new(p * p + 3 * p + p * k_in, 4 * p + k_in - 2)
}

/// Per-cell CNN constants (per `K_on * I` or `K_on * I_d` grid cell).
const CHANNELNET_CNN: OpCount = OpCount::new(350_144, 42_432);
const SR_CONVLSTM: OpCount = OpCount::new(226_880, 81_472);
const OPT_SR_CNN: OpCount = OpCount::new(7_008, 1_120);
const OPT_DN_CNN: OpCount = OpCount::new(84_096, 9_856);

/// Per-symbol count of an SBS estimator.
pub fn count_sbs_symbol(target: CountTarget, p: &CostParams) -> Result<OpCount> {
    let k_on = || need(p.k_on, "k_on");
    let k_d = || need(p.k_d, "k_d");
    let c = match target {
        CountTarget::Ls => OpCount::new(2 * k_on()?, 2 * k_on()?),
        CountTarget::Dpa => OpCount::new(16 * k_on()?, 6 * k_on()?),
        CountTarget::Sta => OpCount::new(22 * k_on()? + 2 * k_d()?, 10 * k_on()? + 10 * k_d()?),
        CountTarget::Trfi => {
            let k_int = need(p.k_int, "k_int")?;
            OpCount::new(34 * k_on()? + 26 * k_int, 14 * k_on()? + 30 * k_int)
        }
        CountTarget::StaFnn => OpCount::new(
            82 * k_on()? + 2 * k_d()? + 450,
            70 * k_on()? + 10 * k_d()? + 450,
        ),
        CountTarget::TrfiFnn => {
            let k_int = need(p.k_int, "k_int")?;
            OpCount::new(
                94 * k_on()? + 26 * k_int + 450,
                74 * k_on()? + 30 * k_int + 450,
            )
        }
        CountTarget::DpaFnn => OpCount::new(178 * k_on()? + 1600, 168 * k_on()? + 1600),
        CountTarget::LstmFnnDpa => {
            let k_in = need(p.k_in, "k_in")?;
            let ph = need(p.p_hidden, "p_hidden")?;
            // At P = 128: 4P^2 + 43P = 71040 and 53P - 8 = 6776.
            OpCount::new(
                4 * ph * k_in + 98 * k_d()? + 4 * ph * ph + 43 * ph,
                4 * k_in + 88 * k_d()? + 53 * ph - 8,
            )
        }
        CountTarget::LstmDpaTa => {
            let ph = need(p.p_hidden, "p_hidden")?;
            OpCount::new(
                4 * ph * ph + ph * (8 * k_on()? + 3) + 18 * k_d()? + 2 * k_on()?,
                13 * ph + 10 * k_on()? + 8 * k_d()? - 8,
            )
        }
        other => {
            return Err(Error::config(format!(
                "{other} is a frame-by-frame estimator"
            )))
        }
    };
    Ok(c)
}

/// Per-frame count of an SBS estimator: per-symbol closed form times `I`.
pub fn count_sbs(target: CountTarget, p: &CostParams) -> Result<OpCount> {
    let i = need(p.i, "i")?;
    Ok(count_sbs_symbol(target, p)? * i)
}

/// Interpolation stage of an FBF estimator, per frame.
pub fn count_interpolation(target: CountTarget, p: &CostParams) -> Result<OpCount> {
    let k_on = || need(p.k_on, "k_on");
    let i = || need(p.i, "i");
    let scheme = match target {
        CountTarget::Rbf | CountTarget::ChannelNet => {
            let kpi = need(p.k_p, "k_p")? * i()?;
            let kdi = need(p.k_d, "k_d")? * i()?;
            return Ok(OpCount::new(
                kpi * kpi * (4 + kdi) + kpi * (2 + 3 * kdi),
                kpi * (5 * kpi + 5 * kdi - 2),
            ));
        }
        CountTarget::AddTt | CountTarget::TsChannelNet => {
            let l = need(p.l, "l")?;
            let n = k_on()? * i()?;
            return Ok(OpCount::new(24 * n + 4 * l * n, 18 * n + 5 * n * l));
        }
        CountTarget::Wi(s) | CountTarget::WiCnn(s, _) => s,
        other => {
            return Err(Error::config(format!(
                "{other} is a symbol-by-symbol estimator"
            )))
        }
    };
    let k_on = k_on()?;
    let i_d = need(p.i_d, "i_d")?;
    let np = need(p.p, "p")?;
    Ok(match scheme {
        WiScheme::FpSls => OpCount::new(
            2 * k_on * np + 2 * k_on + 4 * k_on * i_d,
            2 * k_on + 2 * k_on * i_d,
        ),
        WiScheme::FpAls => OpCount::new(
            4 * k_on * k_on * np + 2 * k_on * np + 2 * k_on + 4 * k_on * i_d,
            5 * k_on * k_on * np + 2 * k_on * i_d,
        ),
        WiScheme::Lp => {
            let l = need(p.l, "l")?;
            OpCount::new(
                2 * l * np + 4 * k_on * l * np + 2 * k_on + 4 * k_on * i_d,
                5 * k_on * l * np + 2 * k_on * i_d,
            )
        }
    })
}

/// Per-frame count of an FBF estimator: interpolation plus network.
pub fn count_fbf(target: CountTarget, p: &CostParams) -> Result<OpCount> {
    let interp = count_interpolation(target, p)?;
    let cnn = match target {
        CountTarget::ChannelNet => CHANNELNET_CNN * (need(p.k_on, "k_on")? * need(p.i, "i")?),
        CountTarget::TsChannelNet => SR_CONVLSTM * (need(p.k_on, "k_on")? * need(p.i, "i")?),
        CountTarget::WiCnn(_, kind) => {
            let per = if kind == CnnKind::Sr {
                OPT_SR_CNN
            } else {
                OPT_DN_CNN
            };
            per * (need(p.k_on, "k_on")? * need(p.i_d, "i_d")?)
        }
        _ => OpCount::default(),
    };
    Ok(interp + cnn)
}

/// Dispatches to [`count_sbs`] or [`count_fbf`].
pub fn count(target: CountTarget, p: &CostParams) -> Result<OpCount> {
    if target.is_sbs() {
        count_sbs(target, p)
    } else {
        count_fbf(target, p)
    }
}

/// Generic convolution-layer count `h w d f (v^2 + 1)` for one layer, both
/// columns equal.
pub fn conv_layer_count(h: u128, w: u128, d: u128, f: u128, v: u128) -> u128 {
    h * w * d * f * (v * v + 1)
}

/// Generic ConvLSTM layer count `h w d f (8 v^2 + 30)`.
pub fn convlstm_layer_count(h: u128, w: u128, d: u128, f: u128, v: u128) -> u128 {
    h * w * d * f * (8 * v * v + 30)
}

/// Published bar-figure coordinates (muldiv, addsub).
pub fn figure_values(target: CountTarget) -> Option<OpCount> {
    let v = match target {
        CountTarget::StaFnn => (481_000, 457_000),
        CountTarget::TrfiFnn => (559_800, 459_800),
        CountTarget::DpaFnn => (1_085_600, 1_033_600),
        CountTarget::LstmDpaTa => (12_013_600, 256_000),
        CountTarget::LstmFnnDpa => (13_308_800, 1_144_800),
        CountTarget::ChannelNet => (2_595_149_600, 231_045_600),
        CountTarget::TsChannelNet => (1_180_401_600, 424_060_000),
        CountTarget::WiCnn(WiScheme::FpAls, CnnKind::Dn) => (424_235_264, 49_764_312),
        CountTarget::WiCnn(WiScheme::FpAls, CnnKind::Sr) => (35_401_392, 5_699_928),
        _ => return None,
    };
    Some(OpCount::new(v.0, v.1))
}

/// Outcome of comparing instrumented stage tallies against closed forms.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub stages: Vec<(String, OpCount, OpCount)>,
}

impl AuditReport {
    pub fn first_mismatch(&self) -> Option<&(String, OpCount, OpCount)> {
        self.stages.iter().find(|(_, a, b)| a != b)
    }
}

/// Compares `(stage, instrumented, analytic)` triples; the first divergent
/// stage is reported as an error.
pub fn audit(stages: &[(&str, OpCount, OpCount)]) -> Result<AuditReport> {
    let report = AuditReport {
        stages: stages
            .iter()
            .map(|(s, a, b)| (s.to_string(), *a, *b))
            .collect(),
    };
    if let Some((stage, inst, ana)) = report.first_mismatch() {
        return Err(Error::Audit {
            stage: stage.clone(),
            instrumented: inst.to_string(),
            analytic: ana.to_string(),
        });
    }
    Ok(report)
}

/// Bar chart (log y) of the counts for `targets`.
pub fn figure_svg(targets: &[CountTarget], p: &CostParams) -> Result<String> {
    let mut groups = Vec::new();
    for &t in targets {
        let c = count(t, p)?;
        groups.push((t.name(), vec![c.muldiv as f64, c.addsub as f64]));
    }
    Ok(crate::plot::bar_chart_log(
        "Real-valued operations per frame",
        &["Multiplications/Divisions", "Summations/Subtractions"],
        &groups,
    ))
}
