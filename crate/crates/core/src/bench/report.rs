//! Result tables: CSV and SVG.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::eval::FrameStat;
use crate::error::{Error, Result};
use crate::plot::line_plot_log;

/// One estimator at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub estimator: String,
    pub snr_db: f64,
    pub ber: f64,
    pub nmse: f64,
    pub stderr_ber: f64,
    pub stderr_nmse: f64,
    pub frames: u64,
}

impl MetricRow {
    /// NMSE is `sum err / sum pow`, its standard error from the delta
    /// method; BER's standard error is that of the per-frame BER mean.
    pub fn from_frames(estimator: &str, snr_db: f64, stats: &[FrameStat]) -> Self {
        let n = stats.len() as f64;
        let err: f64 = stats.iter().map(|s| s.err).sum();
        let pow: f64 = stats.iter().map(|s| s.pow).sum();
        let errors: u64 = stats.iter().map(|s| s.bit_errors).sum();
        let bits: u64 = stats.iter().map(|s| s.bits).sum();
        let nmse = if pow > 0.0 { err / pow } else { 0.0 };
        let ber = if bits > 0 {
            errors as f64 / bits as f64
        } else {
            0.0
        };
        let (mut stderr_ber, mut stderr_nmse) = (0.0, 0.0);
        if stats.len() > 1 {
            let bers: Vec<f64> = stats
                .iter()
                .map(|s| s.bit_errors as f64 / s.bits.max(1) as f64)
                .collect();
            let mean = bers.iter().sum::<f64>() / n;
            let var = bers.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
            stderr_ber = (var / n).sqrt();
            let lin: Vec<f64> = stats.iter().map(|s| s.err - nmse * s.pow).collect();
            let lm = lin.iter().sum::<f64>() / n;
            let lvar = lin.iter().map(|v| (v - lm).powi(2)).sum::<f64>() / (n - 1.0);
            if pow > 0.0 {
                stderr_nmse = (lvar / n).sqrt() / (pow / n);
            }
        }
        Self {
            estimator: estimator.to_string(),
            snr_db,
            ber,
            nmse,
            stderr_ber,
            stderr_nmse,
            frames: stats.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub rows: Vec<MetricRow>,
}

impl MetricsReport {
    pub fn new(rows: Vec<MetricRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::config("report has no estimators"));
        }
        Ok(Self { rows })
    }

    /// Estimator names in first-appearance order.
    pub fn estimators(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.estimator) {
                out.push(r.estimator.clone());
            }
        }
        out
    }

    /// Rows of one estimator, in file order.
    pub fn series(&self, estimator: &str) -> Vec<&MetricRow> {
        self.rows
            .iter()
            .filter(|r| r.estimator == estimator)
            .collect()
    }

    pub fn get(&self, estimator: &str, snr_db: f64) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.estimator == estimator && r.snr_db == snr_db)
    }

    /// `estimator,snr_db,ber,nmse,stderr_ber,stderr_nmse,frames`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| Error::config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv writes utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r
            .deserialize()
            .collect::<std::result::Result<Vec<MetricRow>, _>>()
            .map_err(|e| Error::config(format!("bad results CSV: {e}")))?;
        Self::new(rows)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    fn plot(&self, title: &str, y_label: &str, value: impl Fn(&MetricRow) -> f64) -> String {
        let series: Vec<(String, Vec<(f64, f64)>)> = self
            .estimators()
            .into_iter()
            .map(|e| {
                let pts = self
                    .series(&e)
                    .iter()
                    .map(|r| (r.snr_db, value(r)))
                    .collect();
                (e, pts)
            })
            .collect();
        line_plot_log(title, "SNR [dB]", y_label, &series)
    }

    pub fn ber_svg(&self, title: &str) -> String {
        self.plot(title, "BER", |r| r.ber)
    }

    pub fn nmse_svg(&self, title: &str) -> String {
        self.plot(title, "NMSE", |r| r.nmse)
    }

    /// Writes `ber.svg` and `nmse.svg` into `dir`.
    pub fn write_svgs(&self, dir: &Path, title: &str) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (name, svg) in [
            ("ber.svg", self.ber_svg(title)),
            ("nmse.svg", self.nmse_svg(title)),
        ] {
            let p = dir.join(name);
            std::fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}
