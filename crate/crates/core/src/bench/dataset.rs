//! Training datasets: pre-stage outputs paired with the true channel.
//!
//! File layout (little-endian): magic `DDCD`, version `u32`, scenario label
//! and pipeline name (each `u32` length + UTF-8), training SNR `f64`, record
//! count `u64`, training-record count `u64`, input and target item shapes
//! (`u32` rank + `u64` dims), then for every record its input followed by its
//! target as `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use super::{with_workers, Scenario};
use crate::error::{Error, Result};
use crate::est_conv::EstContext;
use crate::est_dl::{frame_records, record_shapes, FrameInfo, Pipeline, PreStage, Records};
use crate::link::simulate_frame;
use crate::nn::Tensor;
use crate::rng::{derive_seed, Stream};

const MAGIC: &[u8; 4] = b"DDCD";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetSplit {
    Train,
    Test,
}

impl DatasetSplit {
    /// Master seed of the split's frames. Both differ from the scenario
    /// seed, so training frames never reappear in an evaluation.
    pub fn seed(self, scenario_seed: u64) -> u64 {
        let counter = match self {
            DatasetSplit::Train => 1,
            DatasetSplit::Test => 2,
        };
        derive_seed(scenario_seed, counter, Stream::Diagnostic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scenario: String,
    pub pipeline: Pipeline,
    pub train_snr_db: f64,
    /// The first `n_train` records form the training split.
    pub n_train: usize,
    /// `[records, input item shape...]`.
    pub inputs: Tensor,
    pub targets: Tensor,
}

/// Records needed for `n_samples` training samples: a sample is a symbol for
/// SBS pipelines (a recurrent record holds a whole frame of them) and a
/// frame for FBF ones.
pub fn records_for_samples(pipeline: Pipeline, n_samples: usize, n_symbols: usize) -> usize {
    if pipeline.is_sbs() && pipeline.is_recurrent() {
        n_samples.div_ceil(n_symbols.max(1))
    } else {
        n_samples
    }
}

fn split_records(
    scenario: &Scenario,
    pre: &PreStage,
    ctx: &EstContext,
    seed: u64,
    n_records: usize,
    snr_db: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let cfg = scenario.phy_config();
    let model = scenario.channel_model()?;
    let layout = pre.pipeline().frame_layout(pre.opts(), cfg.n_symbols);
    let per_frame = if pre.pipeline().is_sbs() && !pre.pipeline().is_recurrent() {
        cfg.n_symbols
    } else {
        1
    };
    let n_frames = n_records.div_ceil(per_frame);
    let frames: Result<Vec<Records>> = with_workers(scenario.workers, || {
        (0..n_frames as u64)
            .into_par_iter()
            .map(|i| {
                let f = simulate_frame(&cfg, &model, &layout, seed, i, 0, snr_db)?;
                let info = FrameInfo {
                    noise_var: f.noise_var,
                    doppler_hz: model.doppler_hz,
                };
                frame_records(pre, &f.rx, &f.tx, &f.truth, ctx, &info)
            })
            .collect()
    })?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (x, y) in frames?
        .into_iter()
        .flat_map(|(x, y)| x.into_iter().zip(y))
        .take(n_records)
    {
        xs.extend(x.into_iter().map(|v| v as f32 as f64));
        ys.extend(y.into_iter().map(|v| v as f32 as f64));
    }
    Ok((xs, ys))
}

/// `n_samples` training samples (see [`records_for_samples`]) at
/// `train_snr_db`, split 80/20 into training and test records drawn from
/// disjoint seeds. Values are rounded to `f32`, the on-disk precision.
pub fn gen_dataset(
    scenario: &Scenario,
    pipeline: Pipeline,
    n_samples: usize,
    train_snr_db: f64,
) -> Result<Dataset> {
    scenario.validate()?;
    let cfg = scenario.phy_config();
    let ctx = EstContext::new(&cfg);
    let pre = PreStage::new(pipeline, scenario.pipeline.clone());
    let n = records_for_samples(pipeline, n_samples, cfg.n_symbols);
    if n == 0 {
        return Err(Error::config("dataset needs at least one sample"));
    }
    let n_train = ((n as f64) * 0.8).round() as usize;
    let (mut xs, mut ys) = split_records(
        scenario,
        &pre,
        &ctx,
        DatasetSplit::Train.seed(scenario.seed),
        n_train,
        train_snr_db,
    )?;
    let (xt, yt) = split_records(
        scenario,
        &pre,
        &ctx,
        DatasetSplit::Test.seed(scenario.seed),
        n - n_train,
        train_snr_db,
    )?;
    xs.extend(xt);
    ys.extend(yt);
    let (xi, yi) = record_shapes(pipeline, &ctx, cfg.n_symbols);
    Ok(Dataset {
        scenario: scenario.label(),
        pipeline,
        train_snr_db,
        n_train,
        inputs: Tensor::new(&batched(n, &xi), xs)?,
        targets: Tensor::new(&batched(n, &yi), ys)?,
    })
}

fn batched(n: usize, item: &[usize]) -> Vec<usize> {
    let mut s = vec![n];
    s.extend_from_slice(item);
    s
}

fn put_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    w.write_all(&(s.len() as u32).to_le_bytes())?;
    w.write_all(s.as_bytes())
}

fn put_shape(w: &mut impl Write, shape: &[usize]) -> std::io::Result<()> {
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    Ok(())
}

fn get<const N: usize, R: Read + ?Sized>(r: &mut R) -> std::io::Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b)?;
    Ok(b)
}

fn get_u32<R: Read + ?Sized>(r: &mut R) -> std::io::Result<u32> {
    Ok(u32::from_le_bytes(get(r)?))
}

fn get_u64<R: Read + ?Sized>(r: &mut R) -> std::io::Result<u64> {
    Ok(u64::from_le_bytes(get(r)?))
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.batch()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(inputs, targets)` of one split.
    pub fn split(&self, which: DatasetSplit) -> (Tensor, Tensor) {
        let rows: Vec<usize> = match which {
            DatasetSplit::Train => (0..self.n_train).collect(),
            DatasetSplit::Test => (self.n_train..self.len()).collect(),
        };
        (self.inputs.gather(&rows), self.targets.gather(&rows))
    }

    pub fn write(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        put_str(w, &self.scenario)?;
        put_str(w, &self.pipeline.name())?;
        w.write_all(&self.train_snr_db.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&(self.n_train as u64).to_le_bytes())?;
        put_shape(w, &self.inputs.shape[1..])?;
        put_shape(w, &self.targets.shape[1..])?;
        for n in 0..self.len() {
            for v in self.inputs.item(n).iter().chain(self.targets.item(n)) {
                w.write_all(&(*v as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read(r: &mut impl Read) -> Result<Self> {
        let io = |e: std::io::Error| Error::io("<dataset>", e);
        let magic: [u8; 4] = get(r).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::config("not a dataset file (bad magic)"));
        }
        let version = get_u32(r).map_err(io)?;
        if version != VERSION {
            return Err(Error::config(format!(
                "unsupported dataset version {version}"
            )));
        }
        let read_str = |r: &mut dyn Read| -> Result<String> {
            let n = get_u32(r).map_err(io)? as usize;
            if n > 1 << 16 {
                return Err(Error::config("dataset header string too long"));
            }
            let mut b = vec![0u8; n];
            r.read_exact(&mut b).map_err(io)?;
            String::from_utf8(b).map_err(|_| Error::config("dataset header is not UTF-8"))
        };
        let scenario = read_str(r)?;
        let pipeline: Pipeline = read_str(r)?.parse()?;
        let train_snr_db = f64::from_le_bytes(get(r).map_err(io)?);
        let n = get_u64(r).map_err(io)? as usize;
        let n_train = get_u64(r).map_err(io)? as usize;
        if n_train > n {
            return Err(Error::config("dataset training count exceeds record count"));
        }
        let read_shape = |r: &mut dyn Read| -> Result<Vec<usize>> {
            let rank = get_u32(r).map_err(io)? as usize;
            if rank > 8 {
                return Err(Error::config(format!("dataset item rank {rank} too large")));
            }
            (0..rank)
                .map(|_| Ok(get_u64(r).map_err(io)? as usize))
                .collect()
        };
        let xi = read_shape(r)?;
        let yi = read_shape(r)?;
        let (lx, ly): (usize, usize) = (xi.iter().product(), yi.iter().product());
        let mut xs = Vec::with_capacity(n * lx);
        let mut ys = Vec::with_capacity(n * ly);
        let mut buf = vec![0u8; 4 * (lx + ly)];
        for _ in 0..n {
            r.read_exact(&mut buf).map_err(io)?;
            let mut vals = buf
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64);
            xs.extend(vals.by_ref().take(lx));
            ys.extend(vals);
        }
        Ok(Self {
            scenario,
            pipeline,
            train_snr_db,
            n_train,
            inputs: Tensor::new(&batched(n, &xi), xs)?,
            targets: Tensor::new(&batched(n, &yi), ys)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        self.write(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(&mut BufReader::new(f)).map_err(|e| match e {
            Error::Io { source, .. } => Error::io(path, source),
            other => other,
        })
    }
}
