//! Binary checkpoints.
//!
//! Layout (little-endian): magic `DDCN`, version `u32`, skip mode `u32`,
//! layer count `u32`, then per layer a tag `u32` and four `u32` dimensions,
//! then parameter count `u64`, state count `u64`, the parameters and the
//! batch-norm state as `f32` in row-major layer order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::layers::LayerSpec;
use super::net::{Net, Skip};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DDCN";
const VERSION: u32 = 1;

fn encode(spec: &LayerSpec) -> (u32, [u32; 4]) {
    let d = |v: usize| v as u32;
    match *spec {
        LayerSpec::Dense { inputs, outputs } => (1, [d(inputs), d(outputs), 0, 0]),
        LayerSpec::Relu => (2, [0; 4]),
        LayerSpec::BatchNorm { channels } => (3, [d(channels), 0, 0, 0]),
        LayerSpec::Conv2d {
            in_ch,
            out_ch,
            kh,
            kw,
        } => (4, [d(in_ch), d(out_ch), d(kh), d(kw)]),
        LayerSpec::Lstm { inputs, hidden } => (5, [d(inputs), d(hidden), 0, 0]),
        LayerSpec::ConvLstm {
            in_ch,
            hidden,
            kh,
            kw,
        } => (6, [d(in_ch), d(hidden), d(kh), d(kw)]),
    }
}

fn decode(tag: u32, d: [u32; 4]) -> Option<LayerSpec> {
    let [a, b, c, e] = d.map(|v| v as usize);
    Some(match tag {
        1 => LayerSpec::Dense {
            inputs: a,
            outputs: b,
        },
        2 => LayerSpec::Relu,
        3 => LayerSpec::BatchNorm { channels: a },
        4 => LayerSpec::Conv2d {
            in_ch: a,
            out_ch: b,
            kh: c,
            kw: e,
        },
        5 => LayerSpec::Lstm {
            inputs: a,
            hidden: b,
        },
        6 => LayerSpec::ConvLstm {
            in_ch: a,
            hidden: b,
            kh: c,
            kw: e,
        },
        _ => return None,
    })
}

pub fn write_checkpoint(net: &Net, w: &mut impl Write) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&net.skip().id().to_le_bytes())?;
    w.write_all(&(net.specs().len() as u32).to_le_bytes())?;
    for s in net.specs() {
        let (tag, dims) = encode(s);
        w.write_all(&tag.to_le_bytes())?;
        for v in dims {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.write_all(&(net.params().len() as u64).to_le_bytes())?;
    w.write_all(&(net.state().len() as u64).to_le_bytes())?;
    for &v in net.params().iter().chain(net.state()) {
        w.write_all(&(v as f32).to_le_bytes())?;
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f32s(r: &mut impl Read, n: usize) -> std::io::Result<Vec<f64>> {
    let mut buf = vec![0u8; 4 * n];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect())
}

pub fn read_checkpoint(r: &mut impl Read) -> Result<Net> {
    let io = |e| Error::io("<checkpoint>", e);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(Error::config("not a network checkpoint (bad magic)"));
    }
    let version = read_u32(r).map_err(io)?;
    if version != VERSION {
        return Err(Error::config(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let skip =
        Skip::from_id(read_u32(r).map_err(io)?).ok_or_else(|| Error::config("bad skip mode"))?;
    let n = read_u32(r).map_err(io)? as usize;
    let mut specs = Vec::with_capacity(n);
    for _ in 0..n {
        let tag = read_u32(r).map_err(io)?;
        let mut d = [0u32; 4];
        for v in &mut d {
            *v = read_u32(r).map_err(io)?;
        }
        specs
            .push(decode(tag, d).ok_or_else(|| Error::config(format!("unknown layer tag {tag}")))?);
    }
    let np = read_u64(r).map_err(io)? as usize;
    let ns = read_u64(r).map_err(io)? as usize;
    let mut net = Net::zeros(specs, skip)?;
    if np != net.param_count() || ns != net.state().len() {
        return Err(Error::config(format!(
            "checkpoint holds {np} parameters for a layout that needs {}",
            net.param_count()
        )));
    }
    let params = read_f32s(r, np).map_err(io)?;
    net.params_mut().copy_from_slice(&params);
    net.set_state(read_f32s(r, ns).map_err(io)?);
    Ok(net)
}

pub fn save_checkpoint(net: &Net, path: &Path) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_checkpoint(net, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Net> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut BufReader::new(f)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Loss history as `epoch,loss` CSV.
pub fn save_loss_history(history: &[f64], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let err = |e: csv::Error| Error::io(path, e.into());
    w.write_record(["epoch", "loss"]).map_err(err)?;
    for (e, l) in history.iter().enumerate() {
        w.write_record([e.to_string(), format!("{l:e}")])
            .map_err(err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
