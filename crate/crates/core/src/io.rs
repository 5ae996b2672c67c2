//! Dumps of frames, sample grids and range-Doppler maps.
//!
//! CSV layouts (one header row each):
//!
//! - frame: `k,m,re,im` with `k` the signed subcarrier offset
//! - sample grid: `m,n,re,im`
//! - frequency grid: `k,m,re,im`
//! - range-Doppler map: `delay_s,doppler_hz,magnitude`
//!
//! The binary sample-grid format is little-endian: the magic `JRCG`, `u32 M`,
//! `u32 N`, `f64 σ²`, then `M·N` pairs of `f64 (re, im)` in row-major
//! `[m, n]` order.

use std::io::{Read, Write};

use ndarray::Array2;
use num_complex::Complex64;

use crate::channel::SampleGrid;
use crate::error::{Error, Result};
use crate::rdmap::{FreqGrid, RangeDopplerMap};
use crate::waveform::{FrameSymbols, OfdmConfig};

const GRID_MAGIC: &[u8; 4] = b"JRCG";

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn write_complex_rows<W: Write>(
    out: W,
    header: [&str; 4],
    rows: impl Iterator<Item = (String, String, Complex64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for (a, b, v) in rows {
        w.write_record([a, b, v.re.to_string(), v.im.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_frame_csv<W: Write>(frame: &FrameSymbols, cfg: &OfdmConfig, out: W) -> Result<()> {
    if frame.x.nrows() != cfg.k_active {
        return Err(Error::Dimension(format!(
            "frame has {} rows, config has {} subcarriers",
            frame.x.nrows(),
            cfg.k_active
        )));
    }
    let ks = cfg.subcarriers();
    write_complex_rows(
        out,
        ["k", "m", "re", "im"],
        frame
            .x
            .indexed_iter()
            .map(|((p, m), v)| (ks[p].to_string(), m.to_string(), *v)),
    )
}

pub fn write_sample_grid_csv<W: Write>(grid: &SampleGrid, out: W) -> Result<()> {
    write_complex_rows(
        out,
        ["m", "n", "re", "im"],
        grid.y
            .indexed_iter()
            .map(|((m, n), v)| (m.to_string(), n.to_string(), *v)),
    )
}

pub fn write_freq_grid_csv<W: Write>(fg: &FreqGrid, cfg: &OfdmConfig, out: W) -> Result<()> {
    if fg.y_tilde.nrows() != cfg.k_active {
        return Err(Error::Dimension(format!(
            "grid has {} rows, config has {} subcarriers",
            fg.y_tilde.nrows(),
            cfg.k_active
        )));
    }
    let ks = cfg.subcarriers();
    write_complex_rows(
        out,
        ["k", "m", "re", "im"],
        fg.y_tilde
            .indexed_iter()
            .map(|((p, m), v)| (ks[p].to_string(), m.to_string(), *v)),
    )
}

pub fn write_rdmap_csv<W: Write>(map: &RangeDopplerMap, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delay_s", "doppler_hz", "magnitude"])
        .map_err(csv_err)?;
    for ((i, j), v) in map.magnitudes.indexed_iter() {
        w.write_record([
            map.delay_axis[i].to_string(),
            map.doppler_axis[j].to_string(),
            v.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sample_grid_bin<W: Write>(grid: &SampleGrid, mut out: W) -> Result<()> {
    let (m, n) = grid.y.dim();
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::Dimension(format!("grid dimension {v} exceeds u32")));
    out.write_all(GRID_MAGIC)?;
    out.write_all(&dim(m)?.to_le_bytes())?;
    out.write_all(&dim(n)?.to_le_bytes())?;
    out.write_all(&grid.sigma2.to_le_bytes())?;
    for v in grid.y.iter() {
        out.write_all(&v.re.to_le_bytes())?;
        out.write_all(&v.im.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_sample_grid_bin<R: Read>(mut input: R) -> Result<SampleGrid> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != GRID_MAGIC {
        return Err(Error::Parse("not a sample-grid file (bad magic)".into()));
    }
    let mut u = [0u8; 4];
    input.read_exact(&mut u)?;
    let m = u32::from_le_bytes(u) as usize;
    input.read_exact(&mut u)?;
    let n = u32::from_le_bytes(u) as usize;
    let mut f = [0u8; 8];
    input.read_exact(&mut f)?;
    let sigma2 = f64::from_le_bytes(f);
    let mut data = Vec::with_capacity(m.saturating_mul(n).min(1 << 24));
    for _ in 0..m * n {
        input.read_exact(&mut f)?;
        let re = f64::from_le_bytes(f);
        input.read_exact(&mut f)?;
        data.push(Complex64::new(re, f64::from_le_bytes(f)));
    }
    let y = Array2::from_shape_vec((m, n), data).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(SampleGrid { y, sigma2 })
}
