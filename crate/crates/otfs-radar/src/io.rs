//! Frame fixtures and result export.
//!
//! Frames travel as CSV (row-major, N rows, each row interleaving
//! `re,im,re,im,...` across the M Doppler columns) or as a small binary
//! format (`OTFSDDF1` magic, little-endian u32 dimensions, then row-major
//! interleaved f64 pairs). Maps, metrics and profiles export as CSV with
//! fixed headers; detection reports as JSON lines.

use crate::cfar::MapAxes;
use crate::experiments::MetricsRow;
use crate::modem::DelayDopplerFrame;
use crate::{Error, Result};
use ndarray::Array2;
use num_complex::Complex64;
use std::io::{Read, Write};

const FRAME_MAGIC: &[u8; 8] = b"OTFSDDF1";
const MAP_MAGIC: &[u8; 8] = b"OTFSMAP1";

/// Upper bound on imported matrix cells; rejects absurd headers before any
/// allocation.
const MAX_CELLS: usize = 1 << 24;

pub fn write_frame_csv<W: Write>(writer: W, frame: &DelayDopplerFrame) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    let x = frame.x_dd();
    for row in x.rows() {
        let mut record = Vec::with_capacity(2 * row.len());
        for v in row.iter() {
            record.push(format!("{:?}", v.re));
            record.push(format!("{:?}", v.im));
        }
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_frame_csv<R: Read>(reader: R) -> Result<DelayDopplerFrame> {
    let mut input = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let mut width: Option<usize> = None;
    for record in input.records() {
        let record = record?;
        if record.len() % 2 != 0 {
            return Err(Error::Config(format!(
                "frame CSV row {} has {} fields; real/imag pairs required",
                rows.len(),
                record.len()
            )));
        }
        let w = record.len() / 2;
        if *width.get_or_insert(w) != w {
            return Err(Error::Config(format!(
                "frame CSV row {} has {} columns, expected {}",
                rows.len(),
                w,
                width.unwrap()
            )));
        }
        let mut row = Vec::with_capacity(w);
        for pair in record.iter().collect::<Vec<_>>().chunks(2) {
            let re: f64 = pair[0]
                .parse()
                .map_err(|e| Error::Config(format!("bad real value `{}`: {e}", pair[0])))?;
            let im: f64 = pair[1]
                .parse()
                .map_err(|e| Error::Config(format!("bad imag value `{}`: {e}", pair[1])))?;
            row.push(Complex64::new(re, im));
        }
        rows.push(row);
        if rows.len().saturating_mul(width.unwrap_or(1)) > MAX_CELLS {
            return Err(Error::Config("frame CSV exceeds the size limit".into()));
        }
    }
    let n = rows.len();
    let m = width.unwrap_or(0);
    if n == 0 || m == 0 {
        return Err(Error::Config("frame CSV is empty".into()));
    }
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    let x_dd = Array2::from_shape_vec((n, m), flat).expect("validated row widths");
    Ok(DelayDopplerFrame::from_symbols(x_dd))
}

pub fn write_frame_bin<W: Write>(mut writer: W, frame: &DelayDopplerFrame) -> Result<()> {
    let x = frame.x_dd();
    let (n, m) = x.dim();
    writer.write_all(FRAME_MAGIC)?;
    writer.write_all(&(n as u32).to_le_bytes())?;
    writer.write_all(&(m as u32).to_le_bytes())?;
    for v in x.iter() {
        writer.write_all(&v.re.to_le_bytes())?;
        writer.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_frame_bin<R: Read>(mut reader: R) -> Result<DelayDopplerFrame> {
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != FRAME_MAGIC {
        return Err(Error::Config("not a frame dump (bad magic)".into()));
    }
    let mut word = [0u8; 4];
    reader.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    reader.read_exact(&mut word)?;
    let m = u32::from_le_bytes(word) as usize;
    if n == 0 || m == 0 || n.saturating_mul(m) > MAX_CELLS {
        return Err(Error::Config(format!("unreasonable frame dims {n}x{m}")));
    }
    let mut data = Vec::with_capacity(n * m);
    let mut buf = [0u8; 16];
    for _ in 0..n * m {
        reader.read_exact(&mut buf)?;
        let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
        let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
        data.push(Complex64::new(re, im));
    }
    let x_dd = Array2::from_shape_vec((n, m), data).expect("sized above");
    Ok(DelayDopplerFrame::from_symbols(x_dd))
}

/// Map export shared by the GLRT statistic map and the 2-D FFT map:
/// `delay_bin,doppler_bin,value`.
pub fn write_map_csv<W: Write>(writer: W, values: &Array2<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["delay_bin", "doppler_bin", "value"])?;
    for ((i, j), v) in values.indexed_iter() {
        out.write_record(&[i.to_string(), j.to_string(), format!("{v:?}")])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_map_bin<W: Write>(mut writer: W, values: &Array2<f64>) -> Result<()> {
    let (rows, cols) = values.dim();
    writer.write_all(MAP_MAGIC)?;
    writer.write_all(&(rows as u32).to_le_bytes())?;
    writer.write_all(&(cols as u32).to_le_bytes())?;
    for v in values.iter() {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_map_bin<R: Read>(mut reader: R) -> Result<Array2<f64>> {
    let mut magic = [0u8; 8];
    reader.read_exact(&mut magic)?;
    if &magic != MAP_MAGIC {
        return Err(Error::Config("not a map dump (bad magic)".into()));
    }
    let mut word = [0u8; 4];
    reader.read_exact(&mut word)?;
    let rows = u32::from_le_bytes(word) as usize;
    reader.read_exact(&mut word)?;
    let cols = u32::from_le_bytes(word) as usize;
    if rows == 0 || cols == 0 || rows.saturating_mul(cols) > MAX_CELLS {
        return Err(Error::Config(format!("unreasonable map dims {rows}x{cols}")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    let mut buf = [0u8; 8];
    for _ in 0..rows * cols {
        reader.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(Array2::from_shape_vec((rows, cols), data).expect("sized above"))
}

/// Sweep output: `snr_db,pd,mean_fa,rmse,n_trials`, one row per SNR point;
/// `rmse` is empty when the reference target was never detected.
pub fn write_metrics_csv<W: Write>(writer: W, rows: &[MetricsRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["snr_db", "pd", "mean_fa", "rmse", "n_trials"])?;
    for row in rows {
        out.write_record(&[
            format!("{:?}", row.snr_db),
            format!("{:?}", row.p_detect),
            format!("{:?}", row.mean_false_alarms),
            row.rmse.map_or(String::new(), |r| format!("{r:?}")),
            row.n_trials.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Profile slice: `axis_value,statistic_db[,threshold_db]`, statistic in
/// `10·log10` of the unitless map value.
pub fn write_profile_csv<W: Write>(
    writer: W,
    axis_label: &str,
    axis: &[f64],
    values_db: &[f64],
    threshold_db: Option<&[f64]>,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    match threshold_db {
        Some(_) => out.write_record([axis_label, "statistic_db", "threshold_db"])?,
        None => out.write_record([axis_label, "statistic_db"])?,
    }
    for (i, (&x, &v)) in axis.iter().zip(values_db).enumerate() {
        match threshold_db {
            Some(thr) => {
                out.write_record(&[format!("{x:?}"), format!("{v:?}"), format!("{:?}", thr[i])])?
            }
            None => out.write_record(&[format!("{x:?}"), format!("{v:?}")])?,
        }
    }
    out.flush()?;
    Ok(())
}

/// One JSON object per line; suitable for appending across trials.
pub fn write_reports_jsonl<W: Write, T: serde::Serialize>(
    mut writer: W,
    reports: &[T],
) -> Result<()> {
    for report in reports {
        serde_json::to_writer(&mut writer, report)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Complex vector dump for debugging: `index,re,im`.
pub fn write_vector_csv<W: Write>(writer: W, values: &[Complex64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["index", "re", "im"])?;
    for (i, v) in values.iter().enumerate() {
        out.write_record(&[i.to_string(), format!("{:?}", v.re), format!("{:?}", v.im)])?;
    }
    out.flush()?;
    Ok(())
}

/// Bin-center axis values for a map's delay axis, as ranges in meters when
/// `as_range` (otherwise seconds).
pub fn delay_axis(axes: &MapAxes, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|i| axes.delay_at(i as f64) * scale).collect()
}

/// Bin-center axis values for a map's Doppler axis, scaled (e.g. to m/s).
pub fn doppler_axis(axes: &MapAxes, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|j| axes.doppler_at(j as f64) * scale).collect()
}
