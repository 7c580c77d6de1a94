//! CSV writers and readers.
//!
//! Every file starts with `# key=value` metadata lines. Numbers are written
//! with the shortest representation that round-trips, so identical inputs
//! give byte-identical files.

use std::fmt::Display;
use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;

use crate::cwt::{Kernel, ScaleGrid, TimeScalePlane};
use crate::error::{Error, Result};
use crate::estimation::SigmaTrack;
use crate::reconstruct::Component;
use crate::separability::SeparabilityRow;
use crate::sst::TimeFreqPlane;

/// Ordered `key=value` pairs written as `#` header lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    entries: Vec<(String, String)>,
}

impl Metadata {
    pub fn new() -> Self {
        Metadata::default()
    }

    pub fn with(mut self, key: &str, value: impl Display) -> Self {
        self.push(key, value);
        self
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn extend(&mut self, other: &Metadata) {
        self.entries.extend(other.entries.iter().cloned());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(out, "# {k}={v}")?;
        }
        Ok(())
    }
}

/// `re+imi` / `re-imi`.
pub fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", z.re, sign, z.im.abs())
}

pub fn parse_complex(cell: &str) -> Option<Complex64> {
    let body = cell.trim().strip_suffix('i')?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))?;
    let re = body[..split].parse::<f64>().ok()?;
    let im = body[split..].parse::<f64>().ok()?;
    Some(Complex64::new(re, im))
}

fn join<T: Display>(values: impl IntoIterator<Item = T>, sep: &str) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(sep)
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn write_matrix<W: Write>(
    corner: &str,
    axis: &[f64],
    times: &[f64],
    data: &Array2<Complex64>,
    out: &mut W,
) -> Result<()> {
    writeln!(out, "{corner},{}", join(times, ","))?;
    let mut line = String::new();
    for (v, row) in axis.iter().zip(data.rows()) {
        line.clear();
        line.push_str(&v.to_string());
        for z in row {
            line.push(',');
            line.push_str(&format_complex(*z));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Scale rows, time columns.
pub fn write_time_scale_plane<W: Write>(plane: &TimeScalePlane, meta: &Metadata, mut out: W) -> Result<()> {
    let meta = meta
        .clone()
        .with("plane", "time_scale")
        .with("kernel", plane.kernel().name())
        .with("n_voices", plane.grid().n_voices())
        .with("sample_rate", plane.sample_rate())
        .with("t0", plane.t0())
        .with("sigma_b", join(plane.sigma(), " "));
    meta.write(&mut out)?;
    write_matrix("scale\\time", plane.scales(), &plane.times(), plane.data(), &mut out)
}

/// Frequency rows (bin centres), time columns.
pub fn write_time_freq_plane<W: Write>(tf: &TimeFreqPlane, meta: &Metadata, mut out: W) -> Result<()> {
    let meta = meta
        .clone()
        .with("plane", "time_frequency")
        .with("bin_width", tf.bin_width())
        .with("sample_rate", tf.sample_rate())
        .with("t0", tf.t0());
    meta.write(&mut out)?;
    let centres: Vec<f64> = (0..tf.n_bins()).map(|k| tf.frequency(k)).collect();
    write_matrix("freq\\time", &centres, &tf.times(), tf.data(), &mut out)
}

/// A plane read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneTable {
    pub meta: Metadata,
    pub times: Vec<f64>,
    /// Scales or frequencies, one per row.
    pub axis: Vec<f64>,
    pub data: Array2<Complex64>,
}

impl PlaneTable {
    /// Rebuilds a time-scale plane; needs the metadata written by
    /// [`write_time_scale_plane`].
    pub fn to_time_scale_plane(&self) -> Result<TimeScalePlane> {
        let need = |k: &str| self.meta.get(k).ok_or_else(|| Error::invalid(format!("plane metadata lacks `{k}`")));
        let num = |k: &str| -> Result<f64> {
            need(k)?.parse::<f64>().map_err(|_| Error::invalid(format!("bad `{k}` in plane metadata")))
        };
        let kernel = Kernel::from_name(need("kernel")?).ok_or_else(|| Error::invalid("unknown kernel"))?;
        let fs = num("sample_rate")?;
        let n_voices = num("n_voices")? as usize;
        let sigma = need("sigma_b")?
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|_| Error::invalid("bad `sigma_b` entry")))
            .collect::<Result<Vec<_>>>()?;
        let rate = crate::cwt::track_rate(&sigma, fs);
        let grid = ScaleGrid::from_parts(self.axis.clone(), n_voices, 1.0 / fs)?;
        TimeScalePlane::from_parts(self.data.clone(), grid, kernel, sigma, rate, num("t0")?, fs)
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Splits a file into metadata and non-comment lines (with line numbers).
fn split_lines(text: &str) -> (Metadata, Vec<(usize, &str)>) {
    let mut meta = Metadata::new();
    let mut body = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.split_once('=') {
                meta.push(k.trim(), v.trim());
            }
        } else {
            body.push((i + 1, line));
        }
    }
    (meta, body)
}

pub fn parse_plane(text: &str) -> Result<PlaneTable> {
    let (meta, body) = split_lines(text);
    let (&(hline, header), rows) = body.split_first().ok_or_else(|| parse_err(0, "empty plane file"))?;
    let times = header
        .split(',')
        .skip(1)
        .map(|s| s.trim().parse::<f64>().map_err(|_| parse_err(hline, format!("bad time `{s}`"))))
        .collect::<Result<Vec<_>>>()?;
    let mut axis = Vec::with_capacity(rows.len());
    let mut data = Array2::zeros((rows.len(), times.len()));
    for (j, &(ln, line)) in rows.iter().enumerate() {
        let mut cells = line.split(',');
        let head = cells.next().unwrap_or("");
        axis.push(head.trim().parse::<f64>().map_err(|_| parse_err(ln, format!("bad axis value `{head}`")))?);
        let mut count = 0;
        for (n, cell) in cells.enumerate() {
            if n >= times.len() {
                return Err(parse_err(ln, "more cells than times"));
            }
            data[[j, n]] = parse_complex(cell).ok_or_else(|| parse_err(ln, format!("bad cell `{cell}`")))?;
            count += 1;
        }
        if count != times.len() {
            return Err(parse_err(ln, format!("expected {} cells, found {count}", times.len())));
        }
    }
    Ok(PlaneTable { meta, times, axis, data })
}

/// A headed numeric table read back from CSV; blank or `nan` cells are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn parse_table(text: &str) -> Result<Table> {
    let (meta, body) = split_lines(text);
    let (&(_, header), rows) = body.split_first().ok_or_else(|| parse_err(0, "empty table"))?;
    let columns: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let rows = rows
        .iter()
        .map(|&(ln, line)| {
            let vals = line
                .split(',')
                .map(|s| match s.trim() {
                    "" => Ok(f64::NAN),
                    v => v.parse::<f64>().map_err(|_| parse_err(ln, format!("`{v}` is not a number"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != columns.len() {
                return Err(parse_err(ln, format!("expected {} columns, found {}", columns.len(), vals.len())));
            }
            Ok(vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table { meta, columns, rows })
}

/// `t, sigma_u, C, sigma_est`, plus `sigma1, sigma2` when `truth` is given.
pub fn write_sigma_track<W: Write>(
    track: &SigmaTrack,
    truth: Option<&[SeparabilityRow]>,
    meta: &Metadata,
    mut out: W,
) -> Result<()> {
    if let Some(rows) = truth {
        if rows.len() != track.times.len() {
            return Err(Error::LengthMismatch { expected: track.times.len(), found: rows.len() });
        }
    }
    meta.clone().with("smoothing", join(&track.smoothing, " ")).write(&mut out)?;
    write!(out, "t,sigma_u,C,sigma_est")?;
    if truth.is_some() {
        write!(out, ",sigma1,sigma2")?;
    }
    writeln!(out)?;
    for i in 0..track.times.len() {
        write!(out, "{},{},{},{}", track.times[i], track.sigma_u[i], track.c[i], track.sigma_est[i])?;
        if let Some(rows) = truth {
            write!(out, ",{},{}", opt(rows[i].sigma1), opt(rows[i].sigma2))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `b, sigma1, sigma2, margin_1 .. margin_{K-1}`; undefined values are `NaN`.
pub fn write_separability<W: Write>(rows: &[SeparabilityRow], meta: &Metadata, mut out: W) -> Result<()> {
    meta.write(&mut out)?;
    let k = rows.iter().map(|r| r.margins.len()).max().unwrap_or(0);
    write!(out, "b,sigma1,sigma2")?;
    for m in 1..=k {
        write!(out, ",margin_{m}")?;
    }
    writeln!(out)?;
    for r in rows {
        write!(out, "{},{},{}", r.time, opt(r.sigma1), opt(r.sigma2))?;
        for m in 0..k {
            write!(out, ",{}", r.margins.get(m).copied().unwrap_or(f64::NAN))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `t, real, imag, ridge_Hz`.
pub fn write_component<W: Write>(comp: &Component, meta: &Metadata, mut out: W) -> Result<()> {
    let x = &comp.signal;
    if comp.ridge_hz.len() != x.len() {
        return Err(Error::LengthMismatch { expected: x.len(), found: comp.ridge_hz.len() });
    }
    meta.clone().with("clipped", comp.clipped).write(&mut out)?;
    writeln!(out, "t,real,imag,ridge_Hz")?;
    for (n, (z, f)) in x.samples().iter().zip(&comp.ridge_hz).enumerate() {
        writeln!(out, "{},{},{},{}", x.time(n), z.re, z.im, f)?;
    }
    Ok(())
}
