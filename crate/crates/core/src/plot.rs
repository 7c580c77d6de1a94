//! Magnitude heatmaps as PNG, one pixel per cell.

use std::path::Path;

use image::{Rgb, RgbImage};
use ndarray::Array2;

use crate::error::{Error, Result};

// viridis sampled at 0, 0.25, 0.5, 0.75, 1
const STOPS: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

fn colour(v: f64) -> Rgb<u8> {
    let v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
    let x = v * (STOPS.len() - 1) as f64;
    let i = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - i as f64;
    let mut px = [0u8; 3];
    for (c, p) in px.iter_mut().enumerate() {
        *p = (STOPS[i][c] + f * (STOPS[i + 1][c] - STOPS[i][c])).round() as u8;
    }
    Rgb(px)
}

/// Rasterises `mag` (rows x columns) normalised by its maximum. Row 0 is
/// drawn at the top when `row0_top`, at the bottom otherwise.
pub fn heatmap(mag: &Array2<f64>, row0_top: bool) -> Result<RgbImage> {
    let (rows, cols) = mag.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::invalid("cannot draw an empty plane"));
    }
    let peak = mag.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let scale = if peak > 0.0 { 1.0 / peak } else { 0.0 };
    let mut img = RgbImage::new(cols as u32, rows as u32);
    for ((j, n), &v) in mag.indexed_iter() {
        let y = if row0_top { j } else { rows - 1 - j };
        img.put_pixel(n as u32, y as u32, colour(v * scale));
    }
    Ok(img)
}

pub fn write_heatmap(mag: &Array2<f64>, row0_top: bool, path: impl AsRef<Path>) -> Result<()> {
    heatmap(mag, row0_top)?
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| match e {
            image::ImageError::IoError(io) => Error::Io(io),
            other => Error::invalid(other.to_string()),
        })
}
