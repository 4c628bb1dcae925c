//! Deterministic PGM and CSV writers.

use std::fs;
use std::path::Path;

use crate::error::{bail, Result};

/// Binary P5 bytes; values in `[0, 1]` are scaled to `0..=255` with
/// rounding.
pub fn pgm_bytes(pixels: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    if pixels.len() != width * height {
        bail!(Shape, "{} pixels for a {width}×{height} image", pixels.len());
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    Ok(out)
}

pub fn write_pgm(path: &Path, pixels: &[f64], width: usize, height: usize) -> Result<()> {
    fs::write(path, pgm_bytes(pixels, width, height)?)?;
    Ok(())
}

/// Lays square `side`×`side` images out `columns` per row with a
/// one-pixel black gutter. Returns `(width, height, pixels)`.
pub fn tile_grid(images: &[Vec<f64>], side: usize, columns: usize) -> Result<(usize, usize, Vec<f64>)> {
    if images.is_empty() || columns == 0 {
        bail!(Shape, "grid needs at least one image and one column");
    }
    if let Some(bad) = images.iter().find(|im| im.len() != side * side) {
        bail!(Shape, "image of {} values in a grid of {side}×{side} tiles", bad.len());
    }
    let columns = columns.min(images.len());
    let grid_rows = images.len().div_ceil(columns);
    let width = columns * (side + 1) - 1;
    let height = grid_rows * (side + 1) - 1;
    let mut pixels = vec![0.0; width * height];
    for (k, im) in images.iter().enumerate() {
        let (gr, gc) = (k / columns, k % columns);
        for r in 0..side {
            let row = (gr * (side + 1) + r) * width + gc * (side + 1);
            pixels[row..row + side].copy_from_slice(&im[r * side..(r + 1) * side]);
        }
    }
    Ok((width, height, pixels))
}

/// CSV with a header row, RFC 4180 quoting and CRLF line ends.
pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[&str], rows: &[Vec<S>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_path(path)?;
    w.write_record(header)?;
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            bail!(Shape, "row {i} has {} fields, header has {}", row.len(), header.len());
        }
        w.write_record(row.iter().map(|s| s.as_ref()))?;
    }
    w.flush()?;
    Ok(())
}
