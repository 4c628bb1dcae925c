//! MNIST ingestion and image/table output.
//!
//! Files are read from a local directory using the standard MNIST names,
//! uncompressed: `train-images-idx3-ubyte`, `train-labels-idx1-ubyte`,
//! `t10k-images-idx3-ubyte`, `t10k-labels-idx1-ubyte`.

mod idx;
mod output;

pub use idx::{
    encode_idx_images, encode_idx_labels, parse_idx_images, parse_idx_labels, RawImages, IMAGE_MAGIC, LABEL_MAGIC,
};
pub use output::{pgm_bytes, tile_grid, write_csv, write_pgm};

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

pub const MNIST_SIDE: usize = 28;
pub const DOWNSAMPLED_SIDE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn prefix(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "t10k",
        }
    }
}

/// Grayscale images with values in `[0, 1]` and their digit labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub rows: usize,
    pub cols: usize,
    /// Row-major pixels, one vector per image.
    pub images: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    pub split: Split,
}

impl Dataset {
    /// Pixels divided by 255.
    pub fn from_raw(raw: &RawImages, labels: Vec<u8>, split: Split) -> Result<Self> {
        if raw.len() != labels.len() {
            bail!(Shape, "{} images but {} labels", raw.len(), labels.len());
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 9) {
            bail!(Format, "label {bad} outside 0-9");
        }
        let images = (0..raw.len())
            .map(|i| raw.image(i).iter().map(|&p| f64::from(p) / 255.0).collect())
            .collect();
        Ok(Self {
            rows: raw.rows,
            cols: raw.cols,
            images,
            labels,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// First `n` items.
    pub fn take(&self, n: usize) -> Dataset {
        Dataset {
            images: self.images.iter().take(n).cloned().collect(),
            labels: self.labels.iter().take(n).copied().collect(),
            ..self.header()
        }
    }

    fn header(&self) -> Dataset {
        Dataset {
            rows: self.rows,
            cols: self.cols,
            images: Vec::new(),
            labels: Vec::new(),
            split: self.split,
        }
    }

    /// Every image resampled to 16×16.
    pub fn downsampled(&self) -> Result<Dataset> {
        let images = self
            .images
            .iter()
            .map(|img| downsample_16(img, self.rows, self.cols))
            .collect::<Result<_>>()?;
        Ok(Dataset {
            rows: DOWNSAMPLED_SIDE,
            cols: DOWNSAMPLED_SIDE,
            images,
            labels: self.labels.clone(),
            split: self.split,
        })
    }
}

/// Reads one split from `dir`.
pub fn load_mnist(dir: &Path, split: Split) -> Result<Dataset> {
    let p = split.prefix();
    let images = fs::read(dir.join(format!("{p}-images-idx3-ubyte")))?;
    let labels = fs::read(dir.join(format!("{p}-labels-idx1-ubyte")))?;
    Dataset::from_raw(&parse_idx_images(&images)?, parse_idx_labels(&labels)?, split)
}

/// Items whose label is in `allowed`, in original order.
pub fn filter_digits(ds: &Dataset, allowed: &[u8]) -> Dataset {
    let mut out = ds.header();
    for (img, &l) in ds.images.iter().zip(&ds.labels) {
        if allowed.contains(&l) {
            out.images.push(img.clone());
            out.labels.push(l);
        }
    }
    out
}

/// Bilinear resampling with pixel centres aligned, edges clamped.
pub fn resize_bilinear(img: &[f64], rows: usize, cols: usize, out_rows: usize, out_cols: usize) -> Result<Vec<f64>> {
    if img.len() != rows * cols || rows == 0 || cols == 0 {
        bail!(Shape, "image of {} values is not {rows}×{cols}", img.len());
    }
    let sy = rows as f64 / out_rows as f64;
    let sx = cols as f64 / out_cols as f64;
    let mut out = Vec::with_capacity(out_rows * out_cols);
    for r in 0..out_rows {
        let y = ((r as f64 + 0.5) * sy - 0.5).clamp(0.0, (rows - 1) as f64);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(rows - 1);
        let fy = y - y0 as f64;
        for c in 0..out_cols {
            let x = ((c as f64 + 0.5) * sx - 0.5).clamp(0.0, (cols - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(cols - 1);
            let fx = x - x0 as f64;
            let top = img[y0 * cols + x0] * (1.0 - fx) + img[y0 * cols + x1] * fx;
            let bottom = img[y1 * cols + x0] * (1.0 - fx) + img[y1 * cols + x1] * fx;
            out.push((top * (1.0 - fy) + bottom * fy).clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

/// 28×28 → 16×16.
pub fn downsample_16(img: &[f64], rows: usize, cols: usize) -> Result<Vec<f64>> {
    if rows != MNIST_SIDE || cols != MNIST_SIDE {
        bail!(Shape, "expected a 28×28 image, got {rows}×{cols}");
    }
    resize_bilinear(img, rows, cols, DOWNSAMPLED_SIDE, DOWNSAMPLED_SIDE)
}

/// Row-major pixels divided by their L2 norm.
pub fn to_unit_vector(img: &[f64]) -> Result<Vec<f64>> {
    let norm = img.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        bail!(Encoding, "image has zero norm");
    }
    Ok(img.iter().map(|v| v / norm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Separable reference: interpolate every row horizontally, then the
    /// columns of that intermediate vertically.
    fn separable_reference(img: &[f64], rows: usize, cols: usize, n: usize) -> Vec<f64> {
        let weights = |len: usize| -> Vec<(usize, usize, f64)> {
            (0..n)
                .map(|i| {
                    let pos = (i as f64 + 0.5) * len as f64 / n as f64 - 0.5;
                    let pos = pos.max(0.0).min((len - 1) as f64);
                    let lo = pos as usize;
                    let hi = if lo + 1 < len { lo + 1 } else { lo };
                    (lo, hi, pos - lo as f64)
                })
                .collect()
        };
        let wx = weights(cols);
        let wy = weights(rows);
        let mut horiz = vec![0.0; rows * n];
        for r in 0..rows {
            for (c, &(lo, hi, f)) in wx.iter().enumerate() {
                horiz[r * n + c] = img[r * cols + lo] + f * (img[r * cols + hi] - img[r * cols + lo]);
            }
        }
        let mut out = vec![0.0; n * n];
        for c in 0..n {
            for (r, &(lo, hi, f)) in wy.iter().enumerate() {
                out[r * n + c] = horiz[lo * n + c] + f * (horiz[hi * n + c] - horiz[lo * n + c]);
            }
        }
        out
    }

    fn raw(n: usize) -> RawImages {
        RawImages {
            rows: 2,
            cols: 2,
            pixels: (0..4 * n).map(|i| (i * 37 % 256) as u8).collect(),
        }
    }

    #[test]
    fn constant_image_stays_constant() {
        let out = downsample_16(&vec![0.3; 784], 28, 28).unwrap();
        assert!(out.iter().all(|v| (v - 0.3).abs() < 1e-15));
    }

    #[test]
    fn horizontal_ramp_stays_monotone() {
        let img: Vec<f64> = (0..784).map(|i| (i % 28) as f64 / 27.0).collect();
        let out = downsample_16(&img, 28, 28).unwrap();
        for row in out.chunks(16) {
            assert!(row.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn wrong_shape() {
        assert!(matches!(
            downsample_16(&[0.0; 100], 10, 10),
            Err(crate::Error::Shape(_))
        ));
        assert!(resize_bilinear(&[0.0; 5], 2, 2, 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn matches_separable_reference(pixels in proptest::collection::vec(0.0f64..=1.0, 784)) {
            let ours = downsample_16(&pixels, 28, 28).unwrap();
            let reference = separable_reference(&pixels, 28, 28, 16);
            for (a, b) in ours.iter().zip(&reference) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn filtering() {
        let ds = Dataset::from_raw(&raw(4), vec![0, 1, 2, 1], Split::Train).unwrap();
        assert!(filter_digits(&ds, &[]).is_empty());
        let f = filter_digits(&ds, &[0, 1]);
        assert_eq!(f.labels, [0, 1, 1]);
        assert_eq!(f.images[1], ds.images[1]);
        assert_eq!(filter_digits(&ds, &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9]), ds);
    }

    #[test]
    fn scaling_and_label_checks() {
        let ds = Dataset::from_raw(&raw(1), vec![7], Split::Test).unwrap();
        assert_eq!(ds.images[0][1], 37.0 / 255.0);
        assert!(Dataset::from_raw(&raw(1), vec![], Split::Test).is_err());
        assert!(Dataset::from_raw(&raw(1), vec![10], Split::Test).is_err());
    }

    #[test]
    fn unit_vectors() {
        let mut img = vec![0.0; 16];
        img[5] = 0.4;
        let v = to_unit_vector(&img).unwrap();
        assert_eq!(v[5], 1.0);
        assert!(matches!(to_unit_vector(&[0.0; 4]), Err(crate::Error::Encoding(_))));
        let w = to_unit_vector(&[0.1, 0.7, 0.2]).unwrap();
        assert!((w.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        let again = to_unit_vector(&w).unwrap();
        for (a, b) in w.iter().zip(&again) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
