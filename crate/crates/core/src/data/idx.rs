//! IDX container decoding.

use crate::error::{bail, Result};

pub const IMAGE_MAGIC: u32 = 2051;
pub const LABEL_MAGIC: u32 = 2049;

/// Images of one IDX file, stored row-major and back to back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<u8>,
}

impl RawImages {
    pub fn len(&self) -> usize {
        if self.rows * self.cols == 0 {
            0
        } else {
            self.pixels.len() / (self.rows * self.cols)
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.rows * self.cols;
        &self.pixels[i * n..(i + 1) * n]
    }
}

fn read_u32(bytes: &[u8], at: usize) -> Result<usize> {
    match bytes.get(at..at + 4) {
        Some(b) => Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize),
        None => bail!(Format, "IDX header truncated at byte {at}"),
    }
}

fn payload<'a>(bytes: &'a [u8], offset: usize, len: usize) -> Result<&'a [u8]> {
    let have = bytes.len().saturating_sub(offset);
    if have < len {
        bail!(Format, "IDX payload holds {have} bytes, header promises {len}");
    }
    Ok(&bytes[offset..offset + len])
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<RawImages> {
    let magic = read_u32(bytes, 0)?;
    if magic != IMAGE_MAGIC as usize {
        bail!(Format, "image file magic {magic}, expected {IMAGE_MAGIC}");
    }
    let count = read_u32(bytes, 4)?;
    let rows = read_u32(bytes, 8)?;
    let cols = read_u32(bytes, 12)?;
    let len = count
        .checked_mul(rows)
        .and_then(|v| v.checked_mul(cols))
        .ok_or_else(|| crate::Error::Format("IDX dimensions overflow".into()))?;
    Ok(RawImages {
        rows,
        cols,
        pixels: payload(bytes, 16, len)?.to_vec(),
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0)?;
    if magic != LABEL_MAGIC as usize {
        bail!(Format, "label file magic {magic}, expected {LABEL_MAGIC}");
    }
    let count = read_u32(bytes, 4)?;
    Ok(payload(bytes, 8, count)?.to_vec())
}

/// Serializes images back into the IDX layout.
pub fn encode_idx_images(images: &RawImages) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.pixels.len());
    for v in [IMAGE_MAGIC as usize, images.len(), images.rows, images.cols] {
        out.extend_from_slice(&(v as u32).to_be_bytes());
    }
    out.extend_from_slice(&images.pixels);
    out
}

pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
