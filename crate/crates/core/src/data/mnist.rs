//! Reader for the (uncompressed) IDX files MNIST ships in.
//!
//! Layout: a big-endian `u32` magic `0x0000_08NN` (unsigned-byte payload,
//! `NN` dimensions), then `NN` big-endian `u32` sizes, then the raw bytes.

use std::fs;
use std::path::Path;

use super::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::ndcore::Mat;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Standard file names: train images, train labels, test images, test labels.
pub const MNIST_FILES: [&str; 4] = [
    "train-images-idx3-ubyte",
    "train-labels-idx1-ubyte",
    "t10k-images-idx3-ubyte",
    "t10k-labels-idx1-ubyte",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxHeader {
    pub magic: u32,
    pub dims: Vec<u32>,
}

impl IdxHeader {
    pub fn byte_len(&self) -> usize {
        4 + 4 * self.dims.len()
    }

    pub fn payload_len(&self) -> usize {
        self.dims.iter().map(|&d| d as usize).product()
    }

    /// Parses a header whose magic must equal `expected`.
    pub fn parse(bytes: &[u8], expected: u32, path: &Path) -> Result<Self> {
        let truncated = |detail: String| Error::Truncated {
            path: path.to_path_buf(),
            detail,
        };
        let word = |k: usize| -> Option<u32> {
            bytes
                .get(4 * k..4 * k + 4)
                .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")))
        };
        let magic = word(0).ok_or_else(|| truncated(format!("{} header bytes", bytes.len())))?;
        if magic != expected {
            return Err(Error::BadMagic {
                path: path.to_path_buf(),
                found: magic,
                expected,
            });
        }
        let ndims = (magic & 0xff) as usize;
        let dims = (1..=ndims)
            .map(|k| word(k).ok_or_else(|| truncated(format!("missing dimension {k} of {ndims}"))))
            .collect::<Result<Vec<u32>>>()?;
        Ok(IdxHeader { magic, dims })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.byte_len());
        out.extend_from_slice(&self.magic.to_be_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out
    }
}

/// Reads a whole IDX file, checking magic and payload length.
pub fn read_idx(path: &Path, expected_magic: u32) -> Result<(IdxHeader, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let header = IdxHeader::parse(&bytes, expected_magic, path)?;
    let body = &bytes[header.byte_len()..];
    let want = header.payload_len();
    if body.len() < want {
        return Err(Error::Truncated {
            path: path.to_path_buf(),
            detail: format!("header promises {want} payload bytes, file has {}", body.len()),
        });
    }
    let payload = body[..want].to_vec();
    Ok((header, payload))
}

/// Writes an IDX file (used to build fixtures).
pub fn write_idx(path: &Path, header: &IdxHeader, payload: &[u8]) -> Result<()> {
    let mut bytes = header.to_bytes();
    bytes.extend_from_slice(payload);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads an image/label pair. Pixels are scaled to `[0, 1]` by `/255`.
pub fn load_mnist_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let (img_header, pixels) = read_idx(images_path, IDX_IMAGES_MAGIC)?;
    let (lbl_header, raw_labels) = read_idx(labels_path, IDX_LABELS_MAGIC)?;
    let count = img_header.dims[0] as usize;
    let pixels_per_image = (img_header.dims[1] * img_header.dims[2]) as usize;
    let label_count = lbl_header.dims[0] as usize;
    if count != label_count {
        return Err(Error::CountMismatch {
            images: count,
            labels: label_count,
        });
    }
    let labels: Vec<usize> = raw_labels.iter().map(|&l| usize::from(l)).collect();
    let features = Mat::from_vec(
        count,
        pixels_per_image,
        pixels.iter().map(|&p| f64::from(p) / 255.0).collect(),
    )?;
    Dataset::new(features, Targets::Labels { labels, classes: 10 })
}

/// Loads the train or test split from a directory holding the standard files.
pub fn load_mnist_dir(dir: &Path, split: Split) -> Result<Dataset> {
    let (images, labels) = match split {
        Split::Train => (MNIST_FILES[0], MNIST_FILES[1]),
        Split::Test => (MNIST_FILES[2], MNIST_FILES[3]),
    };
    load_mnist_idx(&dir.join(images), &dir.join(labels))
}
