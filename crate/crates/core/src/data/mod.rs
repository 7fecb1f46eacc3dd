//! Datasets: MNIST IDX ingestion, input normalization, synthetic targets.

mod mnist;
mod norm;
mod synthetic;

pub use mnist::{
    load_mnist_dir, load_mnist_idx, read_idx, write_idx, IdxHeader, Split, IDX_IMAGES_MAGIC,
    IDX_LABELS_MAGIC, MNIST_FILES,
};
pub use norm::{apply_fitted, apply_norm, NormScheme, NormStats};
pub use synthetic::{fractal_grid, fractal_seed, sample_function, write_grid_dump, FractalParams, TargetFn};

use crate::error::{Error, Result};
use crate::ndcore::Mat;

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    /// Class ids in `0..classes`.
    Labels { labels: Vec<usize>, classes: usize },
    /// Regression targets, one row per sample.
    Values(Mat),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Labels { labels, .. } => labels.len(),
            Targets::Values(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, indices: &[usize]) -> Targets {
        match self {
            Targets::Labels { labels, classes } => Targets::Labels {
                labels: indices.iter().map(|&i| labels[i]).collect(),
                classes: *classes,
            },
            Targets::Values(m) => Targets::Values(m.select_rows(indices)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Mat,
    pub targets: Targets,
    /// Normalization applied to `features`, if any.
    pub norm: Option<NormStats>,
}

impl Dataset {
    pub fn new(features: Mat, targets: Targets) -> Result<Self> {
        if features.rows() != targets.len() {
            return Err(Error::shape(
                "Dataset::new",
                format!("{} targets", features.rows()),
                format!("{}", targets.len()),
            ));
        }
        if let Targets::Labels { labels, classes } = &targets {
            if let Some(&label) = labels.iter().find(|&&l| l >= *classes) {
                return Err(Error::LabelOutOfRange {
                    label,
                    classes: *classes,
                });
            }
        }
        Ok(Dataset {
            features,
            targets,
            norm: None,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            targets: self.targets.select(indices),
            norm: self.norm.clone(),
        }
    }

    /// The first `n` samples (all of them if `n >= len`).
    pub fn head(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.select(&idx)
    }
}
