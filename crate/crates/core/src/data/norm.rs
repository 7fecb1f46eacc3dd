use std::fmt;
use std::str::FromStr;

use super::Dataset;
use crate::error::{Error, Result};
use crate::ndcore::Mat;

const STD_EPS: f64 = 1e-8;

/// Input preprocessing applied before the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NormScheme {
    /// `x ↦ tanh(x)`
    #[default]
    Tanh,
    /// Per-feature affine map of the train `[min, max]` onto `[-1, 1]`.
    MinMax,
    /// Per-feature `(x - mean) / (std + 1e-8)` with train statistics.
    Standardize,
}

impl NormScheme {
    pub const ALL: [NormScheme; 3] = [NormScheme::Tanh, NormScheme::MinMax, NormScheme::Standardize];

    pub fn as_str(self) -> &'static str {
        match self {
            NormScheme::Tanh => "tanh",
            NormScheme::MinMax => "minmax",
            NormScheme::Standardize => "standardize",
        }
    }
}

impl fmt::Display for NormScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NormScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(NormScheme::Tanh),
            "minmax" | "min-max" | "min_max" => Ok(NormScheme::MinMax),
            "standardize" | "standard" | "zscore" => Ok(NormScheme::Standardize),
            _ => Err(Error::InvalidArgument(format!(
                "unknown normalization '{s}' (expected tanh|minmax|standardize)"
            ))),
        }
    }
}

/// A normalization together with the statistics it was fitted on.
#[derive(Debug, Clone, PartialEq)]
pub enum NormStats {
    Tanh,
    MinMax { min: Vec<f64>, max: Vec<f64> },
    Standardize { mean: Vec<f64>, std: Vec<f64> },
}

impl NormStats {
    pub fn fit(scheme: NormScheme, x: &Mat) -> Result<Self> {
        if !x.all_finite() {
            return Err(Error::NonFinite("normalization input"));
        }
        let d = x.cols();
        Ok(match scheme {
            NormScheme::Tanh => NormStats::Tanh,
            NormScheme::MinMax => {
                let mut min = vec![f64::INFINITY; d];
                let mut max = vec![f64::NEG_INFINITY; d];
                for row in x.iter_rows() {
                    for k in 0..d {
                        min[k] = min[k].min(row[k]);
                        max[k] = max[k].max(row[k]);
                    }
                }
                NormStats::MinMax { min, max }
            }
            NormScheme::Standardize => {
                let n = x.rows().max(1) as f64;
                let mut mean = vec![0.0; d];
                for row in x.iter_rows() {
                    for k in 0..d {
                        mean[k] += row[k];
                    }
                }
                mean.iter_mut().for_each(|m| *m /= n);
                let mut var = vec![0.0; d];
                for row in x.iter_rows() {
                    for k in 0..d {
                        var[k] += (row[k] - mean[k]).powi(2);
                    }
                }
                let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
                NormStats::Standardize { mean, std }
            }
        })
    }

    pub fn scheme(&self) -> NormScheme {
        match self {
            NormStats::Tanh => NormScheme::Tanh,
            NormStats::MinMax { .. } => NormScheme::MinMax,
            NormStats::Standardize { .. } => NormScheme::Standardize,
        }
    }

    pub fn apply(&self, x: &Mat) -> Result<Mat> {
        let check = |len: usize| {
            if len != x.cols() {
                return Err(Error::shape("NormStats::apply", format!("{len} features"), format!("{}", x.cols())));
            }
            Ok(())
        };
        let mut out = x.clone();
        match self {
            NormStats::Tanh => out.as_mut_slice().iter_mut().for_each(|v| *v = v.tanh()),
            NormStats::MinMax { min, max } => {
                check(min.len())?;
                for b in 0..out.rows() {
                    for (k, v) in out.row_mut(b).iter_mut().enumerate() {
                        let span = max[k] - min[k];
                        *v = if span > 0.0 { 2.0 * (*v - min[k]) / span - 1.0 } else { 0.0 };
                    }
                }
            }
            NormStats::Standardize { mean, std } => {
                check(mean.len())?;
                for b in 0..out.rows() {
                    for (k, v) in out.row_mut(b).iter_mut().enumerate() {
                        *v = (*v - mean[k]) / (std[k] + STD_EPS);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Fits `scheme` on `ds` itself and applies it.
pub fn apply_norm(ds: &Dataset, scheme: NormScheme) -> Result<Dataset> {
    let stats = NormStats::fit(scheme, &ds.features)?;
    apply_fitted(ds, &stats)
}

/// Applies previously fitted statistics (e.g. train stats to a test split).
pub fn apply_fitted(ds: &Dataset, stats: &NormStats) -> Result<Dataset> {
    Ok(Dataset {
        features: stats.apply(&ds.features)?,
        targets: ds.targets.clone(),
        norm: Some(stats.clone()),
    })
}
