use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng::{Dist, Rng};

/// Weight initialization schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InitMethod {
    /// `U(±√(6/(fan_in + fan_out)))`
    #[default]
    Xavier,
    /// `N(0, 2/fan_in)`
    He,
    /// `N(0, 1)`
    Normal,
    /// `U(±1/fan_in)`
    Uniform,
    /// `N(0, 1/fan_in)`
    LeCun,
    /// Orthonormal columns (or rows, when wide) from a Gaussian matrix.
    Orthogonal,
}

impl InitMethod {
    pub const ALL: [InitMethod; 6] = [
        InitMethod::Xavier,
        InitMethod::He,
        InitMethod::Normal,
        InitMethod::Uniform,
        InitMethod::LeCun,
        InitMethod::Orthogonal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InitMethod::Xavier => "xavier",
            InitMethod::He => "he",
            InitMethod::Normal => "normal",
            InitMethod::Uniform => "uniform",
            InitMethod::LeCun => "lecun",
            InitMethod::Orthogonal => "orthogonal",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::as_str).join("|")
    }

    fn distribution(self, fan_in: usize, fan_out: usize) -> Option<Dist> {
        let fan_in = fan_in.max(1) as f64;
        let fan_out = fan_out.max(1) as f64;
        match self {
            InitMethod::Xavier => {
                let a = (6.0 / (fan_in + fan_out)).sqrt();
                Some(Dist::Uniform { lo: -a, hi: a })
            }
            InitMethod::He => Some(Dist::Normal {
                mean: 0.0,
                std: (2.0 / fan_in).sqrt(),
            }),
            InitMethod::Normal => Some(Dist::Normal { mean: 0.0, std: 1.0 }),
            InitMethod::Uniform => Some(Dist::Uniform {
                lo: -1.0 / fan_in,
                hi: 1.0 / fan_in,
            }),
            InitMethod::LeCun => Some(Dist::Normal {
                mean: 0.0,
                std: (1.0 / fan_in).sqrt(),
            }),
            InitMethod::Orthogonal => None,
        }
    }

    /// Draws a row-major `rows × cols` weight matrix.
    pub fn sample(
        self,
        rows: usize,
        cols: usize,
        fan_in: usize,
        fan_out: usize,
        rng: &mut Rng,
    ) -> Result<Vec<f64>> {
        let mut w = vec![0.0; rows * cols];
        match self.distribution(fan_in, fan_out) {
            Some(dist) => rng.fill(&mut w, dist)?,
            None => {
                rng.fill(&mut w, Dist::Normal { mean: 0.0, std: 1.0 })?;
                orthonormalize(&mut w, rows, cols);
            }
        }
        Ok(w)
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == lower)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown init method '{s}' (expected one of {})",
                    Self::valid_names()
                ))
            })
    }
}

/// In-place modified Gram–Schmidt (two passes) on the columns of a tall
/// matrix, or on the rows of a wide one.
fn orthonormalize(w: &mut [f64], rows: usize, cols: usize) {
    let tall = rows >= cols;
    let (count, len) = if tall { (cols, rows) } else { (rows, cols) };
    let idx = |v: usize, e: usize| if tall { e * cols + v } else { v * cols + e };

    for v in 0..count {
        for _pass in 0..2 {
            for u in 0..v {
                let dot: f64 = (0..len).map(|e| w[idx(u, e)] * w[idx(v, e)]).sum();
                for e in 0..len {
                    w[idx(v, e)] -= dot * w[idx(u, e)];
                }
            }
        }
        let norm = (0..len).map(|e| w[idx(v, e)].powi(2)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in 0..len {
                w[idx(v, e)] /= norm;
            }
        }
    }
}
