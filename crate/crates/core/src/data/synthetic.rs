use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use super::{Dataset, Targets};
use crate::error::{Error, Result};
use crate::ndcore::Mat;
use crate::rng::Rng;

/// One-dimensional regression targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetFn {
    /// `sin(x) + x²`
    #[default]
    SinPlusSq,
    /// `x³ - x`
    Polynomial,
    /// `0` for `x < 0`, `1` for `x >= 0`
    Step,
}

impl TargetFn {
    pub const ALL: [TargetFn; 3] = [TargetFn::SinPlusSq, TargetFn::Polynomial, TargetFn::Step];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            TargetFn::SinPlusSq => x.sin() + x * x,
            TargetFn::Polynomial => x * x * x - x,
            TargetFn::Step => {
                if x < 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TargetFn::SinPlusSq => "sin_plus_sq",
            TargetFn::Polynomial => "polynomial",
            TargetFn::Step => "step",
        }
    }
}

impl fmt::Display for TargetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetFn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown target '{s}' (expected sin_plus_sq|polynomial|step)"
                ))
            })
    }
}

/// `n` points with `x ~ U[lo, hi)` and `y = f(x)`.
pub fn sample_function(target: TargetFn, lo: f64, hi: f64, n: usize, rng: &mut Rng) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
        return Err(Error::InvalidArgument(format!("empty range [{lo}, {hi}]")));
    }
    let xs: Vec<f64> = (0..n).map(|_| rng.uniform(lo, hi)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| target.eval(x)).collect();
    Dataset::new(Mat::from_vec(n, 1, xs)?, Targets::Values(Mat::from_vec(n, 1, ys)?))
}

/// Smooth base surface `1/√(x² + y² + 1) + sin(x² + y²)`.
pub fn fractal_seed(x: f64, y: f64) -> f64 {
    let r2 = x * x + y * y;
    1.0 / (r2 + 1.0).sqrt() + r2.sin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FractalParams {
    /// Noise amplitude factor.
    pub alpha: f64,
    /// Second noise amplitude factor.
    pub b: f64,
    /// Number of noise layers added.
    pub iters: usize,
    /// Points per axis.
    pub grid: usize,
    /// Domain is `[-extent, extent]²`.
    pub extent: f64,
    pub seed: u64,
}

impl Default for FractalParams {
    fn default() -> Self {
        FractalParams {
            alpha: 0.7,
            b: 0.001,
            iters: 5,
            grid: 64,
            extent: 2.0,
            seed: 42,
        }
    }
}

impl FractalParams {
    pub fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(Error::InvalidArgument(format!("grid must be >= 2, got {}", self.grid)));
        }
        if !(self.extent > 0.0 && self.extent.is_finite()) {
            return Err(Error::InvalidArgument(format!("extent must be > 0, got {}", self.extent)));
        }
        if !(self.alpha.is_finite() && self.b.is_finite()) {
            return Err(Error::NonFinite("fractal noise parameters"));
        }
        Ok(())
    }

    pub fn axis(&self) -> Vec<f64> {
        let step = 2.0 * self.extent / (self.grid - 1) as f64;
        (0..self.grid).map(|k| -self.extent + k as f64 * step).collect()
    }
}

/// Grid of `(x, y)` features (x-major order) with targets
/// `z = f(x, y) + Σ_{i=1..iters} α·b·g_i`, where each `g_i` is an independent
/// standard-normal field drawn from stream `i` of the `"fractal-noise"` generator.
pub fn fractal_grid(params: &FractalParams) -> Result<Dataset> {
    params.validate()?;
    let axis = params.axis();
    let n = params.grid * params.grid;
    let mut features = Mat::zeros(n, 2);
    let mut z = Mat::zeros(n, 1);
    for (a, &x) in axis.iter().enumerate() {
        for (c, &y) in axis.iter().enumerate() {
            let p = a * params.grid + c;
            features[(p, 0)] = x;
            features[(p, 1)] = y;
            z[(p, 0)] = fractal_seed(x, y);
        }
    }
    let amplitude = params.alpha * params.b;
    let noise = Rng::named(params.seed, "fractal-noise");
    for i in 1..=params.iters {
        let mut field = noise.substream_index(i as u64);
        for v in z.as_mut_slice() {
            *v += amplitude * field.standard_normal();
        }
    }
    Dataset::new(features, Targets::Values(z))
}

/// Writes `x y z` lines for external plotting.
pub fn write_grid_dump<W: Write>(mut w: W, features: &Mat, z: &[f64]) -> io::Result<()> {
    for (row, v) in features.iter_rows().zip(z) {
        writeln!(w, "{} {} {}", row[0], row[1], v)?;
    }
    w.flush()
}
