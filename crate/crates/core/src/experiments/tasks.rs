use super::{train, OptimizerKind, Precision, RunRecord, TrainConfig};
use crate::chebyshev::PolyKind;
use crate::data::{apply_fitted, fractal_grid, sample_function, Dataset, FractalParams, NormScheme, NormStats, TargetFn};
use crate::error::Result;
use crate::layers::InitMethod;
use crate::network::{ArchSpec, Sequential};
use crate::rng::Rng;

/// A trained model together with its training history.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub model: Sequential,
    pub record: RunRecord,
}

/// Fits `cfg.norm` on the training split, applies it to both splits, builds
/// the network from `cfg.arch` and trains it.
pub fn run_mnist(train_raw: &Dataset, test_raw: &Dataset, cfg: &TrainConfig) -> Result<Outcome> {
    cfg.validate()?;
    let stats = NormStats::fit(cfg.norm, &train_raw.features)?;
    let train_ds = apply_fitted(train_raw, &stats)?;
    let test_ds = apply_fitted(test_raw, &stats)?;
    let mut model = Sequential::build(&cfg.arch, cfg.init, &Rng::named(cfg.seed, "init"))?;
    let record = train(&mut model, &train_ds, &test_ds, cfg)?;
    Ok(Outcome { model, record })
}

/// One-dimensional regression on a synthetic target. Every step is a
/// full-batch update, so `steps` maps to epochs with `batch = samples`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxConfig {
    pub target: TargetFn,
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub test_samples: usize,
    pub widths: Vec<usize>,
    pub degree: usize,
    pub kind: PolyKind,
    pub layernorm: bool,
    pub steps: usize,
    pub lr: f64,
    pub init: InitMethod,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            target: TargetFn::SinPlusSq,
            lo: -2.0,
            hi: 2.0,
            samples: 2000,
            test_samples: 1000,
            widths: vec![1, 8, 1],
            degree: 4,
            kind: PolyKind::First,
            layernorm: false,
            steps: 2000,
            lr: 1e-2,
            init: InitMethod::Xavier,
            seed: 42,
            precision: Precision::F64,
        }
    }
}

impl ApproxConfig {
    pub fn arch(&self) -> ArchSpec {
        ArchSpec::new(self.widths.clone(), self.degree, self.kind, self.layernorm)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.steps,
            batch_size: self.samples.max(1),
            lr: self.lr,
            optimizer: OptimizerKind::Adam,
            seed: self.seed,
            init: self.init,
            norm: NormScheme::Tanh,
            arch: self.arch(),
            precision: self.precision,
        }
    }

    pub fn datasets(&self) -> Result<(Dataset, Dataset)> {
        let train_ds = sample_function(self.target, self.lo, self.hi, self.samples, &mut Rng::named(self.seed, "approx-train"))?;
        let test_ds = sample_function(
            self.target,
            self.lo,
            self.hi,
            self.test_samples,
            &mut Rng::named(self.seed, "approx-test"),
        )?;
        Ok((train_ds, test_ds))
    }
}

#[derive(Debug, Clone)]
pub struct ApproxOutcome {
    pub outcome: Outcome,
    pub test: Dataset,
}

/// Inputs are fed raw: the KAN layer's own `tanh` squashing is the only
/// normalization.
pub fn run_approx(cfg: &ApproxConfig) -> Result<ApproxOutcome> {
    let (train_ds, test_ds) = cfg.datasets()?;
    let tc = cfg.train_config();
    let mut model = Sequential::build(&tc.arch, cfg.init, &Rng::named(cfg.seed, "init"))?;
    let record = train(&mut model, &train_ds, &test_ds, &tc)?;
    Ok(ApproxOutcome {
        outcome: Outcome { model, record },
        test: test_ds,
    })
}

/// Regression of the noisy fractal surface; the grid is both the training
/// and the evaluation set. The default recipe is full-batch Adam run close to
/// convergence: with minibatches the final MSE moves by a few percent with
/// the shuffle order, far more than the noise variance `5·(α·b)²` the
/// clean/noisy comparison is meant to expose.
#[derive(Debug, Clone, PartialEq)]
pub struct FractalConfig {
    pub params: FractalParams,
    pub widths: Vec<usize>,
    pub degree: usize,
    pub kind: PolyKind,
    pub layernorm: bool,
    pub epochs: usize,
    /// `None` trains on the whole grid at once.
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub init: InitMethod,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for FractalConfig {
    fn default() -> Self {
        FractalConfig {
            params: FractalParams::default(),
            widths: vec![2, 64, 64, 1],
            degree: 3,
            kind: PolyKind::First,
            layernorm: true,
            epochs: 300,
            batch_size: None,
            lr: 1e-2,
            init: InitMethod::Xavier,
            seed: 42,
            precision: Precision::F64,
        }
    }
}

impl FractalConfig {
    pub fn arch(&self) -> ArchSpec {
        ArchSpec::new(self.widths.clone(), self.degree, self.kind, self.layernorm)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size.unwrap_or(self.params.grid * self.params.grid),
            lr: self.lr,
            optimizer: OptimizerKind::Adam,
            seed: self.seed,
            init: self.init,
            norm: NormScheme::Tanh,
            arch: self.arch(),
            precision: self.precision,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FractalOutcome {
    pub outcome: Outcome,
    pub grid: Dataset,
}

pub fn run_fractal(cfg: &FractalConfig) -> Result<FractalOutcome> {
    let grid = fractal_grid(&cfg.params)?;
    let tc = cfg.train_config();
    let mut model = Sequential::build(&tc.arch, cfg.init, &Rng::named(cfg.seed, "init"))?;
    let record = train(&mut model, &grid, &grid, &tc)?;
    Ok(FractalOutcome {
        outcome: Outcome { model, record },
        grid,
    })
}
