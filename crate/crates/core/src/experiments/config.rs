use std::fmt;
use std::str::FromStr;

use crate::chebyshev::PolyKind;
use crate::data::NormScheme;
use crate::error::{Error, Result};
use crate::layers::InitMethod;
use crate::network::ArchSpec;
use crate::optim::{Adam, Optimizer, Sgd, SgdConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Adam,
    Sgd { momentum: f64 },
}

impl OptimizerKind {
    pub fn build(self, lr: f64) -> Result<Box<dyn Optimizer>> {
        Ok(match self {
            OptimizerKind::Adam => Box::new(Adam::new(lr)),
            OptimizerKind::Sgd { momentum } => Box::new(Sgd::new(SgdConfig { lr, momentum })?),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd { .. } => "sgd",
        }
    }
}

/// Numeric precision of a run. `F32` keeps the f64 kernels but rounds
/// inputs and parameters to the nearest `f32` after every update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F64,
    F32,
}

impl Precision {
    #[inline]
    pub fn round(self, v: f64) -> f64 {
        match self {
            Precision::F64 => v,
            Precision::F32 => v as f32 as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classify,
    Regress,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classify => "classify",
            Task::Regress => "regress",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classify" => Ok(Task::Classify),
            "regress" => Ok(Task::Regress),
            _ => Err(Error::InvalidArgument(format!("unknown task '{s}'"))),
        }
    }
}

/// Everything needed to reproduce one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub init: InitMethod,
    pub norm: NormScheme,
    pub arch: ArchSpec,
    pub precision: Precision,
}

impl Default for TrainConfig {
    /// MNIST defaults: degree 3, Xavier, tanh inputs, Adam(1e-3), batch 64, 10 epochs.
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 64,
            lr: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 42,
            init: InitMethod::Xavier,
            norm: NormScheme::Tanh,
            arch: ArchSpec::mnist(3, PolyKind::First),
            precision: Precision::F64,
        }
    }
}

impl TrainConfig {
    pub fn degree(&self) -> usize {
        self.arch.degree
    }

    pub fn kind(&self) -> PolyKind {
        self.arch.kind
    }

    pub fn validate(&self) -> Result<()> {
        self.arch.validate()?;
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::InvalidArgument(format!("learning rate must be >= 0, got {}", self.lr)));
        }
        if let OptimizerKind::Sgd { momentum } = self.optimizer {
            SgdConfig { lr: self.lr, momentum }.validate()?;
        }
        Ok(())
    }
}
