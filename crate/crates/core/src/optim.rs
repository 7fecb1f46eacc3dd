//! Loss functions and first-order optimizers.

use crate::error::{Error, Result};
use crate::ndcore::Mat;
use crate::network::Sequential;

/// Mean squared error over every entry, and its gradient `2(p - t)/N`.
pub fn mse_loss(pred: &Mat, target: &Mat) -> Result<(f64, Mat)> {
    target.expect_shape("mse_loss", pred.shape())?;
    let n = (pred.rows() * pred.cols()).max(1) as f64;
    let diff = pred.sub(target)?;
    let loss = diff.as_slice().iter().map(|d| d * d).sum::<f64>() / n;
    Ok((loss, diff.scale(2.0 / n)))
}

/// Mean softmax cross-entropy over the batch, and `(softmax - onehot)/batch`.
pub fn softmax_cross_entropy(logits: &Mat, labels: &[usize]) -> Result<(f64, Mat)> {
    let (batch, classes) = logits.shape();
    if labels.len() != batch {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("{batch} labels"),
            format!("{}", labels.len()),
        ));
    }
    let scale = 1.0 / batch.max(1) as f64;
    let mut grad = Mat::zeros(batch, classes);
    let mut total = 0.0;
    for (b, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::LabelOutOfRange { label, classes });
        }
        let z = logits.row(b);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let g = grad.row_mut(b);
        let mut sum = 0.0;
        for (gk, &zk) in g.iter_mut().zip(z) {
            *gk = (zk - max).exp();
            sum += *gk;
        }
        total += sum.ln() + max - z[label];
        for gk in g.iter_mut() {
            *gk *= scale / sum;
        }
        g[label] -= scale;
    }
    Ok((total * scale, grad))
}

/// Anything that can update parameter groups from their gradients.
pub trait Optimizer {
    /// Called once before the groups of one step are updated.
    fn begin_step(&mut self);

    fn update(&mut self, group: usize, params: &mut [f64], grads: &[f64]) -> Result<()>;

    /// One step over every parameter group of `model`.
    fn step(&mut self, model: &mut Sequential) -> Result<()> {
        self.begin_step();
        model.for_each_param_group(|g, p, grad| self.update(g, p, grad))
    }
}

fn check_group(op: &'static str, buffers: &mut Vec<Vec<f64>>, group: usize, params: &[f64], grads: &[f64]) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::shape(op, format!("{} gradients", params.len()), format!("{}", grads.len())));
    }
    if buffers.len() <= group {
        buffers.resize_with(group + 1, Vec::new);
    }
    let buf = &mut buffers[group];
    if buf.is_empty() {
        buf.resize(params.len(), 0.0);
    } else if buf.len() != params.len() {
        return Err(Error::shape(
            op,
            format!("group {group} with {} parameters", buf.len()),
            format!("{}", params.len()),
        ));
    }
    Ok(())
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Single-group step.
    pub fn adam_step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.begin_step();
        self.update(0, params, grads)
    }
}

impl Optimizer for Adam {
    fn begin_step(&mut self) {
        self.t += 1;
    }

    fn update(&mut self, group: usize, params: &mut [f64], grads: &[f64]) -> Result<()> {
        check_group("adam_step", &mut self.m, group, params, grads)?;
        check_group("adam_step", &mut self.v, group, params, grads)?;
        let t = self.t.max(1) as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (m, v) = (&mut self.m[group], &mut self.v[group]);
        for k in 0..params.len() {
            let g = grads[k];
            m[k] = self.beta1 * m[k] + (1.0 - self.beta1) * g;
            v[k] = self.beta2 * v[k] + (1.0 - self.beta2) * g * g;
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            params[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    pub lr: f64,
    pub momentum: f64,
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument(format!("sgd lr must be >= 0, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidArgument(format!(
                "sgd momentum must be in [0, 1), got {}",
                self.momentum
            )));
        }
        Ok(())
    }
}

/// SGD with heavy-ball momentum: `v ← μv + g`, `p ← p - lr·v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub config: SgdConfig,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(config: SgdConfig) -> Result<Self> {
        config.validate()?;
        Ok(Sgd {
            config,
            velocity: Vec::new(),
        })
    }

    pub fn velocity(&self, group: usize) -> Option<&[f64]> {
        self.velocity.get(group).map(Vec::as_slice)
    }

    pub fn sgd_step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.update(0, params, grads)
    }
}

impl Optimizer for Sgd {
    fn begin_step(&mut self) {}

    fn update(&mut self, group: usize, params: &mut [f64], grads: &[f64]) -> Result<()> {
        check_group("sgd_step", &mut self.velocity, group, params, grads)?;
        let SgdConfig { lr, momentum } = self.config;
        for ((p, v), g) in params.iter_mut().zip(&mut self.velocity[group]).zip(grads) {
            *v = momentum * *v + g;
            *p -= lr * *v;
        }
        Ok(())
    }
}
