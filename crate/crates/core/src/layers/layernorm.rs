use crate::error::{Error, Result};
use crate::ndcore::Mat;

#[derive(Debug, Clone)]
struct LnCache {
    normalized: Mat,
    inv_std: Vec<f64>,
}

/// Per-row normalization with learnable scale and shift.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    dim: usize,
    eps: f64,
    gamma: Vec<f64>,
    beta: Vec<f64>,
    grad_gamma: Vec<f64>,
    grad_beta: Vec<f64>,
    cache: Option<LnCache>,
}

impl LayerNorm {
    pub const DEFAULT_EPS: f64 = 1e-5;

    pub fn new(dim: usize) -> Self {
        LayerNorm {
            dim,
            eps: Self::DEFAULT_EPS,
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            grad_gamma: vec![0.0; dim],
            grad_beta: vec![0.0; dim],
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn param_count(&self) -> usize {
        2 * self.dim
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn gamma_mut(&mut self) -> &mut [f64] {
        &mut self.gamma
    }

    pub fn beta_mut(&mut self) -> &mut [f64] {
        &mut self.beta
    }

    pub fn grad_gamma(&self) -> &[f64] {
        &self.grad_gamma
    }

    pub fn grad_beta(&self) -> &[f64] {
        &self.grad_beta
    }

    fn normalize(&self, x: &Mat) -> Result<(Mat, Vec<f64>)> {
        if x.cols() != self.dim {
            return Err(Error::shape(
                "layernorm_forward",
                format!("{} columns", self.dim),
                format!("{}", x.cols()),
            ));
        }
        let n = self.dim as f64;
        let mut normalized = Mat::zeros(x.rows(), self.dim);
        let mut inv_std = Vec::with_capacity(x.rows());
        for (b, row) in x.iter_rows().enumerate() {
            let mean = row.iter().sum::<f64>() / n;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            let r = 1.0 / (var + self.eps).sqrt();
            for (out, &v) in normalized.row_mut(b).iter_mut().zip(row) {
                *out = (v - mean) * r;
            }
            inv_std.push(r);
        }
        Ok((normalized, inv_std))
    }

    fn affine(&self, normalized: &Mat) -> Mat {
        let mut y = normalized.clone();
        for b in 0..y.rows() {
            for ((v, g), s) in y.row_mut(b).iter_mut().zip(&self.gamma).zip(&self.beta) {
                *v = *v * g + s;
            }
        }
        y
    }

    pub fn forward(&mut self, x: &Mat) -> Result<Mat> {
        let (normalized, inv_std) = self.normalize(x)?;
        let y = self.affine(&normalized);
        self.cache = Some(LnCache {
            normalized,
            inv_std,
        });
        Ok(y)
    }

    pub fn infer(&self, x: &Mat) -> Result<Mat> {
        let (normalized, _) = self.normalize(x)?;
        Ok(self.affine(&normalized))
    }

    pub fn backward(&mut self, grad_out: &Mat) -> Result<Mat> {
        let cache = self
            .cache
            .as_ref()
            .ok_or(Error::BackwardBeforeForward("LayerNorm"))?;
        grad_out.expect_shape("layernorm_backward", cache.normalized.shape())?;
        let n = self.dim as f64;
        self.grad_gamma.iter_mut().for_each(|g| *g = 0.0);
        self.grad_beta.iter_mut().for_each(|g| *g = 0.0);
        let mut grad_in = Mat::zeros(grad_out.rows(), self.dim);
        let mut dxhat = vec![0.0; self.dim];
        for b in 0..grad_out.rows() {
            let g = grad_out.row(b);
            let xhat = cache.normalized.row(b);
            for k in 0..self.dim {
                self.grad_gamma[k] += g[k] * xhat[k];
                self.grad_beta[k] += g[k];
                dxhat[k] = g[k] * self.gamma[k];
            }
            let sum_d: f64 = dxhat.iter().sum();
            let sum_dx: f64 = dxhat.iter().zip(xhat).map(|(d, x)| d * x).sum();
            let r = cache.inv_std[b];
            for (k, out) in grad_in.row_mut(b).iter_mut().enumerate() {
                *out = r * (dxhat[k] - (sum_d + xhat[k] * sum_dx) / n);
            }
        }
        Ok(grad_in)
    }

    pub(crate) fn param_groups(&mut self) -> [(&mut [f64], &[f64]); 2] {
        [
            (&mut self.gamma[..], &self.grad_gamma[..]),
            (&mut self.beta[..], &self.grad_beta[..]),
        ]
    }

    pub(crate) fn params(&self) -> [&[f64]; 2] {
        [&self.gamma, &self.beta]
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }
}
