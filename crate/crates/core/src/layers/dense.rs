use crate::error::{Error, Result};
use crate::layers::InitMethod;
use crate::ndcore::{matmul, Mat};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// `max(0, z)`, with derivative 0 at `z = 0`.
    Relu,
    None,
}

#[derive(Debug, Clone)]
struct DenseCache {
    input: Mat,
    pre_activation: Mat,
}

/// Fully connected layer `y = act(x W + b)`, the MLP baseline.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    /// `[input_dim, output_dim]`
    weights: Mat,
    bias: Vec<f64>,
    activation: Activation,
    grad_weights: Mat,
    grad_bias: Vec<f64>,
    cache: Option<DenseCache>,
}

impl DenseLayer {
    pub fn new(input_dim: usize, output_dim: usize, activation: Activation) -> Self {
        DenseLayer {
            weights: Mat::zeros(input_dim, output_dim),
            bias: vec![0.0; output_dim],
            activation,
            grad_weights: Mat::zeros(input_dim, output_dim),
            grad_bias: vec![0.0; output_dim],
            cache: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn grad_weights(&self) -> &Mat {
        &self.grad_weights
    }

    pub fn grad_bias(&self) -> &[f64] {
        &self.grad_bias
    }

    pub fn set_weights(&mut self, weights: Mat, bias: Vec<f64>) -> Result<()> {
        weights.expect_shape("DenseLayer::set_weights", self.weights.shape())?;
        if bias.len() != self.bias.len() {
            return Err(Error::shape(
                "DenseLayer::set_weights",
                format!("bias of length {}", self.bias.len()),
                format!("{}", bias.len()),
            ));
        }
        self.weights = weights;
        self.bias = bias;
        Ok(())
    }

    /// Samples `W` with fan-in/fan-out equal to the layer dims; bias is zero.
    pub fn init_weights(&mut self, method: InitMethod, rng: &mut Rng) -> Result<()> {
        let (i, o) = self.weights.shape();
        let w = method.sample(i, o, i, o, rng)?;
        self.weights = Mat::from_vec(i, o, w)?;
        self.bias.iter_mut().for_each(|b| *b = 0.0);
        Ok(())
    }

    fn pre_activation(&self, x: &Mat) -> Result<Mat> {
        if x.cols() != self.input_dim() {
            return Err(Error::shape(
                "dense_forward",
                format!("{} input columns", self.input_dim()),
                format!("{}", x.cols()),
            ));
        }
        let mut z = matmul(x, &self.weights)?;
        for b in 0..z.rows() {
            for (v, bias) in z.row_mut(b).iter_mut().zip(&self.bias) {
                *v += bias;
            }
        }
        Ok(z)
    }

    fn activate(&self, z: &Mat) -> Mat {
        match self.activation {
            Activation::Relu => z.map(|v| v.max(0.0)),
            Activation::None => z.clone(),
        }
    }

    pub fn forward(&mut self, x: &Mat) -> Result<Mat> {
        let z = self.pre_activation(x)?;
        let y = self.activate(&z);
        self.cache = Some(DenseCache {
            input: x.clone(),
            pre_activation: z,
        });
        Ok(y)
    }

    pub fn infer(&self, x: &Mat) -> Result<Mat> {
        Ok(self.activate(&self.pre_activation(x)?))
    }

    pub fn backward(&mut self, grad_out: &Mat) -> Result<Mat> {
        let cache = self
            .cache
            .as_ref()
            .ok_or(Error::BackwardBeforeForward("DenseLayer"))?;
        grad_out.expect_shape("dense_backward", cache.pre_activation.shape())?;
        let dz = match self.activation {
            Activation::Relu => grad_out.zip_map(&cache.pre_activation, |g, z| if z > 0.0 { g } else { 0.0 })?,
            Activation::None => grad_out.clone(),
        };
        self.grad_weights = matmul(&cache.input.transpose(), &dz)?;
        self.grad_bias.iter_mut().for_each(|g| *g = 0.0);
        for row in dz.iter_rows() {
            for (g, v) in self.grad_bias.iter_mut().zip(row) {
                *g += v;
            }
        }
        matmul(&dz, &self.weights.transpose())
    }

    pub(crate) fn param_groups(&mut self) -> [(&mut [f64], &[f64]); 2] {
        [
            (self.weights.as_mut_slice(), self.grad_weights.as_slice()),
            (&mut self.bias[..], &self.grad_bias[..]),
        ]
    }

    pub(crate) fn params(&self) -> [&[f64]; 2] {
        [self.weights.as_slice(), &self.bias]
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }
}
