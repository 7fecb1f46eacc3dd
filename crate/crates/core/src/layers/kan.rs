//! Chebyshev KAN layer.
//!
//! For an input batch `x ∈ ℝ^{B×I}` the layer squashes every entry with
//! `tanh`, expands it in the Chebyshev basis up to `degree`, and contracts
//! against the coefficient tensor:
//!
//! ```text
//! x̃ = tanh(x)
//! T[b][i][j] = P_j(x̃[b][i])
//! y[b][o] = Σ_i Σ_j T[b][i][j] · C[i][o][j]
//! ```
//!
//! Backward (cotangent `g = ∂L/∂y`):
//!
//! ```text
//! ∂L/∂C[i][o][j] = Σ_b g[b][o] · T[b][i][j]
//! ∂L/∂x[b][i]    = (1 - x̃²) · Σ_j P'_j(x̃) · Σ_o g[b][o] · C[i][o][j]
//! ```

use crate::chebyshev::{eval_basis_batch, fill_basis_derivative, BasisTensor, PolyKind};
use crate::error::{Error, Result};
use crate::layers::InitMethod;
use crate::ndcore::{Mat, Ten3};
use crate::rng::Rng;

#[derive(Debug, Clone)]
struct KanCache {
    #[allow(dead_code)]
    input: Mat,
    squashed: Mat,
    basis: BasisTensor,
}

#[derive(Debug, Clone)]
pub struct ChebyKanLayer {
    input_dim: usize,
    output_dim: usize,
    degree: usize,
    kind: PolyKind,
    /// `[input_dim, output_dim, degree + 1]`
    coeffs: Ten3,
    grad_coeffs: Ten3,
    cache: Option<KanCache>,
}

impl ChebyKanLayer {
    /// New layer with all coefficients zero.
    pub fn new(input_dim: usize, output_dim: usize, degree: usize, kind: PolyKind) -> Self {
        ChebyKanLayer {
            input_dim,
            output_dim,
            degree,
            kind,
            coeffs: Ten3::zeros(input_dim, output_dim, degree + 1),
            grad_coeffs: Ten3::zeros(input_dim, output_dim, degree + 1),
            cache: None,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn kind(&self) -> PolyKind {
        self.kind
    }

    pub fn param_count(&self) -> usize {
        self.input_dim * self.output_dim * (self.degree + 1)
    }

    pub fn coeffs(&self) -> &Ten3 {
        &self.coeffs
    }

    pub fn grad_coeffs(&self) -> &Ten3 {
        &self.grad_coeffs
    }

    pub fn set_coeffs(&mut self, coeffs: Ten3) -> Result<()> {
        let want = [self.input_dim, self.output_dim, self.degree + 1];
        if coeffs.dims() != want {
            return Err(Error::shape(
                "ChebyKanLayer::set_coeffs",
                format!("{want:?}"),
                format!("{:?}", coeffs.dims()),
            ));
        }
        if !coeffs.all_finite() {
            return Err(Error::NonFinite("ChebyKanLayer coefficients"));
        }
        self.coeffs = coeffs;
        Ok(())
    }

    /// Effective fan-in/fan-out of the coefficient tensor: every output
    /// sums `input_dim × (degree + 1)` weighted basis terms.
    pub fn fans(&self) -> (usize, usize) {
        (
            self.input_dim * (self.degree + 1),
            self.output_dim * (self.degree + 1),
        )
    }

    /// Fills the coefficients. Sampled as an `(input_dim·(degree+1)) × output_dim`
    /// matrix `M` and stored as `C[i][o][j] = M[i·(degree+1) + j][o]`.
    pub fn init_coeffs(&mut self, method: InitMethod, rng: &mut Rng) -> Result<()> {
        let basis = self.degree + 1;
        let rows = self.input_dim * basis;
        let (fan_in, fan_out) = self.fans();
        let m = method.sample(rows, self.output_dim, fan_in, fan_out, rng)?;
        for i in 0..self.input_dim {
            for o in 0..self.output_dim {
                for j in 0..basis {
                    self.coeffs[(i, o, j)] = m[(i * basis + j) * self.output_dim + o];
                }
            }
        }
        Ok(())
    }

    fn check_input(&self, x: &Mat) -> Result<()> {
        if x.cols() != self.input_dim {
            return Err(Error::shape(
                "kan_forward",
                format!("{} input columns", self.input_dim),
                format!("{}", x.cols()),
            ));
        }
        if !x.all_finite() {
            return Err(Error::NonFinite("kan_forward input"));
        }
        Ok(())
    }

    fn contract(&self, basis: &BasisTensor) -> Mat {
        let [batch, input_dim, _] = basis.values.dims();
        let mut y = Mat::zeros(batch, self.output_dim);
        for b in 0..batch {
            let y_row = y.row_mut(b);
            for i in 0..input_dim {
                let t = basis.values.fiber(b, i);
                for (o, y_bo) in y_row.iter_mut().enumerate() {
                    let c = self.coeffs.fiber(i, o);
                    for (t_j, c_j) in t.iter().zip(c) {
                        *y_bo += t_j * c_j;
                    }
                }
            }
        }
        y
    }

    fn expand(&self, x: &Mat) -> Result<(Mat, BasisTensor)> {
        self.check_input(x)?;
        let squashed = x.map(f64::tanh);
        let basis = eval_basis_batch(&squashed, self.degree, self.kind)?;
        Ok((squashed, basis))
    }

    /// Forward pass that keeps activations for [`backward`](Self::backward).
    pub fn forward(&mut self, x: &Mat) -> Result<Mat> {
        let (squashed, basis) = self.expand(x)?;
        let y = self.contract(&basis);
        self.cache = Some(KanCache {
            input: x.clone(),
            squashed,
            basis,
        });
        Ok(y)
    }

    /// Forward pass without touching the cache.
    pub fn infer(&self, x: &Mat) -> Result<Mat> {
        let (_, basis) = self.expand(x)?;
        Ok(self.contract(&basis))
    }

    /// Writes fresh coefficient gradients and returns `∂L/∂x`.
    pub fn backward(&mut self, grad_out: &Mat) -> Result<Mat> {
        Ok(self
            .backward_impl(grad_out, true)?
            .expect("input gradient requested"))
    }

    /// Like [`backward`](Self::backward) but skips the input gradient.
    pub fn backward_params(&mut self, grad_out: &Mat) -> Result<()> {
        self.backward_impl(grad_out, false).map(|_| ())
    }

    fn backward_impl(&mut self, grad_out: &Mat, want_input_grad: bool) -> Result<Option<Mat>> {
        let cache = self
            .cache
            .as_ref()
            .ok_or(Error::BackwardBeforeForward("ChebyKanLayer"))?;
        let batch = cache.squashed.rows();
        grad_out.expect_shape("kan_backward", (batch, self.output_dim))?;

        let basis_len = self.degree + 1;
        let grads = &mut self.grad_coeffs;
        grads.fill(0.0);
        let mut grad_in = want_input_grad.then(|| Mat::zeros(batch, self.input_dim));
        let mut weighted = vec![0.0; basis_len];
        let mut deriv = vec![0.0; basis_len];

        for b in 0..batch {
            let g_row = grad_out.row(b);
            for i in 0..self.input_dim {
                let t = cache.basis.values.fiber(b, i);
                weighted.iter_mut().for_each(|w| *w = 0.0);
                for (o, &g) in g_row.iter().enumerate() {
                    for (gc, &t_j) in grads.fiber_mut(i, o).iter_mut().zip(t) {
                        *gc += g * t_j;
                    }
                    if want_input_grad {
                        for (w, &c) in weighted.iter_mut().zip(self.coeffs.fiber(i, o)) {
                            *w += g * c;
                        }
                    }
                }
                if let Some(gi) = grad_in.as_mut() {
                    let xt = cache.squashed[(b, i)];
                    fill_basis_derivative(xt, self.kind, &mut deriv);
                    let s: f64 = weighted.iter().zip(&deriv).map(|(w, d)| w * d).sum();
                    gi[(b, i)] = s * (1.0 - xt * xt);
                }
            }
        }
        Ok(grad_in)
    }

    pub(crate) fn param_groups(&mut self) -> [(&mut [f64], &[f64]); 1] {
        [(self.coeffs.as_mut_slice(), self.grad_coeffs.as_slice())]
    }

    pub(crate) fn params(&self) -> [&[f64]; 1] {
        [self.coeffs.as_slice()]
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }
}
