//! Chebyshev polynomials of the first and second kind.
//!
//! Everything is evaluated by the three-term recurrence
//! `P_{k+1}(x) = 2x P_k(x) - P_{k-1}(x)`, which is valid on all of ℝ, so
//! inputs outside `[-1, 1]` are fine (no `arccos`).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::ndcore::{Mat, Ten3};

/// Which Chebyshev family to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PolyKind {
    /// `T_n`, seeded with `T_0 = 1`, `T_1 = x`.
    #[default]
    First,
    /// `U_n`, seeded with `U_0 = 1`, `U_1 = 2x`.
    Second,
}

impl PolyKind {
    pub const ALL: [PolyKind; 2] = [PolyKind::First, PolyKind::Second];

    pub fn as_str(self) -> &'static str {
        match self {
            PolyKind::First => "first",
            PolyKind::Second => "second",
        }
    }

    /// Leading factor of the degree-one polynomial: `T_1 = x`, `U_1 = 2x`.
    fn linear_factor(self) -> f64 {
        match self {
            PolyKind::First => 1.0,
            PolyKind::Second => 2.0,
        }
    }
}

impl fmt::Display for PolyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "first" | "t" | "1" => Ok(PolyKind::First),
            "second" | "u" | "2" => Ok(PolyKind::Second),
            _ => Err(Error::InvalidArgument(format!(
                "unknown polynomial kind '{s}' (expected first|second)"
            ))),
        }
    }
}

/// Writes `P_0(x) ..= P_{out.len()-1}(x)` into `out`.
#[inline]
pub fn fill_basis(x: f64, kind: PolyKind, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 1.0;
    if n == 1 {
        return;
    }
    out[1] = kind.linear_factor() * x;
    let two_x = 2.0 * x;
    for k in 2..n {
        out[k] = two_x * out[k - 1] - out[k - 2];
    }
}

/// Writes `P'_0(x) ..= P'_{out.len()-1}(x)` into `out`.
///
/// First kind uses `T'_k = k U_{k-1}`. Second kind uses the differentiated
/// recurrence `U'_k = 2 U_{k-1} + 2x U'_{k-1} - U'_{k-2}` with `U'_0 = 0`,
/// `U'_1 = 2`, which has no singularity at `x = ±1`.
#[inline]
pub fn fill_basis_derivative(x: f64, kind: PolyKind, out: &mut [f64]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = 0.0;
    match kind {
        PolyKind::First => {
            // running U_{k-1}, U_{k-2}
            let (mut u_prev, mut u_prev2) = (1.0, 0.0);
            for (k, slot) in out.iter_mut().enumerate().skip(1) {
                *slot = k as f64 * u_prev;
                let u_next = 2.0 * x * u_prev - u_prev2;
                u_prev2 = u_prev;
                u_prev = u_next;
            }
        }
        PolyKind::Second => {
            if n == 1 {
                return;
            }
            out[1] = 2.0;
            let (mut u_km1, mut u_km2) = (2.0 * x, 1.0);
            for k in 2..n {
                out[k] = 2.0 * u_km1 + 2.0 * x * out[k - 1] - out[k - 2];
                let u_k = 2.0 * x * u_km1 - u_km2;
                u_km2 = u_km1;
                u_km1 = u_k;
            }
        }
    }
}

/// Values `P_0(x) ..= P_degree(x)`.
pub fn eval_basis(x: f64, degree: usize, kind: PolyKind) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(Error::NonFinite("eval_basis input"));
    }
    let mut out = vec![0.0; degree + 1];
    fill_basis(x, kind, &mut out);
    Ok(out)
}

/// Derivatives `P'_0(x) ..= P'_degree(x)`.
pub fn eval_basis_derivative(x: f64, degree: usize, kind: PolyKind) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(Error::NonFinite("eval_basis_derivative input"));
    }
    let mut out = vec![0.0; degree + 1];
    fill_basis_derivative(x, kind, &mut out);
    Ok(out)
}

/// Per-sample, per-feature polynomial values, shape `[batch, in, degree + 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisTensor {
    pub values: Ten3,
    pub degree: usize,
    pub kind: PolyKind,
}

impl BasisTensor {
    pub fn shape(&self) -> [usize; 3] {
        self.values.dims()
    }
}

pub fn eval_basis_batch(x: &Mat, degree: usize, kind: PolyKind) -> Result<BasisTensor> {
    if !x.all_finite() {
        return Err(Error::NonFinite("eval_basis_batch input"));
    }
    let (batch, input_dim) = x.shape();
    let mut values = Ten3::zeros(batch, input_dim, degree + 1);
    for b in 0..batch {
        for (i, &xi) in x.row(b).iter().enumerate() {
            fill_basis(xi, kind, values.fiber_mut(b, i));
        }
    }
    Ok(BasisTensor {
        values,
        degree,
        kind,
    })
}

/// Zeros of `T_n`: `cos((2k + 1)π / 2n)` for `k = 0..n`, in decreasing order.
pub fn roots(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("roots requires n >= 1".into()));
    }
    let two_n = 2.0 * n as f64;
    Ok((0..n)
        .map(|k| ((2 * k + 1) as f64 * PI / two_n).cos())
        .collect())
}

/// Points where `T_n = ±1`: `cos(kπ / n)` for `k = 0..=n`, in decreasing order.
pub fn extrema(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("extrema requires n >= 1".into()));
    }
    Ok((0..=n).map(|k| (k as f64 * PI / n as f64).cos()).collect())
}

/// Gauss–Chebyshev quadrature rule. Integrates `w(x) p(x)` over `[-1, 1]`
/// exactly for polynomials `p` of degree below `2N`, where `w` is the weight
/// of the matching kind.
#[derive(Debug, Clone)]
pub struct GaussChebyshev {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussChebyshev {
    pub const DEFAULT_NODES: usize = 64;

    /// Weight `1/√(1-x²)`: nodes `cos((2k+1)π/2N)`, weights `π/N`.
    pub fn first_kind(n: usize) -> Self {
        let nodes = roots(n).unwrap_or_default();
        let weights = vec![PI / n.max(1) as f64; nodes.len()];
        GaussChebyshev { nodes, weights }
    }

    /// Weight `√(1-x²)`: nodes `cos(kπ/(N+1))`, weights `π/(N+1)·sin²(kπ/(N+1))`, `k = 1..=N`.
    pub fn second_kind(n: usize) -> Self {
        let h = PI / (n + 1) as f64;
        let (nodes, weights) = (1..=n)
            .map(|k| {
                let theta = k as f64 * h;
                (theta.cos(), h * theta.sin().powi(2))
            })
            .unzip();
        GaussChebyshev { nodes, weights }
    }

    pub fn for_kind(kind: PolyKind, n: usize) -> Self {
        match kind {
            PolyKind::First => Self::first_kind(n),
            PolyKind::Second => Self::second_kind(n),
        }
    }

    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Weighted inner product `∫ w(x) P_m(x) P_n(x) dx` over `[-1, 1]` by
/// Gauss–Chebyshev quadrature with `nodes` points.
pub fn orthogonality_integral(m: usize, n: usize, kind: PolyKind, nodes: usize) -> Result<f64> {
    if nodes < m + n + 1 {
        return Err(Error::InvalidArgument(format!(
            "{nodes} quadrature nodes cannot integrate degree {} exactly (need >= {})",
            m + n,
            m + n + 1
        )));
    }
    let rule = GaussChebyshev::for_kind(kind, nodes);
    let top = m.max(n);
    let mut buf = vec![0.0; top + 1];
    Ok(rule.integrate(|x| {
        fill_basis(x, kind, &mut buf);
        buf[m] * buf[n]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(x, y, epsilon = tol);
        }
    }

    #[test]
    fn first_kind_at_half() {
        close(&eval_basis(0.5, 3, PolyKind::First).unwrap(), &[1.0, 0.5, -0.5, -1.0], 1e-15);
    }

    #[test]
    fn first_kind_at_one() {
        assert_eq!(eval_basis(1.0, 5, PolyKind::First).unwrap(), vec![1.0; 6]);
    }

    #[test]
    fn second_kind_at_half() {
        close(&eval_basis(0.5, 3, PolyKind::Second).unwrap(), &[1.0, 1.0, 0.0, -1.0], 1e-15);
    }

    #[test]
    fn second_kind_at_one() {
        close(&eval_basis(1.0, 3, PolyKind::Second).unwrap(), &[1.0, 2.0, 3.0, 4.0], 0.0);
    }

    #[test]
    fn outside_unit_interval() {
        // T_2(2) = 7, U_2(2) = 15
        assert_eq!(eval_basis(2.0, 2, PolyKind::First).unwrap()[2], 7.0);
        assert_eq!(eval_basis(2.0, 2, PolyKind::Second).unwrap()[2], 15.0);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(eval_basis(f64::NAN, 3, PolyKind::First).is_err());
        assert!(eval_basis(f64::INFINITY, 3, PolyKind::Second).is_err());
    }

    #[test]
    fn degree_zero_is_constant() {
        assert_eq!(eval_basis(0.3, 0, PolyKind::First).unwrap(), vec![1.0]);
        assert_eq!(eval_basis_derivative(0.3, 0, PolyKind::Second).unwrap(), vec![0.0]);
    }

    #[test]
    fn batch_shape_and_slices() {
        let x = Mat::from_rows(&[[0.1, -0.2], [0.3, 0.4], [-0.9, 0.0]]).unwrap();
        let t = eval_basis_batch(&x, 3, PolyKind::First).unwrap();
        assert_eq!(t.shape(), [3, 2, 4]);
        for b in 0..3 {
            for i in 0..2 {
                assert_eq!(t.values.fiber(b, i), eval_basis(x[(b, i)], 3, PolyKind::First).unwrap());
            }
        }
    }

    #[test]
    fn batch_of_zeros_follows_cos_pattern() {
        let t = eval_basis_batch(&Mat::zeros(2, 2), 6, PolyKind::First).unwrap();
        assert_eq!(t.values.fiber(1, 1), &[1.0, 0.0, -1.0, 0.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn batch_single_constant() {
        let t = eval_basis_batch(&Mat::filled(1, 1, 0.7), 0, PolyKind::Second).unwrap();
        assert_eq!(t.values.as_slice(), &[1.0]);
    }

    #[test]
    fn derivative_small_cases() {
        let d = eval_basis_derivative(0.37, 3, PolyKind::First).unwrap();
        assert_eq!(d[1], 1.0);
        // T3' = 12x^2 - 3 vanishes at 0.5
        assert_abs_diff_eq!(eval_basis_derivative(0.5, 3, PolyKind::First).unwrap()[3], 0.0, epsilon = 1e-15);
        // U2' = 8x, U3' = 24x^2 - 4
        let u = eval_basis_derivative(0.5, 3, PolyKind::Second).unwrap();
        close(&u, &[0.0, 2.0, 4.0, 2.0], 1e-14);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let (x, n, h) = (0.3, 8, 1e-6);
        for kind in PolyKind::ALL {
            let analytic = eval_basis_derivative(x, n, kind).unwrap();
            let plus = eval_basis(x + h, n, kind).unwrap();
            let minus = eval_basis(x - h, n, kind).unwrap();
            for k in 0..=n {
                let numeric = (plus[k] - minus[k]) / (2.0 * h);
                assert_abs_diff_eq!(analytic[k], numeric, epsilon = 1e-7);
            }
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn roots_examples() {
        assert_abs_diff_eq!(roots(1).unwrap()[0], 0.0, epsilon = 1e-16);
        let r2 = roots(2).unwrap();
        close(&r2, &[(PI / 4.0).cos(), (3.0 * PI / 4.0).cos()], 1e-15);
        assert_abs_diff_eq!(r2[0], 0.70711, epsilon = 1e-5);
        assert!(roots(0).is_err());
    }

    #[test]
    fn roots_of_t7_vanish() {
        let worst = roots(7)
            .unwrap()
            .iter()
            .map(|&x| eval_basis(x, 7, PolyKind::First).unwrap()[7].abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn extrema_examples() {
        close(&extrema(1).unwrap(), &[1.0, -1.0], 0.0);
        close(&extrema(2).unwrap(), &[1.0, 0.0, -1.0], 1e-16);
        let vals: Vec<f64> = extrema(4)
            .unwrap()
            .iter()
            .map(|&x| eval_basis(x, 4, PolyKind::First).unwrap()[4])
            .collect();
        close(&vals, &[1.0, -1.0, 1.0, -1.0, 1.0], 1e-10);
        assert!(extrema(0).is_err());
    }

    #[test]
    fn orthogonality_examples() {
        let n = GaussChebyshev::DEFAULT_NODES;
        assert_abs_diff_eq!(orthogonality_integral(0, 0, PolyKind::First, n).unwrap(), PI, epsilon = 1e-10);
        assert_abs_diff_eq!(orthogonality_integral(2, 2, PolyKind::First, n).unwrap(), PI / 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(orthogonality_integral(1, 4, PolyKind::Second, n).unwrap(), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(orthogonality_integral(0, 0, PolyKind::Second, n).unwrap(), PI / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn orthogonality_needs_enough_nodes() {
        assert!(orthogonality_integral(3, 4, PolyKind::First, 7).is_err());
        assert!(orthogonality_integral(3, 4, PolyKind::First, 8).is_ok());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("First".parse::<PolyKind>().unwrap(), PolyKind::First);
        assert_eq!("second".parse::<PolyKind>().unwrap(), PolyKind::Second);
        assert!("third".parse::<PolyKind>().is_err());
    }
}
