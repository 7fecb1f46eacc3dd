//! Double-double arithmetic and a forward pass built on it, used as the
//! finite-difference oracle of the gradient checker. A value is the unevaluated
//! sum `hi + lo` with `|lo| <= ulp(hi)/2`, giving about 106 significant bits.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::chebyshev::PolyKind;
use crate::layers::Activation;
use crate::network::{Layer, Sequential};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: Dd = Dd {
    hi: std::f64::consts::LN_2,
    lo: 2.319_046_813_846_299_6e-17,
};

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    fn renorm(a: f64, b: f64) -> Dd {
        let (hi, lo) = quick_two_sum(a, b);
        Dd { hi, lo }
    }

    pub fn sqrt(self) -> Dd {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let r = 1.0 / self.hi.sqrt();
        let ax = self.hi * r;
        let (p, e) = two_prod(ax, ax);
        let diff = self - Dd { hi: p, lo: e };
        Dd::from(ax) + Dd::from(diff.hi * r * 0.5)
    }

    fn ldexp(self, k: i32) -> Dd {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn exp(self) -> Dd {
        const SQUARINGS: i32 = 10;
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::from(k)).ldexp(-SQUARINGS);
        // Taylor series of e^r - 1; |r| < 3.4e-4 so 12 terms reach 1e-40.
        let mut term = r;
        let mut sum = r;
        for n in 2..=12 {
            term = term * r / Dd::from(n as f64);
            sum = sum + term;
        }
        // (1 + s)^2 - 1 = s·(s + 2) keeps the small part exact.
        for _ in 0..SQUARINGS {
            sum = sum * (sum + Dd::from(2.0));
        }
        (sum + Dd::ONE).ldexp(k as i32)
    }

    pub fn tanh(self) -> Dd {
        if self.hi.abs() > 20.0 {
            return Dd::from(self.hi.signum());
        }
        let e = (self + self).exp();
        (e - Dd::ONE) / (e + Dd::ONE)
    }
}

impl From<f64> for Dd {
    fn from(hi: f64) -> Dd {
        Dd { hi, lo: 0.0 }
    }
}

impl Add for Dd {
    type Output = Dd;

    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        Dd::renorm(s, e + f)
    }
}

impl Neg for Dd {
    type Output = Dd;

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;

    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;

    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        Dd::renorm(p, e + (self.hi * o.lo + self.lo * o.hi))
    }
}

impl Div for Dd {
    type Output = Dd;

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::from(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::from(q2);
        let q3 = r.hi / o.hi;
        Dd::renorm(q1, q2) + Dd::from(q3)
    }
}

fn sum(values: impl IntoIterator<Item = Dd>) -> Dd {
    values.into_iter().fold(Dd::ZERO, |a, b| a + b)
}

enum Op {
    Kan { input: usize, output: usize, degree: usize, kind: PolyKind },
    Norm { dim: usize, eps: f64 },
    Dense { input: usize, output: usize, relu: bool },
}

/// Shape of a [`Sequential`] whose parameters are supplied separately, so a
/// single coordinate can be shifted by an exact double-double step.
pub(crate) struct DdNet {
    ops: Vec<Op>,
}

impl DdNet {
    pub fn of(net: &Sequential) -> DdNet {
        let ops = net
            .layers()
            .iter()
            .map(|layer| match layer {
                Layer::Kan(l) => Op::Kan {
                    input: l.input_dim(),
                    output: l.output_dim(),
                    degree: l.degree(),
                    kind: l.kind(),
                },
                Layer::Norm(l) => Op::Norm { dim: l.dim(), eps: l.eps() },
                Layer::Dense(l) => Op::Dense {
                    input: l.input_dim(),
                    output: l.output_dim(),
                    relu: l.activation() == Activation::Relu,
                },
            })
            .collect();
        DdNet { ops }
    }

    /// Forward pass of one sample; `params` is in `Sequential::params_flat` order.
    pub fn forward_row(&self, params: &[Dd], x: &[Dd]) -> Vec<Dd> {
        let mut h = x.to_vec();
        let mut off = 0;
        for op in &self.ops {
            h = match *op {
                Op::Kan { input, output, degree, kind } => {
                    let n = degree + 1;
                    let c = &params[off..off + input * output * n];
                    off += c.len();
                    let mut y = vec![Dd::ZERO; output];
                    for (i, &xi) in h.iter().enumerate() {
                        let basis = basis(xi.tanh(), degree, kind);
                        for (o, y_o) in y.iter_mut().enumerate() {
                            let fiber = &c[(i * output + o) * n..(i * output + o + 1) * n];
                            *y_o = *y_o + sum(basis.iter().zip(fiber).map(|(&t, &c)| t * c));
                        }
                    }
                    y
                }
                Op::Norm { dim, eps } => {
                    let gamma = &params[off..off + dim];
                    let beta = &params[off + dim..off + 2 * dim];
                    off += 2 * dim;
                    let count = Dd::from(dim as f64);
                    let mean = sum(h.iter().copied()) / count;
                    let var = sum(h.iter().map(|&v| (v - mean) * (v - mean))) / count;
                    let std = (var + Dd::from(eps)).sqrt();
                    h.iter()
                        .zip(gamma.iter().zip(beta))
                        .map(|(&v, (&g, &b))| (v - mean) / std * g + b)
                        .collect()
                }
                Op::Dense { input, output, relu } => {
                    let w = &params[off..off + input * output];
                    let b = &params[off + input * output..off + input * output + output];
                    off += input * output + output;
                    (0..output)
                        .map(|o| {
                            let z = b[o] + sum(h.iter().enumerate().map(|(i, &v)| v * w[i * output + o]));
                            if relu && z.hi <= 0.0 {
                                Dd::ZERO
                            } else {
                                z
                            }
                        })
                        .collect()
                }
            };
        }
        h
    }
}

fn basis(x: Dd, degree: usize, kind: PolyKind) -> Vec<Dd> {
    let two_x = x + x;
    let mut p = Vec::with_capacity(degree + 1);
    p.push(Dd::ONE);
    if degree >= 1 {
        p.push(match kind {
            PolyKind::First => x,
            PolyKind::Second => two_x,
        });
    }
    for k in 2..=degree {
        let next = two_x * p[k - 1] - p[k - 2];
        p.push(next);
    }
    p
}
