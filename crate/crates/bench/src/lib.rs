//! Fixtures shared by the benchmarks.

use chebykan::rng::Dist;
use chebykan::{ArchSpec, ChebyKanLayer, InitMethod, Mat, PolyKind, Rng, Sequential};

/// A Xavier-initialized layer and a standard-normal input batch.
pub fn kan_fixture(batch: usize, input: usize, output: usize, degree: usize, kind: PolyKind) -> (ChebyKanLayer, Mat) {
    let mut layer = ChebyKanLayer::new(input, output, degree, kind);
    layer
        .init_coeffs(InitMethod::Xavier, &mut Rng::new(7, 0))
        .expect("valid init");
    let x = Mat::random(batch, input, &mut Rng::new(7, 1), Dist::Normal { mean: 0.0, std: 1.0 }).expect("valid dist");
    (layer, x)
}

/// The MNIST network at `degree` and a random input batch.
pub fn mnist_fixture(batch: usize, degree: usize) -> (Sequential, Mat) {
    let net = Sequential::build(&ArchSpec::mnist(degree, PolyKind::First), InitMethod::Xavier, &Rng::new(7, 2))
        .expect("valid arch");
    let x = Mat::random(batch, 784, &mut Rng::new(7, 3), Dist::Uniform { lo: -1.0, hi: 1.0 }).expect("valid dist");
    (net, x)
}
