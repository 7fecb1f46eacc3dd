//! Chebyshev Kolmogorov-Arnold networks with hand-written backpropagation.
//!
//! Each KAN layer squashes its inputs with `tanh`, expands every feature in
//! a Chebyshev basis up to a fixed degree, and contracts the basis against a
//! learnable `in × out × (degree+1)` coefficient tensor.

pub mod chebyshev;
pub mod data;
pub mod error;
pub mod experiments;
pub mod layers;
pub mod ndcore;
pub mod network;
pub mod optim;
pub mod rng;

pub use chebyshev::PolyKind;
pub use data::{Dataset, NormScheme, Targets};
pub use error::{Error, Result};
pub use layers::{ChebyKanLayer, InitMethod, LayerNorm};
pub use ndcore::{Mat, Ten3};
pub use network::{param_count, ArchSpec, Layer, Sequential};
pub use rng::Rng;
