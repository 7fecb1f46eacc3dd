//! Trainable layers: the Chebyshev KAN layer, LayerNorm, and a dense
//! baseline. Each layer caches what it needs during `forward` and writes
//! fresh (non-accumulated) parameter gradients during `backward`.

mod dense;
mod init;
mod kan;
mod layernorm;

pub use dense::{Activation, DenseLayer};
pub use init::InitMethod;
pub use kan::ChebyKanLayer;
pub use layernorm::LayerNorm;
