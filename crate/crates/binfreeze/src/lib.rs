//! Progressive freezing for binary neural networks.
//!
//! Train networks whose weights and activations end up in {-1, +1} without a
//! straight-through estimator: each tensor carries a freeze mask that is
//! stochastically tightened over a schedule, frozen entries emit their sign
//! and receive exactly zero gradient, and unfrozen entries keep training
//! through a smooth proxy. Layers freeze in a configurable order; the deploy
//! network is the fully frozen one, so proxy and deploy behaviour coincide at
//! the end of training by construction.
//!
//! The guide in `book/` walks through the concepts; every snippet there is
//! compiled and run by the `binfreeze-book` doc-test shim.

pub mod binarize;
pub mod cli;
pub mod data;
pub mod error;
pub mod kernels;
pub mod masking;
pub mod metrics;
pub mod model;
pub mod plot;
pub mod progression;
pub mod rng;
pub mod snapshot;
pub mod tape;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::Tensor;
