//! Feedforward construction of interpretable ReLU multilayer perceptrons.
//!
//! A network is built in one pass from its training data:
//!
//! 1. each class is described by Gaussian blobs (native generating blobs, or a
//!    per-class Gaussian mixture fitted by EM, see [`gmm`]),
//! 2. every pair of blobs from different classes is separated by a closed-form
//!    two-class LDA hyperplane ([`lda`]), and the set of hyperplanes is pruned
//!    greedily against the training error of the induced region classifier
//!    ([`partition`]),
//! 3. the hyperplanes become antisymmetric neuron pairs in the first layer, each
//!    observed sign-code region becomes one second-layer neuron, and regions are
//!    wired one-hot to their majority class ([`network`]).
//!
//! The [`bp`] module trains the same architecture by backpropagation for
//! comparison, and [`cli`] glues everything into the `ffmlp` binary.

pub mod bp;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod gmm;
pub mod lda;
mod linalg;
pub mod network;
pub mod partition;
mod rng;

pub use error::{Error, Result};
pub use rng::derive_seed;
