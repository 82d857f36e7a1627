//! Sparse Bayesian functional deep networks.
//!
//! Curves observed on a grid are projected onto a clamped B-spline basis, a
//! ReLU network is fitted to the spline features by MAP under a column-wise
//! spike-and-slab prior on its first layer, and the features whose posterior
//! inclusion probability exceeds a threshold are mapped back to an active
//! region of the function domain. The projection size is chosen by Laplace
//! evidence or validation loss across random restarts.

pub mod dataset;
pub mod error;
pub mod evidence;
pub mod network;
pub mod prior;
pub mod region;
pub mod selector;
pub mod sim;
pub mod spline;
pub mod train;

pub use error::{Error, Result};

/// Derive an independent 64-bit seed from a base seed and a tag (SplitMix64 finalizer).
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    let mut z = base ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
