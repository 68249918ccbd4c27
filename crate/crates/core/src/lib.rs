//! Finite, checkable computations behind an α-invariant of 5/6 for a Fano
//! 3-fold with icosahedral symmetry.
//!
//! The crate is organized around the reductions the argument actually uses:
//!
//! - [`forms`]: binary forms of degree 12, the SL(2) substitution action, the
//!   icosahedral group and its invariant form, and the orbit map
//!   `(α, β) ↦ (z − α)^11 (z − β)`.
//! - [`series`] and [`cusp`]: exact truncated power series and the local chart
//!   computation exhibiting the cusp `z₁² = z₂³` along the rational normal curve.
//! - [`lct`]: Monte Carlo and closed-form integrability thresholds for
//!   quasi-homogeneous singularities, including the dyadic annulus recursion.
//! - [`hyperbolic`]: hyperbolic 3-space as positive Hermitian matrices, with the
//!   convexity, fixed-point and chord checks.
//! - [`green`]: a flat-torus Green's function testbed for the lower bound on
//!   `∫ φ`.
//! - [`toric`]: lattice polytope symmetry groups and the log-sum-exp potential
//!   whose gradient image is the polytope.

pub mod cusp;
pub mod error;
pub mod exact;
pub mod forms;
pub mod green;
pub mod hyperbolic;
pub mod lct;
pub mod optimize;
pub mod report;
pub mod series;
pub mod suite;
pub mod toric;

pub use error::{LabError, Result};

/// An independent random stream for trial `index` under `seed`, so that
/// parallel trials reproduce regardless of scheduling.
pub(crate) fn trial_rng(seed: u64, index: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
