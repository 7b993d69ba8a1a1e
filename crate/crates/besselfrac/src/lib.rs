//! Fractional powers of the Bessel operator Δ_λ = −d²/dx² + λ(λ−1)/x² on ℝ₊.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod grid;
pub mod kernels;
pub mod operators;
pub mod quad;
pub mod specfun;
pub mod transforms;
