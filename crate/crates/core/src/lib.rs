//! Numerics for the gain part of the Boltzmann collision operator.
//!
//! The crate evaluates the gain operator `Q⁺` and the spherical bilinear
//! operator `𝒫` in three representations (direct spherical integral,
//! Carleman hyperplane integral, Fourier/Bobylev), computes the beta-type
//! constants `β_b(x, y)` that carry the sharp bounds, and certifies the
//! associated inequalities numerically.
//!
//! Module map:
//!
//! * [`kernel`]: angular kernels `b`, the measure `ξ_n^b`, `β_b`, cut-off.
//! * [`radial`]: one-dimensional profiles, the operator `ℬ`, extremizers.
//! * [`spherical`]: `𝒫` on ℝⁿ, symmetrization, weighted norms, pairing checks.
//! * [`gain`]: `Q⁺`, `Q⁻`, the Fourier grid pipeline, `L^p_λ` norms.
//! * [`harness`]: inequality reports, sweeps and CSV/JSON emission.
//!
//! Conventions: surface areas use `|S^m| = 2π^{(m+1)/2} / Γ((m+1)/2)`, and the
//! Fourier transform is `f̂(k) = ∫ f(v) e^{-ik·v} dv`.

// `!(x >= 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gain;
pub mod harness;
pub mod kernel;
pub mod par;
pub mod quad;
pub mod radial;
pub mod special;
pub mod spherical;

pub use error::{Error, Result};
