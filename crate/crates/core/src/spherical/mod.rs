//! The operator 𝒫 on ℝⁿ, sphere rules, radial symmetrization and weighted norms.

mod function;
mod ops;
mod rule;
mod symmetrize;

pub(crate) use function::norm;
pub use function::VelocityFunction;
pub use ops::{
    lemma21_pairing, lemma22_check, operator_p, p_norm_generic, pairing_lhs, pairing_rhs, post_collision_pair,
    radial_pairing, radial_reduce_p, theorem1_check, weighted_lp_norm, NuMeasure,
};
pub use rule::{Frame, SphereRule};
pub use symmetrize::{symmetrize, RotationSampler, DEFAULT_ROTATIONS};
