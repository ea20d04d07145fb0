//! Radial profiles, the one-dimensional operator ℬ and its weighted norms.

mod ops;
mod profile;

pub(crate) use ops::golden_max;
pub use ops::{
    bilinear_b, bilinear_profile, extremizer_pair, lemma23_check, lp_norm_radial, power_moment, power_moment_on,
    sharp_constant, sharpness_study, sup_norm, ExponentTriple, Relation, SharpnessRow, SharpnessTable, SigmaMeasure,
    DEFAULT_EPS_SCHEDULE,
};
pub use profile::{parse_real, Decay, RadialProfile};
