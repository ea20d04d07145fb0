//! The gain and loss terms, the Fourier grid pipeline and `L^p_λ` norms.

mod collision;
mod grid;

pub use collision::{
    lambda_norm, q_minus, q_plus_carleman, q_plus_direct, q_plus_norm, theorem2_check, CollisionKernel, LambdaNormSpec,
};
pub use grid::{
    bobylev_spectrum, default_half_width, fourier_transform, inverse_fourier_transform, q0_plus_bobylev, GridFunction,
    SpectralGrid, DEFAULT_ALIASING_TOL, DEFAULT_POINTS,
};
