//! Special functions and quadrature used across the crate.

pub mod bessel;
pub mod bvn;
pub mod normal;
pub mod quad;

pub use bessel::{bessel_k, bessel_k_scaled, log_bessel_k};
pub use bvn::binorm_cdf_bar;
pub use normal::{norm_cdf, norm_inv, norm_pdf, norm_sf};
pub use quad::{integrate, QuadOptions, QuadResult};
