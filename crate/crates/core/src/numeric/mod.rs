//! Numerical building blocks shared by the model and the statistics code.

mod normal;
mod quadrature;
mod roots;

pub use normal::{norm_cdf, norm_pdf, norm_quantile, norm_sf};
pub use quadrature::{gauss_hermite, GaussHermite};
pub use roots::find_root;
