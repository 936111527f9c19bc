//! Special functions, multivariate normal integration and symmetric linear
//! algebra.

mod linalg;
mod mvn;
mod special;

pub use linalg::{cholesky_psd, sym_pseudoinverse, symmetric_eigen};
pub(crate) use linalg::{pseudoinverse_from_eigen, reconstruct};
pub use mvn::{equicoordinate_quantile, mvn_rectangle_prob, CorrelationMatrix, McParams};
pub use special::{
    chi_square_cdf, chi_square_quantile, chi_square_sf, f_nu_inf_quantile, f_nu_inf_sf, std_normal_cdf,
    std_normal_pdf, std_normal_quantile,
};
