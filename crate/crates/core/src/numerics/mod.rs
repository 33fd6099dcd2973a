//! Dense numerics shared by the simulators and limit laws.

mod expm;
mod linalg;
mod matrix;
mod rng;
mod special;

pub(crate) use expm::expm_complex;
pub use expm::{expm, is_subgenerator, matrix_exponential_action, TRUNCATION_TOLERANCE};
pub use linalg::{inverse, solve_linear, Lu, SINGULARITY_THRESHOLD};
pub use matrix::DenseMatrix;
pub use rng::{derive_seed, RngStream};
pub use special::{chi_square_sf, kolmogorov_pvalue, normal_cdf, normal_pdf};
