//! Dense linear algebra and seeded sampling shared by every other module.

mod linalg;
mod matrix;
mod rng;

pub use linalg::{cholesky, solve_spd, symmetric_eigen, SymmetricEigen};
pub(crate) use matrix::dot as dot_product;
pub use matrix::Matrix;
pub use rng::{gaussian_sample, shuffle_rows, Rng};
