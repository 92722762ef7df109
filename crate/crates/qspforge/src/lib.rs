pub mod bivariate;
pub mod codec;
pub mod dd;
pub mod error;
pub mod functionals;
pub mod gqsp;
pub mod lcuplan;
pub mod opqsp;
pub mod su11;
pub mod polycore;
pub mod tol;
pub mod verify;

pub use error::{QspError, Result};
pub use num_complex::Complex64 as C64;
pub use tol::Tolerances;
