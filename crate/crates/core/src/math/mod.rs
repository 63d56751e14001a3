//! Small dense linear algebra and quadrature helpers.
//!
//! All matrices in this crate are tiny (system dimension N ≲ 10, auxiliary
//! dimension M ≲ 10), so everything here is direct and allocation-light; no
//! external linear-algebra backend is pulled in.

mod linalg;
mod quad;

pub use linalg::{cholesky_psd, is_hurwitz, lyapunov, CMat, RMat};
pub use quad::{adaptive_simpson, gauss_legendre, gauss_legendre_nodes, Kbn};
