//! Lipschitz-Killing curvature measures of closed semi-algebraic sets.
//!
//! The crate computes the measures Λ_k(X ∩ B(x0, R)) for a catalog of
//! linear, conic and smooth sets, estimates their growth limits as R grows,
//! and checks Gauss-Bonnet style identities that tie those limits to Euler
//! characteristics of links at infinity and of random affine sections.
//!
//! Monte Carlo averages use per-sample ChaCha8 streams and index-ordered
//! reductions, so results do not depend on the number of worker threads.
//! The `parallel` feature (on by default) runs the data-parallel loops on
//! rayon; without it every loop is sequential.

pub mod catalog;
pub mod cli;
pub mod cubature;
pub mod curvature;
pub mod error;
pub mod geomconst;
pub mod grassmann;
pub mod limits;
pub mod par;
pub mod poly;
pub mod report;
pub mod spherical;
pub mod verify;

pub use error::{Error, Result};
