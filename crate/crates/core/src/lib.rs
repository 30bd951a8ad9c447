//! Determinant and Pfaffian evaluation of Vandermonde-type multiple integrals
//! `z_β(μ) = (1/N!) ∫…∫ |V(u₁,…,u_N)|^β μ(du₁)…μ(du_N)`, β ∈ {1, 2, 4}, and of
//! the invariant integrals on symmetric spaces that reduce to them.

pub mod error;
pub mod forms;
pub mod linalg;
pub mod quadrature;
pub mod siegel;
pub mod spaces;
pub mod verify;
pub mod oracle;
pub mod parse;
pub mod zbeta;

pub use error::{Error, Result};
