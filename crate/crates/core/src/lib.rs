//! Matrix concentration statistics, the bounds they feed, and the
//! randomized algorithms those bounds analyze.
//!
//! * [`linalg`]: dense complex matrices, Jacobi eigensolver, spectral norms.
//! * [`concentration`]: variance statistics and Bernstein, Freedman and
//!   Khinchin bound evaluators.
//! * [`rounding`]: a simulated float system with stochastic rounding, and
//!   Cholesky under it.
//! * [`graphs`]: Laplacians, effective resistances, sparsification,
//!   randomized sparse Cholesky and PCG.
//! * [`quantum`]: density matrices, 2-design tomography, random product
//!   formulas.
//! * [`estimation`]: active subspaces and covariance confidence sequences.
//! * [`rng`]: the per-trial random stream scheme.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod concentration;
pub mod estimation;
pub mod graphs;
pub mod linalg;
pub mod quantum;
pub mod rng;
pub mod rounding;

pub use linalg::{Matrix, C64};

// The book's code blocks run as doctests of this crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/concentration.md")]
    mod concentration {}
    #[doc = include_str!("../../../book/src/rounding.md")]
    mod rounding {}
    #[doc = include_str!("../../../book/src/graphs.md")]
    mod graphs {}
    #[doc = include_str!("../../../book/src/quantum.md")]
    mod quantum {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
