//! Dead cores and shape derivatives for semilinear reaction–diffusion
//! problems.
//!
//! The crate solves `-Δw + β(w) = f` with `w = 1` on the boundary for
//! kinetics `β` that may have an infinite derivative at the origin (root
//! type), detects the resulting dead core `{w = 0}`, and differentiates the
//! solution with respect to perturbations of the domain.

pub mod dead_core;
pub mod elliptic;
pub mod error;
pub mod experiments;
pub mod field;
pub mod geometry;
pub mod io;
pub mod kinetics;
pub mod linalg;
pub mod oracle1d;
pub mod quad;
pub mod shape;

pub use error::{Error, Result};

// The guide chapters under book/ double as doc-tests so their code blocks
// can never drift out of sync with the crate.
#[cfg(doctest)]
mod guide {
    #![allow(unused)]

    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kinetics.md")]
    mod kinetics {}
    #[doc = include_str!("../../../book/src/solving.md")]
    mod solving {}
    #[doc = include_str!("../../../book/src/dead-core.md")]
    mod dead_core {}
    #[doc = include_str!("../../../book/src/shape-derivatives.md")]
    mod shape_derivatives {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
