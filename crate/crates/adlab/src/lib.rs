//! Numerical laboratory for quantum adiabatic evolution.
//!
//! The crate follows a single pipeline: a [`models::HamiltonianModel`]
//! supplies `H(t)`; [`spectral`] diagonalizes it on a [`grid::TimeGrid`],
//! tracks levels across steps, and fixes a parallel-transport gauge;
//! [`propagation`] integrates the exact Schrödinger propagator with a unitary
//! Magnus stepper, assembles the adiabatic propagator, and decomposes either
//! in the instantaneous eigenbasis; [`phases`] extracts dynamical, Berry,
//! Pancharatnam, geometric, and correction-integral phases; [`diagnostics`]
//! quantifies where and how the adiabatic approximation fails; and
//! [`runner`] executes configured experiments with deterministic CSV/JSON
//! output (exposed on the command line as the `adlab` binary).
//!
//! The [`guide`] module mirrors the repository's book chapters; its examples
//! are compiled and run as doc-tests so the narrative cannot drift from the
//! code.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod matrix_file;
pub mod models;
pub mod phases;
pub mod propagation;
pub mod runner;
pub mod spectral;

pub use error::{Error, Result};

/// Book-style guide. Each submodule embeds one chapter of the repository's
/// `book/`; the code blocks inside run as doc-tests.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}

    #[doc = include_str!("../../../book/src/models.md")]
    pub mod models {}

    #[doc = include_str!("../../../book/src/propagation.md")]
    pub mod propagation {}

    #[doc = include_str!("../../../book/src/phases.md")]
    pub mod phases {}

    #[doc = include_str!("../../../book/src/diagnostics.md")]
    pub mod diagnostics {}

    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
