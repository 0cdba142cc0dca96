//! Leader-follower density control on periodic domains: feasibility of a
//! target follower density, continuum and agent-based simulation under
//! feedback, and the comparison system behind the local stability bound.
//!
//! The guide in `book/` walks through each module; its snippets run as
//! doc-tests of this crate.

pub mod error;
pub mod experiments;
pub mod feasibility;
pub mod grid;
pub mod kernels;
pub mod lemma_ode;
pub mod macro_sim;
pub mod metrics;
pub mod micro_sim;
pub mod scenario;
pub mod targets;

pub use error::{Error, Result, Species};

macro_rules! book_chapters {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            #[cfg(doctest)]
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        )*
    };
}

book_chapters! {
    book_introduction => "introduction.md",
    book_grid => "grid.md",
    book_kernels => "kernels.md",
    book_targets => "targets.md",
    book_feasibility => "feasibility.md",
    book_macro => "macro.md",
    book_micro => "micro.md",
    book_stability => "stability.md",
    book_experiments => "experiments.md",
}
