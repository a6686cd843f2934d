//! Markov chains indexed by free groups and free semigroups, and exact
//! computation of the f-invariant.
//!
//! - [`freegroup`]: words, balls, the left-Cayley tree, past sets.
//! - [`transition`]: transition systems, invariance checks, example systems.
//! - [`measure`]: exact cylinder probabilities, ball marginals, coarsened and
//!   empirical measures, sampling, the `d1` distance.
//! - [`entropy`]: Shannon entropies, `F`, `F*`, and the closed-form f.
//! - [`approx`]: Markov approximations by superstate systems.
//! - [`verify`]: named numerical checks of the theory.
//! - [`cli`]: the `fmarkov` command-line front end.

pub mod approx;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod freegroup;
pub mod measure;
pub mod transition;
pub mod verify;

pub use error::{Error, Result};
pub use freegroup::{Domain, Generator, GroupKind, GroupSpec, Word};
pub use measure::{BallMarginal, MeasureSource, Pattern, SampleSet};
pub use transition::{StochasticMatrix, TransitionSystem, ValidationReport};
