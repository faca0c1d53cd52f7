//! Maximum capture facility location under GEV discrete choice models.
//!
//! A newcomer opens `C` of `m` candidate locations to capture as much demand
//! as possible from zones whose customers choose between the newcomer's
//! facilities and existing competitors according to a GEV model (multinomial
//! logit, nested logit, or mixed logit through sample expansion).
//!
//! The objective is monotone and submodular for every GEV model, so greedy
//! selection already carries a `1 - 1/e` guarantee; [`solver::ggx`] refines
//! the greedy set with a gradient-driven local search whose linear subproblem
//! is solved exactly, followed by best-improvement swaps.

pub mod choice;
pub mod cli;
pub mod error;
pub mod format;
pub mod instances;
pub mod objective;
pub mod oracle;
pub mod rng;
pub mod solver;

pub use choice::{AttractionVector, ChoiceModelSpec, Cpgf, NestedLogit};
pub use error::{Error, Result};
pub use objective::{Instance, Solution, Zone};
pub use solver::{CoefMode, RunReport, SolverConfig};
