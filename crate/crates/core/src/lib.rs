//! Finding module-consistent revisions of interaction specifications that
//! stay secure when users do not follow their prescribed action order.
//!
//! The pipeline: parse an [`mlts::Mlts`], enumerate module permutations
//! ([`recompose`]), weaken each revision with an occupancy automaton
//! ([`weaken`]), check weighted safety requirements ([`ltl`],
//! [`requirement`]), accelerate the sweep with per-requirement classifiers
//! ([`ml`], [`pipeline`]) and select or degrade ([`selection`]).
//! [`oasis`] re-implements the abstraction-based coverage used as the
//! comparison baseline and [`bench`] the efficiency experiment.

pub mod bench;
pub mod error;
pub mod ltl;
pub mod ml;
pub mod lts;
pub mod mlts;
pub mod oasis;
pub mod pipeline;
pub mod recompose;
pub mod requirement;
pub mod selection;
pub mod weaken;

pub use error::{Error, Result};
