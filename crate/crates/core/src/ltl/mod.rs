//! LTL over actions: parsing, safety classification, progression and
//! breadth-first model checking of safety properties.

mod check;
mod formula;
mod parser;
pub mod progress;

pub use check::{check, check_with_stats, progression_bound, CheckStats, Verdict};
pub use formula::Formula;
pub use parser::parse_ltl;
pub use progress::{atom_matches, Progressor};
