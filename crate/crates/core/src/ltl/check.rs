use std::collections::{HashMap, VecDeque};

use log::warn;
use serde::{Deserialize, Serialize};

use super::progress::{Progressor, FALSE, TRUE};
use super::Formula;
use crate::error::Result;
use crate::lts::{Lts, END_ACTION};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub satisfied: bool,
    /// Minimum-length bad prefix, present iff not satisfied.
    pub counterexample: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Exploration counters from a single check.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CheckStats {
    /// Distinct `(state, obligation)` pairs visited.
    pub pairs: usize,
    /// Distinct canonical obligations reached.
    pub formulas: usize,
    /// Closure size of the checked formula.
    pub closure: usize,
}

/// Upper bound on the number of canonical obligations reachable from a
/// formula with closure size `closure`: sets of sets of closure elements,
/// plus the two constants. Saturates at `u64::MAX`.
pub fn progression_bound(closure: usize) -> u64 {
    if closure >= 6 {
        return u64::MAX;
    }
    (1u64 << (1u64 << closure)) + 2
}

/// Checks a safety formula against every infinite path of `model`. States
/// without outgoing transitions are treated as carrying an `_end` self-loop.
pub fn check(model: &Lts, formula: &Formula) -> Result<Verdict> {
    check_with_stats(model, formula).map(|(v, _)| v)
}

pub fn check_with_stats(model: &Lts, formula: &Formula) -> Result<(Verdict, CheckStats)> {
    let mut prog = Progressor::new(formula)?;
    let warnings: Vec<String> = prog
        .unmatched_atoms(model.actions().iter().map(String::as_str))
        .into_iter()
        .map(|a| format!("atom `{a}` matches no action of `{}`", model.name()))
        .collect();
    for w in &warnings {
        warn!("{w}");
    }

    let action_ids: Vec<u32> = model.actions().iter().map(|a| prog.action_id(a)).collect();
    let end_id = prog.action_id(END_ACTION);

    let root = prog.root();
    let mut stats = CheckStats {
        closure: prog.closure_size(),
        ..Default::default()
    };
    if root == TRUE {
        return Ok((
            Verdict {
                satisfied: true,
                counterexample: None,
                warnings,
            },
            stats,
        ));
    }

    // (state, obligation) -> slot in `nodes`
    let mut seen: HashMap<(usize, u32), usize> = HashMap::new();
    // per slot: parent slot and the action taken to reach it
    let mut parents: Vec<Option<(usize, u32)>> = Vec::new();
    let mut queue = VecDeque::new();
    let start = (model.initial(), root);
    seen.insert(start, 0);
    parents.push(None);
    queue.push_back((start, 0usize));
    let mut formulas = std::collections::HashSet::new();
    formulas.insert(root);

    let trace_back = |mut slot: usize, last: u32, parents: &[Option<(usize, u32)>], names: &dyn Fn(u32) -> String| {
        let mut rev = vec![names(last)];
        while let Some((p, a)) = parents[slot] {
            rev.push(names(a));
            slot = p;
        }
        rev.reverse();
        rev
    };
    let name_of = |id: u32| -> String {
        if id == end_id {
            END_ACTION.to_owned()
        } else {
            let idx = action_ids.iter().position(|&x| x == id).expect("model action");
            model.action_name(idx).to_owned()
        }
    };

    while let Some(((state, f), slot)) = queue.pop_front() {
        let outgoing = model.outgoing(state);
        let steps: Vec<(u32, usize)> = if outgoing.is_empty() {
            vec![(end_id, state)]
        } else {
            outgoing.iter().map(|t| (action_ids[t.action], t.to)).collect()
        };
        for (action, to) in steps {
            let next = prog.progress(f, action);
            if next == FALSE {
                stats.pairs = seen.len();
                stats.formulas = formulas.len();
                let cex = trace_back(slot, action, &parents, &name_of);
                return Ok((
                    Verdict {
                        satisfied: false,
                        counterexample: Some(cex),
                        warnings,
                    },
                    stats,
                ));
            }
            if next == TRUE {
                continue;
            }
            let key = (to, next);
            if !seen.contains_key(&key) {
                seen.insert(key, parents.len());
                parents.push(Some((slot, action)));
                formulas.insert(next);
                queue.push_back((key, parents.len() - 1));
            }
        }
    }
    stats.pairs = seen.len();
    stats.formulas = formulas.len();
    debug_assert!(stats.formulas as u64 <= progression_bound(stats.closure));
    Ok((
        Verdict {
            satisfied: true,
            counterexample: None,
            warnings,
        },
        stats,
    ))
}
