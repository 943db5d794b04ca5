//! Attack-scenario weakening: composing a machine with an occupancy
//! automaton that records which agent (if any) is at the machine.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::lts::{split_agent, Lts, END_ACTION};

/// Occupancy automaton over enter/exit events, with each state tagged by the
/// agent whose machine actions are enabled there (`None` = nobody present).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyAutomaton {
    lts: Lts,
    tags: Vec<Option<String>>,
}

impl OccupancyAutomaton {
    pub fn new(lts: Lts, tags: Vec<Option<String>>) -> Result<Self> {
        if tags.len() != lts.num_states() {
            return Err(Error::Model(format!(
                "occupancy has {} states but {} tags",
                lts.num_states(),
                tags.len()
            )));
        }
        for a in lts.actions() {
            if split_agent(a).is_none() {
                return Err(Error::Model(format!(
                    "occupancy action `{a}` must be agent-prefixed"
                )));
            }
        }
        Ok(Self { lts, tags })
    }

    /// The three-state user / empty / malicious-user automaton:
    /// `u.exit: U->E`, `u.enter: E->U`, `mu.enter: E->M`, `mu.exit: M->E`.
    pub fn standard(user: &str, attacker: &str) -> Self {
        let (u, e, m) = (0, 1, 2);
        let lts = Lts::from_triples(
            "Occupancy",
            3,
            u,
            [
                (u, format!("{user}.exit"), e),
                (e, format!("{user}.enter"), u),
                (e, format!("{attacker}.enter"), m),
                (m, format!("{attacker}.exit"), e),
            ],
        )
        .expect("standard occupancy is well-formed");
        Self {
            lts,
            tags: vec![Some(user.to_owned()), None, Some(attacker.to_owned())],
        }
    }

    pub fn for_agents(agents: &(String, String)) -> Self {
        Self::standard(&agents.0, &agents.1)
    }

    pub fn lts(&self) -> &Lts {
        &self.lts
    }

    pub fn tag(&self, state: usize) -> Option<&str> {
        self.tags[state].as_deref()
    }
}

impl Default for OccupancyAutomaton {
    fn default() -> Self {
        Self::standard("u", "mu")
    }
}

/// Product of `machine` with the occupancy automaton. Machine actions are
/// prefixed by the agent tagged on the occupancy state and are disabled where
/// nobody is present; occupancy events interleave freely. Only reachable
/// pairs are kept, numbered breadth-first.
pub fn weaken(machine: &Lts, occ: &OccupancyAutomaton) -> Result<Lts> {
    if let Some(a) = machine.actions().iter().find(|a| split_agent(a).is_some()) {
        return Err(Error::Prefixed(a.clone()));
    }
    let occ_lts = occ.lts();
    let mut alphabet: Vec<String> = occ_lts.actions().to_vec();
    let agents: Vec<&str> = {
        let mut v: Vec<&str> = occ.tags.iter().flatten().map(String::as_str).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    for a in machine.actions() {
        if a == END_ACTION {
            alphabet.push(a.clone());
            continue;
        }
        for g in &agents {
            alphabet.push(format!("{g}.{a}"));
        }
    }
    let label = |agent: &str, action: &str| {
        if action == END_ACTION {
            action.to_owned()
        } else {
            format!("{agent}.{action}")
        }
    };

    let start = (machine.initial(), occ_lts.initial());
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut queue = VecDeque::new();
    let mut triples: Vec<(usize, String, usize)> = Vec::new();
    index.insert(start, 0);
    queue.push_back(start);
    while let Some((p, w)) = queue.pop_front() {
        let from = index[&(p, w)];
        let mut succ: Vec<(String, (usize, usize))> = Vec::new();
        if let Some(agent) = occ.tag(w) {
            for t in machine.outgoing(p) {
                succ.push((label(agent, machine.action_name(t.action)), (t.to, w)));
            }
        }
        for t in occ_lts.outgoing(w) {
            succ.push((occ_lts.action_name(t.action).to_owned(), (p, t.to)));
        }
        succ.sort();
        for (a, target) in succ {
            let next = index.len();
            let to = *index.entry(target).or_insert_with(|| {
                queue.push_back(target);
                next
            });
            triples.push((from, a, to));
        }
    }
    let name = format!("{}_weakened", machine.name());
    let product = Lts::new(name, index.len(), 0, alphabet, triples)?;
    Ok(product.reachable())
}
