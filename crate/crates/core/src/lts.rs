//! Labelled transition systems.
//!
//! States are dense integers `0..n`. The alphabet is kept sorted and
//! deduplicated so that an action index order coincides with action name
//! order; transitions are kept sorted by `(from, action, to)`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use crate::error::{syntax, Error, Result};

/// Reserved action used to complete deadlock states. No atom ever matches it.
pub const END_ACTION: &str = "_end";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub from: usize,
    pub action: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lts {
    name: String,
    num_states: usize,
    initial: usize,
    actions: Vec<String>,
    transitions: Vec<Transition>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Checks the action-name grammar: an identifier, optionally prefixed by
/// `<agent>.` where the agent is itself an identifier.
pub fn is_action_name(s: &str) -> bool {
    match s.split_once('.') {
        Some((agent, rest)) => is_ident(agent) && is_ident(rest),
        None => is_ident(s),
    }
}

/// Splits `agent.action` into its parts; unprefixed names yield `None`.
pub fn split_agent(s: &str) -> Option<(&str, &str)> {
    s.split_once('.')
}

impl Lts {
    /// Builds an LTS over an explicit alphabet. Every transition action must
    /// belong to the alphabet.
    pub fn new<A, S>(
        name: impl Into<String>,
        num_states: usize,
        initial: usize,
        alphabet: A,
        transitions: impl IntoIterator<Item = (usize, S, usize)>,
    ) -> Result<Self>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        S: AsRef<str>,
    {
        let actions: BTreeSet<String> = alphabet.into_iter().map(Into::into).collect();
        let actions: Vec<String> = actions.into_iter().collect();
        for a in &actions {
            if !is_action_name(a) {
                return Err(Error::Model(format!("invalid action name `{a}`")));
            }
        }
        if initial >= num_states {
            return Err(Error::Model(format!(
                "initial state {initial} outside 0..{num_states}"
            )));
        }
        let mut trans = Vec::new();
        for (from, action, to) in transitions {
            let action = action.as_ref();
            let idx = actions
                .binary_search_by(|a| a.as_str().cmp(action))
                .map_err(|_| Error::Model(format!("action `{action}` not in alphabet")))?;
            if from >= num_states || to >= num_states {
                return Err(Error::Model(format!(
                    "transition {from} -{action}-> {to} leaves 0..{num_states}"
                )));
            }
            trans.push(Transition {
                from,
                action: idx,
                to,
            });
        }
        trans.sort_unstable();
        trans.dedup();
        Ok(Self {
            name: name.into(),
            num_states,
            initial,
            actions,
            transitions: trans,
        })
    }

    /// Builds an LTS whose alphabet is exactly the set of transition actions.
    pub fn from_triples<S: AsRef<str>>(
        name: impl Into<String>,
        num_states: usize,
        initial: usize,
        transitions: impl IntoIterator<Item = (usize, S, usize)>,
    ) -> Result<Self> {
        let triples: Vec<(usize, String, usize)> = transitions
            .into_iter()
            .map(|(f, a, t)| (f, a.as_ref().to_owned(), t))
            .collect();
        let alphabet: Vec<String> = triples.iter().map(|(_, a, _)| a.clone()).collect();
        Self::new(name, num_states, initial, alphabet, triples)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    /// Sorted alphabet.
    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn action_name(&self, idx: usize) -> &str {
        &self.actions[idx]
    }

    pub fn action_index(&self, name: &str) -> Option<usize> {
        self.actions.binary_search_by(|a| a.as_str().cmp(name)).ok()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    /// Outgoing transitions of `state`, ordered by action name then target.
    pub fn outgoing(&self, state: usize) -> &[Transition] {
        let lo = self.transitions.partition_point(|t| t.from < state);
        let hi = self.transitions.partition_point(|t| t.from <= state);
        &self.transitions[lo..hi]
    }

    /// Iterates transitions as `(from, action name, to)`.
    pub fn triples(&self) -> impl Iterator<Item = (usize, &str, usize)> + '_ {
        self.transitions
            .iter()
            .map(|t| (t.from, self.actions[t.action].as_str(), t.to))
    }

    pub fn deadlocks(&self) -> Vec<usize> {
        let mut has_out = vec![false; self.num_states];
        for t in &self.transitions {
            has_out[t.from] = true;
        }
        (0..self.num_states).filter(|&s| !has_out[s]).collect()
    }

    /// Adds an `_end` self-loop to every state without outgoing transitions.
    pub fn complete_deadlocks(&self) -> Lts {
        let dead = self.deadlocks();
        if dead.is_empty() {
            return self.clone();
        }
        let mut alphabet = self.actions.clone();
        alphabet.push(END_ACTION.to_owned());
        let triples = self
            .triples()
            .map(|(f, a, t)| (f, a.to_owned(), t))
            .chain(dead.into_iter().map(|s| (s, END_ACTION.to_owned(), s)))
            .collect::<Vec<_>>();
        Lts::new(self.name.clone(), self.num_states, self.initial, alphabet, triples)
            .expect("completion preserves validity")
    }

    /// Restricts to states reachable from the initial state and renumbers
    /// them in breadth-first discovery order. The alphabet is unchanged.
    pub fn reachable(&self) -> Lts {
        let mut index = vec![usize::MAX; self.num_states];
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        index[self.initial] = 0;
        order.push(self.initial);
        queue.push_back(self.initial);
        while let Some(s) = queue.pop_front() {
            for t in self.outgoing(s) {
                if index[t.to] == usize::MAX {
                    index[t.to] = order.len();
                    order.push(t.to);
                    queue.push_back(t.to);
                }
            }
        }
        let mut transitions: Vec<Transition> = self
            .transitions
            .iter()
            .filter(|t| index[t.from] != usize::MAX)
            .map(|t| Transition {
                from: index[t.from],
                action: t.action,
                to: index[t.to],
            })
            .collect();
        transitions.sort_unstable();
        Lts {
            name: self.name.clone(),
            num_states: order.len(),
            initial: 0,
            actions: self.actions.clone(),
            transitions,
        }
    }

    /// Returns a copy under a different name.
    pub fn renamed(mut self, name: impl Into<String>) -> Lts {
        self.name = name.into();
        self
    }
}

/// Parses the line-oriented LTS format:
///
/// ```text
/// lts Name
/// states 3
/// initial 0
/// trans 0 a 1
/// ```
///
/// An optional `actions a b ...` line declares alphabet members that label no
/// transition.
pub fn parse_lts(source: &str) -> Result<Lts> {
    let mut name = None;
    let mut states = None;
    let mut initial = None;
    let mut alphabet: Vec<String> = Vec::new();
    let mut triples: Vec<(usize, String, usize)> = Vec::new();

    for (lineno, raw) in source.lines().enumerate() {
        let line_no = lineno + 1;
        let line = strip_comment(raw);
        let indent = raw.len() - raw.trim_start().len() + 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        let Some(&head) = words.first() else { continue };
        let num = |s: &str, col: usize| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| syntax(line_no, col, format!("expected a number, found `{s}`")))
        };
        match (head, words.len()) {
            ("lts", 2) if name.is_none() => name = Some(words[1].to_owned()),
            ("states", 2) => states = Some(num(words[1], indent)?),
            ("initial", 2) => initial = Some(num(words[1], indent)?),
            ("actions", _) => alphabet.extend(words[1..].iter().map(|s| s.to_string())),
            ("trans", 4) => {
                if !is_action_name(words[2]) {
                    return Err(syntax(
                        line_no,
                        indent,
                        format!("invalid action name `{}`", words[2]),
                    ));
                }
                triples.push((num(words[1], indent)?, words[2].to_owned(), num(words[3], indent)?));
            }
            _ => return Err(syntax(line_no, indent, format!("unexpected line `{}`", line.trim()))),
        }
    }
    let name = name.ok_or_else(|| syntax(1, 1, "missing `lts <Name>` header"))?;
    let states = states.ok_or_else(|| syntax(1, 1, "missing `states <n>` line"))?;
    let initial = initial.ok_or_else(|| syntax(1, 1, "missing `initial <k>` line"))?;
    alphabet.extend(triples.iter().map(|(_, a, _)| a.clone()));
    Lts::new(name, states, initial, alphabet, triples)
}

pub(crate) fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

impl fmt::Display for Lts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lts {}", self.name)?;
        writeln!(f, "states {}", self.num_states)?;
        writeln!(f, "initial {}", self.initial)?;
        let mut used = vec![false; self.actions.len()];
        for t in &self.transitions {
            used[t.action] = true;
        }
        let unused: Vec<&str> = self
            .actions
            .iter()
            .zip(&used)
            .filter(|(_, u)| !**u)
            .map(|(a, _)| a.as_str())
            .collect();
        if !unused.is_empty() {
            writeln!(f, "actions {}", unused.join(" "))?;
        }
        for (from, a, to) in self.triples() {
            writeln!(f, "trans {from} {a} {to}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_names() {
        assert!(is_action_name("back"));
        assert!(is_action_name("u.back"));
        assert!(is_action_name("_end"));
        assert!(!is_action_name("u.mu.back"));
        assert!(!is_action_name("1a"));
        assert!(!is_action_name(""));
        assert!(!is_action_name("a-b"));
    }

    #[test]
    fn rejects_bad_endpoints() {
        assert!(Lts::from_triples("x", 2, 0, [(0, "a", 2)]).is_err());
        assert!(Lts::from_triples("x", 2, 2, [(0, "a", 1)]).is_err());
        assert!(Lts::new("x", 2, 0, ["a"], [(0, "b", 1)]).is_err());
    }

    #[test]
    fn reachable_drops_unreachable_state() {
        let l = Lts::from_triples("x", 3, 0, [(0, "a", 1), (2, "b", 0)]).unwrap();
        let r = l.reachable();
        assert_eq!(r.num_states(), 2);
        assert_eq!(r.transitions().len(), 1);
        // alphabet is preserved
        assert_eq!(r.actions(), l.actions());
    }

    #[test]
    fn reachable_is_idempotent() {
        let l = Lts::from_triples("x", 4, 2, [(2, "b", 0), (2, "a", 3), (3, "c", 0), (0, "a", 1)])
            .unwrap();
        let once = l.reachable();
        assert_eq!(once.initial(), 0);
        // BFS from 2: a -> 3 gets 1, b -> 0 gets 2, then 0 -a-> 1 gets 3
        assert_eq!(
            once.triples().collect::<Vec<_>>(),
            vec![(0, "a", 1), (0, "b", 2), (1, "c", 2), (2, "a", 3)]
        );
        assert_eq!(once.reachable(), once);
    }

    #[test]
    fn deadlock_completion() {
        let l = Lts::from_triples("x", 2, 0, [(0, "go", 1)]).unwrap();
        assert_eq!(l.deadlocks(), vec![1]);
        let c = l.complete_deadlocks();
        assert!(c.deadlocks().is_empty());
        assert!(c.triples().any(|t| t == (1, END_ACTION, 1)));
    }

    #[test]
    fn lts_text_round_trip() {
        let src = "lts Door\nstates 2\ninitial 0\nactions knock\ntrans 0 open 1\ntrans 1 close 0\n";
        let l = parse_lts(src).unwrap();
        assert_eq!(l.actions(), ["close", "knock", "open"]);
        assert_eq!(l.to_string(), src);
        assert_eq!(parse_lts(&l.to_string()).unwrap(), l);
    }

    #[test]
    fn lts_syntax_errors_carry_line() {
        let err = parse_lts("lts A\nstates 2\ninitial 0\ntrans 0 a\n").unwrap_err();
        match err {
            Error::Syntax { pos, .. } => assert_eq!(pos.line, 4),
            e => panic!("unexpected {e}"),
        }
    }
}
