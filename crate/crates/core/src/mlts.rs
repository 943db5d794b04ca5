//! Modularized LTS: a chain of modules, each a set of direction-tagged
//! actions, with the DSL parser, canonical serializer and chain expansion.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{syntax, Error, Result};
use crate::lts::{is_action_name, strip_comment, Lts};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    /// `s_i -> s_{i+1}`
    Forward,
    /// `s_i -> s_{i-1}`; a self-loop when the module sits at the chain head.
    Backward,
    /// Jumps to the chain position `k`.
    StateTargeted(usize),
    /// Jumps to wherever the module owning this forward action currently sits.
    ModuleTargeted(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirectedAction {
    pub name: String,
    pub direction: Direction,
}

impl DirectedAction {
    pub fn new(name: impl Into<String>, direction: Direction) -> Self {
        Self {
            name: name.into(),
            direction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Module {
    pub id: String,
    pub actions: Vec<DirectedAction>,
}

impl Module {
    /// The module's unique forward action.
    pub fn forward(&self) -> &str {
        self.actions
            .iter()
            .find(|a| a.direction == Direction::Forward)
            .map(|a| a.name.as_str())
            .expect("validated module has a forward action")
    }

    pub fn has_backward(&self) -> bool {
        self.actions.iter().any(|a| a.direction == Direction::Backward)
    }

    /// Action content with directions, independent of declaration order and id.
    pub fn content(&self) -> Vec<DirectedAction> {
        let mut v = self.actions.clone();
        v.sort();
        v
    }

    pub fn contains_action(&self, name: &str) -> bool {
        self.actions.iter().any(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mlts {
    pub name: String,
    pub modules: Vec<Module>,
    pub agents: (String, String),
}

pub const DEFAULT_AGENTS: (&str, &str) = ("u", "mu");

impl Mlts {
    /// Validates and builds an mLTS.
    pub fn new(name: impl Into<String>, modules: Vec<Module>, agents: (String, String)) -> Result<Self> {
        let m = Self {
            name: name.into(),
            modules,
            agents,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.modules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.modules.is_empty() {
            return Err(Error::Model("an mLTS needs at least one module".into()));
        }
        for agent in [&self.agents.0, &self.agents.1] {
            if !is_action_name(agent) || agent.contains('.') {
                return Err(Error::Model(format!("invalid agent name `{agent}`")));
            }
        }
        if self.agents.0 == self.agents.1 {
            return Err(Error::Model("agent names must differ".into()));
        }
        let mut forwards: HashMap<&str, &str> = HashMap::new();
        for m in &self.modules {
            let merr = |msg: String| Error::Module {
                module: m.id.clone(),
                msg,
            };
            if m.actions.is_empty() {
                return Err(merr("module has no actions".into()));
            }
            let fw: Vec<&str> = m
                .actions
                .iter()
                .filter(|a| a.direction == Direction::Forward)
                .map(|a| a.name.as_str())
                .collect();
            match fw.len() {
                1 => {}
                0 => return Err(merr("module has no forward action".into())),
                n => return Err(merr(format!("module has {n} forward actions"))),
            }
            if let Some(other) = forwards.insert(fw[0], &m.id) {
                return Err(merr(format!(
                    "forward action `{}` is also the forward action of module `{other}`",
                    fw[0]
                )));
            }
            let mut names: Vec<&str> = m.actions.iter().map(|a| a.name.as_str()).collect();
            names.sort_unstable();
            if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
                return Err(merr(format!("action `{}` declared twice", w[0])));
            }
            for a in &m.actions {
                if !is_action_name(&a.name) || a.name.contains('.') {
                    return Err(merr(format!("invalid action name `{}`", a.name)));
                }
            }
        }
        for m in &self.modules {
            for a in &m.actions {
                match &a.direction {
                    Direction::StateTargeted(k) if *k > self.modules.len() => {
                        return Err(Error::Module {
                            module: m.id.clone(),
                            msg: format!(
                                "state target {k} of `{}` exceeds {} modules",
                                a.name,
                                self.modules.len()
                            ),
                        })
                    }
                    Direction::ModuleTargeted(t) if !forwards.contains_key(t.as_str()) => {
                        return Err(Error::Module {
                            module: m.id.clone(),
                            msg: format!("`{}` targets unknown forward action `{t}`", a.name),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }

    /// Chain position of the module whose forward action is `forward`.
    pub fn position_of_forward(&self, forward: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.forward() == forward)
    }

    /// Chain position of the first module offering `action` in any direction.
    pub fn position_of_action(&self, action: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.contains_action(action))
    }

    /// Expands the chain into an LTS with states `s_0 ..= s_N`.
    pub fn to_lts(&self) -> Lts {
        let n = self.modules.len();
        let mut triples = Vec::new();
        for (i, m) in self.modules.iter().enumerate() {
            for a in &m.actions {
                let to = match &a.direction {
                    Direction::Forward => i + 1,
                    Direction::Backward => i.saturating_sub(1),
                    Direction::StateTargeted(k) => *k,
                    Direction::ModuleTargeted(t) => self
                        .position_of_forward(t)
                        .expect("validated module target"),
                };
                triples.push((i, a.name.as_str(), to));
            }
        }
        Lts::from_triples(self.name.clone(), n + 1, 0, triples).expect("validated mLTS")
    }

    /// Alphabet of the expanded chain.
    pub fn alphabet(&self) -> Vec<String> {
        self.to_lts().actions().to_vec()
    }
}

/// Module multisets are equal, comparing modules by directed action content.
pub fn module_consistent(a: &Mlts, b: &Mlts) -> bool {
    if a.modules.len() != b.modules.len() {
        return false;
    }
    let bag = |m: &Mlts| {
        let mut counts: BTreeMap<Vec<DirectedAction>, usize> = BTreeMap::new();
        for module in &m.modules {
            *counts.entry(module.content()).or_default() += 1;
        }
        counts
    };
    bag(a) == bag(b)
}

/// Parses the mLTS DSL.
///
/// ```text
/// system TicketBooking
/// agents u mu
/// module m6:
///   forward confirm
///   module reselect -> dest
///   state reset -> 0
/// ```
pub fn parse_mlts(source: &str) -> Result<Mlts> {
    let mut name: Option<String> = None;
    let mut agents = (DEFAULT_AGENTS.0.to_owned(), DEFAULT_AGENTS.1.to_owned());
    let mut modules: Vec<Module> = Vec::new();
    let mut module_lines: Vec<usize> = Vec::new();

    for (lineno, raw) in source.lines().enumerate() {
        let line_no = lineno + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let col = line.len() - line.trim_start().len() + 1;
        let indented = col > 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        let err = |msg: String| syntax(line_no, col, msg);

        if name.is_none() {
            match words.as_slice() {
                ["system", n] if !indented => {
                    name = Some((*n).to_owned());
                    continue;
                }
                _ => return Err(err("expected `system <Name>` as the first line".into())),
            }
        }
        if !indented {
            match words.as_slice() {
                ["agents", u, mu] if modules.is_empty() => {
                    agents = ((*u).to_owned(), (*mu).to_owned());
                }
                ["module", id] if id.ends_with(':') && id.len() > 1 => {
                    modules.push(Module {
                        id: id.trim_end_matches(':').to_owned(),
                        actions: Vec::new(),
                    });
                    module_lines.push(line_no);
                }
                ["module", id, ":"] => {
                    modules.push(Module {
                        id: (*id).to_owned(),
                        actions: Vec::new(),
                    });
                    module_lines.push(line_no);
                }
                _ => return Err(err(format!("unexpected line `{}`", line.trim()))),
            }
            continue;
        }
        let Some(current) = modules.last_mut() else {
            return Err(err("action line outside of a module block".into()));
        };
        let check_name = |n: &str| -> Result<String> {
            if is_action_name(n) && !n.contains('.') {
                Ok(n.to_owned())
            } else {
                Err(syntax(line_no, col, format!("invalid action name `{n}`")))
            }
        };
        let action = match words.as_slice() {
            ["forward", a] => DirectedAction::new(check_name(a)?, Direction::Forward),
            ["backward", a] => DirectedAction::new(check_name(a)?, Direction::Backward),
            ["state", a, "->", k] => {
                let k = k
                    .parse::<usize>()
                    .map_err(|_| err(format!("expected a state index, found `{k}`")))?;
                DirectedAction::new(check_name(a)?, Direction::StateTargeted(k))
            }
            ["module", a, "->", t] => {
                DirectedAction::new(check_name(a)?, Direction::ModuleTargeted(check_name(t)?))
            }
            _ => return Err(err(format!("unexpected action line `{}`", line.trim()))),
        };
        current.actions.push(action);
    }
    let name = name.ok_or_else(|| syntax(1, 1, "empty source"))?;
    let m = Mlts {
        name,
        modules,
        agents,
    };
    m.validate()?;
    Ok(m)
}

impl fmt::Display for Mlts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "system {}", self.name)?;
        if (self.agents.0.as_str(), self.agents.1.as_str()) != DEFAULT_AGENTS {
            writeln!(f, "agents {} {}", self.agents.0, self.agents.1)?;
        }
        for m in &self.modules {
            writeln!(f, "module {}:", m.id)?;
            for a in &m.actions {
                match &a.direction {
                    Direction::Forward => writeln!(f, "  forward {}", a.name)?,
                    Direction::Backward => writeln!(f, "  backward {}", a.name)?,
                    Direction::StateTargeted(k) => writeln!(f, "  state {} -> {k}", a.name)?,
                    Direction::ModuleTargeted(t) => writeln!(f, "  module {} -> {t}", a.name)?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TICKET: &str = include_str!("../../../fixtures/ticket.mlts");

    #[test]
    fn parses_ticket_booking() {
        let m = parse_mlts(TICKET).unwrap();
        assert_eq!(m.len(), 7);
        assert_eq!(m.modules[6].forward(), "confirm");
        assert_eq!(m.modules[6].actions.len(), 3);
        assert!(m.modules[2].has_backward());
        assert_eq!(m.agents, ("u".to_owned(), "mu".to_owned()));
    }

    #[test]
    fn single_module() {
        let m = parse_mlts("system S\nmodule m0:\n  forward go\n").unwrap();
        assert_eq!(m.len(), 1);
        let l = m.to_lts();
        assert_eq!(l.num_states(), 2);
        assert_eq!(l.triples().collect::<Vec<_>>(), vec![(0, "go", 1)]);
    }

    #[test]
    fn two_forwards_rejected() {
        let err = parse_mlts("system S\nmodule m0:\n  forward a\n  forward b\n").unwrap_err();
        match err {
            Error::Module { module, .. } => assert_eq!(module, "m0"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn semantic_errors() {
        // no forward
        assert!(parse_mlts("system S\nmodule m0:\n  backward b\n").is_err());
        // duplicate forward names across modules
        assert!(parse_mlts("system S\nmodule a:\n  forward x\nmodule b:\n  forward x\n").is_err());
        // unknown module target
        assert!(parse_mlts("system S\nmodule a:\n  forward x\n  module r -> y\n").is_err());
        // state target out of range
        assert!(parse_mlts("system S\nmodule a:\n  forward x\n  state r -> 2\n").is_err());
        // state target equal to the module count is the terminal state
        assert!(parse_mlts("system S\nmodule a:\n  forward x\n  state r -> 1\n").is_ok());
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_mlts("system S\nmodule a:\n  forward x\n  sideways y\n").unwrap_err();
        match err {
            Error::Syntax { pos, .. } => assert_eq!((pos.line, pos.column), (4, 3)),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ticket_chain_expansion() {
        let l = parse_mlts(TICKET).unwrap().to_lts();
        assert_eq!(l.num_states(), 8);
        let t: Vec<_> = l.triples().collect();
        assert!(t.contains(&(2, "back", 1)));
        assert!(t.contains(&(6, "reset", 0)));
        assert!(t.contains(&(6, "reselect", 3)));
        assert!(t.contains(&(6, "confirm", 7)));
        assert_eq!(t.len(), 7 + 3 + 2);
    }

    #[test]
    fn backward_at_head_is_self_loop() {
        let m = parse_mlts("system S\nmodule a:\n  forward x\n  backward back\nmodule b:\n  forward y\n")
            .unwrap();
        let l = m.to_lts();
        let t: Vec<_> = l.triples().collect();
        assert!(t.contains(&(0, "back", 0)));
    }

    #[test]
    fn consistency() {
        let m = parse_mlts(TICKET).unwrap();
        assert!(module_consistent(&m, &m));
        let mut r = m.clone();
        r.modules.swap(0, 5);
        r.modules[0].id = "renamed".into();
        assert!(module_consistent(&m, &r));
        let mut broken = m.clone();
        broken.modules[2].actions.retain(|a| a.name != "back");
        assert!(!module_consistent(&m, &broken));
    }

    #[test]
    fn custom_agents_round_trip() {
        let src = "system S\nagents alice eve\nmodule a:\n  forward x\n  state r -> 0\n";
        let m = parse_mlts(src).unwrap();
        assert_eq!(m.agents.1, "eve");
        assert_eq!(m.to_string(), src);
    }
}
