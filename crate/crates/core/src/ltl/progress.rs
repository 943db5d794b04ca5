//! Formula progression over single-action steps.
//!
//! Safety formulas are compiled into a hash-consed arena of NNF nodes.
//! Boolean structure is kept in disjunctive normal form with contradictory
//! and absorbed clauses removed, so equivalent obligations built from the
//! same temporal nodes share an id and the set of obligations stays finite.

use std::collections::HashMap;

use super::Formula;
use crate::error::{Error, Result};
use crate::lts::END_ACTION;

pub type FormulaId = u32;

pub const TRUE: FormulaId = 0;
pub const FALSE: FormulaId = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    Lit { atom: u32, positive: bool },
    And(Vec<FormulaId>),
    Or(Vec<FormulaId>),
    Next(FormulaId),
    WeakUntil(FormulaId, FormulaId),
    Release(FormulaId, FormulaId),
    Globally(FormulaId),
}

/// Event-semantics atom matching: an unprefixed atom `a` holds on `a` and on
/// any agent-prefixed `g.a`; a prefixed atom matches only exactly. The
/// reserved `_end` action satisfies no atom.
pub fn atom_matches(atom: &str, action: &str) -> bool {
    if action == END_ACTION {
        return false;
    }
    if action == atom {
        return true;
    }
    !atom.contains('.') && action.split_once('.').is_some_and(|(_, rest)| rest == atom)
}

#[derive(Debug, Clone)]
pub struct Progressor {
    nodes: Vec<Node>,
    index: HashMap<Node, FormulaId>,
    atoms: Vec<String>,
    actions: HashMap<String, u32>,
    /// `truth[action][atom]`
    truth: Vec<Vec<bool>>,
    memo: HashMap<(FormulaId, u32), FormulaId>,
    root: FormulaId,
    closure: usize,
}

impl Progressor {
    /// Compiles a syntactically safe formula.
    pub fn new(formula: &Formula) -> Result<Self> {
        if !formula.is_safety() {
            return Err(Error::NonSafety(formula.to_string()));
        }
        let mut p = Progressor {
            nodes: Vec::new(),
            index: HashMap::new(),
            atoms: formula.atoms(),
            actions: HashMap::new(),
            truth: Vec::new(),
            memo: HashMap::new(),
            root: TRUE,
            closure: 0,
        };
        p.intern(Node::True);
        p.intern(Node::False);
        p.root = p.compile(&formula.nnf());
        p.closure = p.nodes.len() - 2;
        Ok(p)
    }

    pub fn root(&self) -> FormulaId {
        self.root
    }

    /// Number of distinct subformulas of the compiled NNF.
    pub fn closure_size(&self) -> usize {
        self.closure
    }

    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    /// Number of distinct canonical formulas created so far.
    pub fn formula_count(&self) -> usize {
        self.nodes.len()
    }

    fn intern(&mut self, node: Node) -> FormulaId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len() as FormulaId;
        self.nodes.push(node.clone());
        self.index.insert(node, id);
        id
    }

    fn compile(&mut self, f: &Formula) -> FormulaId {
        match f {
            Formula::True => TRUE,
            Formula::False => FALSE,
            Formula::Atom(a) => self.lit(a, true),
            Formula::Not(inner) => match &**inner {
                Formula::Atom(a) => self.lit(a, false),
                _ => unreachable!("NNF negates atoms only"),
            },
            Formula::And(x, y) => {
                let (x, y) = (self.compile(x), self.compile(y));
                self.and(vec![x, y])
            }
            Formula::Or(x, y) => {
                let (x, y) = (self.compile(x), self.compile(y));
                self.or(vec![x, y])
            }
            Formula::Next(x) => {
                let x = self.compile(x);
                self.intern(Node::Next(x))
            }
            Formula::WeakUntil(x, y) => {
                let (x, y) = (self.compile(x), self.compile(y));
                self.intern(Node::WeakUntil(x, y))
            }
            Formula::Release(x, y) => {
                let (x, y) = (self.compile(x), self.compile(y));
                self.intern(Node::Release(x, y))
            }
            Formula::Globally(x) => {
                let x = self.compile(x);
                self.intern(Node::Globally(x))
            }
            _ => unreachable!("checked by is_safety"),
        }
    }

    fn lit(&mut self, atom: &str, positive: bool) -> FormulaId {
        let idx = self.atoms.binary_search_by(|a| a.as_str().cmp(atom)).expect("collected atom") as u32;
        self.intern(Node::Lit {
            atom: idx,
            positive,
        })
    }

    /// Disjunctive normal form of a canonical node: a list of clauses, each a
    /// sorted set of non-boolean nodes.
    fn clauses(&self, f: FormulaId) -> Vec<Vec<FormulaId>> {
        match &self.nodes[f as usize] {
            Node::True => vec![vec![]],
            Node::False => vec![],
            Node::And(v) => vec![v.clone()],
            Node::Or(v) => v.iter().flat_map(|&c| self.clauses(c)).collect(),
            _ => vec![vec![f]],
        }
    }

    fn complementary(&self, a: FormulaId, b: FormulaId) -> bool {
        match (&self.nodes[a as usize], &self.nodes[b as usize]) {
            (Node::Lit { atom: x, positive: p }, Node::Lit { atom: y, positive: q }) => x == y && p != q,
            _ => false,
        }
    }

    /// Interns a DNF after dropping contradictory clauses and absorbed
    /// supersets, so every obligation is a set of sets of closure nodes.
    fn build(&mut self, clauses: Vec<Vec<FormulaId>>) -> FormulaId {
        let mut cs: Vec<Vec<FormulaId>> = clauses
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c.dedup();
                c
            })
            .filter(|c| !c.iter().any(|&a| c.iter().any(|&b| self.complementary(a, b))))
            .collect();
        cs.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        cs.dedup();
        let mut kept: Vec<Vec<FormulaId>> = Vec::with_capacity(cs.len());
        for c in cs {
            if !kept.iter().any(|k| k.iter().all(|x| c.binary_search(x).is_ok())) {
                kept.push(c);
            }
        }
        let mut ids: Vec<FormulaId> = kept
            .into_iter()
            .map(|c| match c.len() {
                0 => TRUE,
                1 => c[0],
                _ => self.intern(Node::And(c)),
            })
            .collect();
        ids.sort_unstable();
        match ids.len() {
            0 => FALSE,
            1 => ids[0],
            _ => self.intern(Node::Or(ids)),
        }
    }

    fn and(&mut self, children: Vec<FormulaId>) -> FormulaId {
        let mut acc: Vec<Vec<FormulaId>> = vec![vec![]];
        for c in children {
            let cs = self.clauses(c);
            if cs.is_empty() {
                return FALSE;
            }
            acc = acc
                .iter()
                .flat_map(|a| cs.iter().map(move |b| a.iter().chain(b).copied().collect()))
                .collect();
        }
        self.build(acc)
    }

    fn or(&mut self, children: Vec<FormulaId>) -> FormulaId {
        let acc = children.iter().flat_map(|&c| self.clauses(c)).collect();
        self.build(acc)
    }

    /// Interns an action name, computing which atoms it satisfies.
    pub fn action_id(&mut self, action: &str) -> u32 {
        if let Some(&id) = self.actions.get(action) {
            return id;
        }
        let id = self.truth.len() as u32;
        self.truth
            .push(self.atoms.iter().map(|a| atom_matches(a, action)).collect());
        self.actions.insert(action.to_owned(), id);
        id
    }

    /// Atoms that hold on none of the given actions.
    pub fn unmatched_atoms<'a>(&self, actions: impl IntoIterator<Item = &'a str> + Clone) -> Vec<String> {
        self.atoms
            .iter()
            .filter(|atom| !actions.clone().into_iter().any(|a| atom_matches(atom, a)))
            .cloned()
            .collect()
    }

    /// Rewrites `f` into the obligation on the rest of the trace after
    /// observing `action`.
    pub fn progress(&mut self, f: FormulaId, action: u32) -> FormulaId {
        if let Some(&r) = self.memo.get(&(f, action)) {
            return r;
        }
        let r = match self.nodes[f as usize].clone() {
            Node::True => TRUE,
            Node::False => FALSE,
            Node::Lit { atom, positive } => {
                if self.truth[action as usize][atom as usize] == positive {
                    TRUE
                } else {
                    FALSE
                }
            }
            Node::And(children) => {
                let mut out = Vec::with_capacity(children.len());
                for c in children {
                    let p = self.progress(c, action);
                    if p == FALSE {
                        out.clear();
                        out.push(FALSE);
                        break;
                    }
                    out.push(p);
                }
                self.and(out)
            }
            Node::Or(children) => {
                let mut out = Vec::with_capacity(children.len());
                for c in children {
                    let p = self.progress(c, action);
                    if p == TRUE {
                        out.clear();
                        out.push(TRUE);
                        break;
                    }
                    out.push(p);
                }
                self.or(out)
            }
            Node::Next(x) => x,
            // G φ  ~>  prog(φ) ∧ G φ
            Node::Globally(x) => {
                let px = self.progress(x, action);
                self.and(vec![px, f])
            }
            // φ W ψ  ~>  prog(ψ) ∨ (prog(φ) ∧ φ W ψ)
            Node::WeakUntil(x, y) => {
                let py = self.progress(y, action);
                let px = self.progress(x, action);
                let keep = self.and(vec![px, f]);
                self.or(vec![py, keep])
            }
            // φ R ψ  ~>  prog(ψ) ∧ (prog(φ) ∨ φ R ψ)
            Node::Release(x, y) => {
                let py = self.progress(y, action);
                let px = self.progress(x, action);
                let keep = self.or(vec![px, f]);
                self.and(vec![py, keep])
            }
        };
        self.memo.insert((f, action), r);
        r
    }

    /// Progresses the root through a finite trace, returning every
    /// intermediate obligation (first entry is the root).
    pub fn replay<'a>(&mut self, trace: impl IntoIterator<Item = &'a str>) -> Vec<FormulaId> {
        let mut cur = self.root;
        let mut out = vec![cur];
        for a in trace {
            let id = self.action_id(a);
            cur = self.progress(cur, id);
            out.push(cur);
        }
        out
    }

    /// Renders a compiled formula back into concrete syntax.
    pub fn render(&self, f: FormulaId) -> String {
        let join = |v: &[FormulaId], op: &str| {
            v.iter()
                .map(|&c| format!("({})", self.render(c)))
                .collect::<Vec<_>>()
                .join(op)
        };
        match &self.nodes[f as usize] {
            Node::True => "true".into(),
            Node::False => "false".into(),
            Node::Lit { atom, positive } => {
                let a = &self.atoms[*atom as usize];
                if *positive {
                    a.clone()
                } else {
                    format!("!{a}")
                }
            }
            Node::And(v) => join(v, " && "),
            Node::Or(v) => join(v, " || "),
            Node::Next(x) => format!("X ({})", self.render(*x)),
            Node::Globally(x) => format!("G ({})", self.render(*x)),
            Node::WeakUntil(x, y) => format!("({}) W ({})", self.render(*x), self.render(*y)),
            Node::Release(x, y) => format!("({}) R ({})", self.render(*x), self.render(*y)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ltl::parse_ltl;

    fn prog(src: &str) -> Progressor {
        Progressor::new(&parse_ltl(src).unwrap()).unwrap()
    }

    #[test]
    fn matching_rules() {
        assert!(atom_matches("back", "back"));
        assert!(atom_matches("back", "mu.back"));
        assert!(atom_matches("mu.back", "mu.back"));
        assert!(!atom_matches("mu.back", "u.back"));
        assert!(!atom_matches("mu.back", "back"));
        assert!(!atom_matches("_end", "_end"));
    }

    #[test]
    fn globally_progression_reaches_false() {
        let mut p = prog("G(u.select -> G !mu.select)");
        let trace = p.replay(["u.select", "u.exit", "mu.enter", "mu.select"]);
        assert_eq!(*trace.last().unwrap(), FALSE);
        assert!(trace[..4].iter().all(|&f| f != FALSE));
    }

    #[test]
    fn weak_until_discharges() {
        let mut p = prog("select -> (!confirm W gift)");
        let t = p.replay(["select", "gift", "confirm"]);
        assert_eq!(t[2], TRUE);
        let mut p = prog("select -> (!confirm W gift)");
        let t = p.replay(["select", "confirm"]);
        assert_eq!(t[2], FALSE);
    }

    #[test]
    fn canonical_and_is_shared() {
        let mut p = prog("G a && G a");
        // both conjuncts intern to the same node, so the conjunction collapses
        let root = p.root();
        assert_eq!(p.render(root), "G (a)");
        let a = p.action_id("a");
        assert_eq!(p.progress(root, a), root);
    }

    #[test]
    fn rejects_liveness() {
        assert!(Progressor::new(&parse_ltl("F a").unwrap()).is_err());
    }
}
