//! LTL on lassos `stem · loop^ω`, evaluated by fixpoint iteration over the
//! finitely many positions.

use revkit::ltl::Formula;
use revkit::lts::Lts;

const END: &str = "_end";

/// Does `atom` hold on `action`? Written independently of the checker.
pub fn holds(atom: &str, action: &str) -> bool {
    if action == END {
        return false;
    }
    match (atom.find('.'), action.find('.')) {
        (None, Some(i)) => &action[i + 1..] == atom,
        _ => atom == action,
    }
}

/// Truth of `f` at position 0 of `word[..loop_start] · word[loop_start..]^ω`.
pub fn eval(f: &Formula, word: &[&str], loop_start: usize) -> bool {
    assert!(loop_start < word.len());
    values(f, word, loop_start)[0]
}

fn values(f: &Formula, word: &[&str], l: usize) -> Vec<bool> {
    let k = word.len();
    let succ = |i: usize| if i + 1 == k { l } else { i + 1 };
    let unary = |g: &Formula| values(g, word, l);
    // least (init false) or greatest (init true) fixpoint of v = step(v)
    let fix = |init: bool, step: &dyn Fn(usize, &[bool]) -> bool| {
        let mut v = vec![init; k];
        loop {
            let next: Vec<bool> = (0..k).map(|i| step(i, &v)).collect();
            if next == v {
                return v;
            }
            v = next;
        }
    };
    use Formula::*;
    match f {
        True => vec![true; k],
        False => vec![false; k],
        Atom(a) => word.iter().map(|w| holds(a, w)).collect(),
        Not(g) => unary(g).into_iter().map(|b| !b).collect(),
        And(a, b) => zip(unary(a), unary(b), |x, y| x && y),
        Or(a, b) => zip(unary(a), unary(b), |x, y| x || y),
        Implies(a, b) => zip(unary(a), unary(b), |x, y| !x || y),
        Iff(a, b) => zip(unary(a), unary(b), |x, y| x == y),
        Next(g) => {
            let v = unary(g);
            (0..k).map(|i| v[succ(i)]).collect()
        }
        Until(a, b) => {
            let (va, vb) = (unary(a), unary(b));
            fix(false, &|i, v| vb[i] || (va[i] && v[succ(i)]))
        }
        WeakUntil(a, b) => {
            let (va, vb) = (unary(a), unary(b));
            fix(true, &|i, v| vb[i] || (va[i] && v[succ(i)]))
        }
        Release(a, b) => {
            let (va, vb) = (unary(a), unary(b));
            fix(true, &|i, v| vb[i] && (va[i] || v[succ(i)]))
        }
        StrongRelease(a, b) => {
            let (va, vb) = (unary(a), unary(b));
            fix(false, &|i, v| vb[i] && (va[i] || v[succ(i)]))
        }
        Finally(g) => {
            let vg = unary(g);
            fix(false, &|i, v| vg[i] || v[succ(i)])
        }
        Globally(g) => {
            let vg = unary(g);
            fix(true, &|i, v| vg[i] && v[succ(i)])
        }
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// Successor lists with deadlocks completed by an `_end` self-loop.
pub fn completed_adjacency(model: &Lts) -> Vec<Vec<(String, usize)>> {
    let mut adj = vec![Vec::new(); model.num_states()];
    for (from, a, to) in model.triples() {
        adj[from].push((a.to_owned(), to));
    }
    for (s, out) in adj.iter_mut().enumerate() {
        if out.is_empty() {
            out.push((END.to_owned(), s));
        }
    }
    adj
}

/// A violating lasso, if one exists among lassos whose path has at most
/// `max_len` transitions.
pub fn find_violation(model: &Lts, f: &Formula, max_len: usize) -> Option<(Vec<String>, usize)> {
    let adj = completed_adjacency(model);
    let mut states = vec![model.initial()];
    let mut word: Vec<String> = Vec::new();
    search(&adj, f, max_len, &mut states, &mut word)
}

fn search(
    adj: &[Vec<(String, usize)>],
    f: &Formula,
    max_len: usize,
    states: &mut Vec<usize>,
    word: &mut Vec<String>,
) -> Option<(Vec<String>, usize)> {
    let last = *states.last().unwrap();
    // close a loop back to any earlier occurrence of the current state
    for l in 0..word.len() {
        if states[l] == last {
            let w: Vec<&str> = word.iter().map(String::as_str).collect();
            if !eval(f, &w, l) {
                return Some((word.clone(), l));
            }
        }
    }
    if word.len() == max_len {
        return None;
    }
    for (a, to) in &adj[last] {
        word.push(a.clone());
        states.push(*to);
        let found = search(adj, f, max_len, states, word);
        word.pop();
        states.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}
