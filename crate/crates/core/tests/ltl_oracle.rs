use proptest::prelude::*;
use revkit::ltl::progress::FALSE;
use revkit::ltl::{check, check_with_stats, parse_ltl, progression_bound, Formula, Progressor};
use revkit::lts::Lts;
use revkit_testkit::lasso::{completed_adjacency, eval, find_violation};
use revkit_testkit::random::{random_lts, random_safety_formula, rng};

const ALPHABET: [&str; 4] = ["a", "b", "u.a", "mu.b"];
const ATOMS: [&str; 5] = ["a", "b", "u.a", "mu.b", "c"];

/// Lasso length budget: long enough to close a loop after any
/// counterexample the checker reports, and a few steps past |S| otherwise.
fn oracle_bound(m: &Lts, cex: Option<&Vec<String>>) -> usize {
    m.num_states() + cex.map_or(4, |c| c.len().max(4))
}

fn is_path(m: &Lts, trace: &[String]) -> bool {
    let adj = completed_adjacency(m);
    let mut current = vec![m.initial()];
    for a in trace {
        let mut next: Vec<usize> = current
            .iter()
            .flat_map(|&s| adj[s].iter().filter(|(b, _)| b == a).map(|&(_, to)| to))
            .collect();
        next.sort_unstable();
        next.dedup();
        current = next;
    }
    !current.is_empty()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn agrees_with_lasso_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_lts(&mut r, 8, &ALPHABET);
        let f = random_safety_formula(&mut r, 3, &ATOMS);
        let v = check(&m, &f).unwrap();
        let witness = find_violation(&m, &f, oracle_bound(&m, v.counterexample.as_ref()));
        prop_assert_eq!(v.satisfied, witness.is_none(), "{} on {}", f, m);
        if let Some(cex) = v.counterexample {
            prop_assert!(is_path(&m, &cex));
            let mut p = Progressor::new(&f).unwrap();
            prop_assert_eq!(*p.replay(cex.iter().map(String::as_str)).last().unwrap(), FALSE);
        }
    }

    #[test]
    fn conjunction_is_monotone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_lts(&mut r, 6, &ALPHABET);
        let f = random_safety_formula(&mut r, 2, &ATOMS);
        let g = random_safety_formula(&mut r, 2, &ATOMS);
        let both = check(&m, &Formula::and(f.clone(), g.clone())).unwrap().satisfied;
        prop_assert_eq!(both, check(&m, &f).unwrap().satisfied && check(&m, &g).unwrap().satisfied);
    }

    #[test]
    fn exploration_within_closure_bound(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = random_lts(&mut r, 8, &ALPHABET);
        let f = random_safety_formula(&mut r, 3, &ATOMS);
        let (_, stats) = check_with_stats(&m, &f).unwrap();
        prop_assert!(stats.formulas as u64 <= progression_bound(stats.closure));
        prop_assert!(stats.pairs <= m.num_states() * stats.formulas.max(1));
    }

    #[test]
    fn nnf_preserves_lasso_semantics(seed in any::<u64>()) {
        let mut r = rng(seed);
        let f = revkit_testkit::random::random_formula(&mut r, 3, &ATOMS);
        let words: [(&[&str], usize); 3] = [(&["a", "b", "u.a"], 1), (&["mu.b"], 0), (&["u.a", "c", "_end"], 2)];
        for (w, l) in words {
            prop_assert_eq!(eval(&f, w, l), eval(&f.nnf(), w, l));
        }
        prop_assert_eq!(f.nnf().nnf(), f.nnf());
    }
}

#[test]
fn single_transition_completion() {
    let m = Lts::from_triples("M", 2, 0, [(0, "a", 1)]).unwrap();
    let f = parse_ltl("G(a -> X !a)").unwrap();
    assert!(check(&m, &f).unwrap().satisfied);
    assert!(find_violation(&m, &f, 6).is_none());
}
