//! Seeded random models and formulas.

use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg32;
use revkit::ltl::Formula;
use revkit::lts::Lts;

pub fn rng(seed: u64) -> Pcg32 {
    Pcg32::seed_from_u64(seed)
}

/// Sparse LTS with `1..=max_states` states, out-degree 0..=2 (state 0 has
/// at least one successor), actions drawn from `alphabet`.
pub fn random_lts(rng: &mut Pcg32, max_states: usize, alphabet: &[&str]) -> Lts {
    let n = rng.random_range(1..=max_states);
    let mut triples = Vec::new();
    for s in 0..n {
        let lo = usize::from(s == 0);
        let degree = rng.random_range(lo..=2);
        for _ in 0..degree {
            let a = alphabet[rng.random_range(0..alphabet.len())];
            let to = rng.random_range(0..n);
            if !triples.iter().any(|&(f, b, t)| f == s && b == a && t == to) {
                triples.push((s, a, to));
            }
        }
    }
    Lts::from_triples("R", n, 0, triples).expect("valid random lts")
}

/// Random formula of operator depth at most `depth` over `atoms`, all
/// operators included.
pub fn random_formula(rng: &mut Pcg32, depth: usize, atoms: &[&str]) -> Formula {
    if depth == 0 || rng.random_range(0..5) == 0 {
        return match rng.random_range(0..12) {
            0 => Formula::True,
            1 => Formula::False,
            _ => Formula::atom(atoms[rng.random_range(0..atoms.len())]),
        };
    }
    let op = rng.random_range(0..14);
    let mut sub = || Box::new(random_formula(rng, depth - 1, atoms));
    match op {
        0 | 1 => Formula::Not(sub()),
        2 => Formula::And(sub(), sub()),
        3 => Formula::Or(sub(), sub()),
        4 => Formula::Implies(sub(), sub()),
        5 => Formula::Iff(sub(), sub()),
        6 => Formula::Next(sub()),
        7 => Formula::Until(sub(), sub()),
        8 => Formula::WeakUntil(sub(), sub()),
        9 => Formula::Release(sub(), sub()),
        10 => Formula::StrongRelease(sub(), sub()),
        11 => Formula::Finally(sub()),
        _ => Formula::Globally(sub()),
    }
}

/// Rejection-samples a syntactically safe formula.
pub fn random_safety_formula(rng: &mut Pcg32, depth: usize, atoms: &[&str]) -> Formula {
    loop {
        let f = random_formula(rng, depth, atoms);
        if f.is_safety() {
            return f;
        }
    }
}

/// Random valid mLTS with `1..=max_modules` modules: forward `f<i>`, and
/// optionally `back`, `reset -> k` and `jump -> f<j>`.
pub fn random_mlts(rng: &mut Pcg32, max_modules: usize) -> revkit::mlts::Mlts {
    use revkit::mlts::{DirectedAction, Direction, Module, DEFAULT_AGENTS};
    let n = rng.random_range(1..=max_modules);
    let modules = (0..n)
        .map(|i| {
            let mut actions = vec![DirectedAction::new(format!("f{i}"), Direction::Forward)];
            if rng.random_range(0..3) == 0 {
                actions.push(DirectedAction::new("back", Direction::Backward));
            }
            if rng.random_range(0..4) == 0 {
                actions.push(DirectedAction::new("reset", Direction::StateTargeted(rng.random_range(0..=n))));
            }
            if rng.random_range(0..5) == 0 {
                let j = rng.random_range(0..n);
                actions.push(DirectedAction::new("jump", Direction::ModuleTargeted(format!("f{j}"))));
            }
            let k = actions.len();
            actions.rotate_left(rng.random_range(0..k));
            Module {
                id: format!("m{i}"),
                actions,
            }
        })
        .collect();
    revkit::mlts::Mlts::new(
        "Random",
        modules,
        (DEFAULT_AGENTS.0.to_owned(), DEFAULT_AGENTS.1.to_owned()),
    )
    .expect("valid random mlts")
}

/// Uniformly random permutation of `0..n`.
pub fn random_permutation(rng: &mut Pcg32, n: usize) -> revkit::recompose::Permutation {
    use rand::seq::SliceRandom;
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    revkit::recompose::Permutation::new(v).expect("bijection")
}
