//! Module-based recomposition: the full permutation space of a chain's
//! modules, in lexicographic or seeded-shuffle order.
//!
//! Shuffles use PCG32 (`Lcg64Xsh32`, 64-bit state) seeded through
//! `SeedableRng::seed_from_u64`, applied as a Fisher-Yates shuffle over the
//! materialized lexicographic list.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlts::Mlts;

/// `ordering[i]` is the original index of the module placed at position `i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(ordering: Vec<usize>) -> Result<Self> {
        let n = ordering.len();
        let mut seen = vec![false; n];
        for &i in &ordering {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Permutation(format!("{ordering:?} is not a bijection on 0..{n}")));
            }
        }
        Ok(Self(ordering))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i == x)
    }

    /// Permutation `r` with `apply(apply(b, self), q) == apply(b, r)`,
    /// i.e. `r[i] = self[q[i]]`.
    pub fn then(&self, q: &Permutation) -> Permutation {
        Permutation(q.0.iter().map(|&i| self.0[i]).collect())
    }

    /// 1-based feature encoding: position `i` holds `ordering[i] + 1`.
    pub fn features(&self) -> Vec<f64> {
        self.0.iter().map(|&i| (i + 1) as f64).collect()
    }

    /// Lexicographic rank among all permutations of the same length.
    pub fn rank(&self) -> u64 {
        let n = self.0.len();
        let mut rank = 0u64;
        for i in 0..n {
            let smaller = self.0[i + 1..].iter().filter(|&&x| x < self.0[i]).count() as u64;
            rank += smaller * factorial((n - 1 - i) as u64);
        }
        rank
    }

    /// Rearranges the lexicographic successor in place; false at the last
    /// permutation.
    pub fn advance(&mut self) -> bool {
        next_permutation(&mut self.0)
    }
}

fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| (i + 1).to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for Permutation {
    type Err = Error;

    /// Parses comma-separated 1-based positions such as `3,1,2`.
    fn from_str(s: &str) -> Result<Self> {
        let ordering = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .ok()
                    .filter(|&v| v >= 1)
                    .map(|v| v - 1)
                    .ok_or_else(|| Error::Permutation(format!("bad entry `{p}` in `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(ordering)
    }
}

impl From<Permutation> for String {
    fn from(p: Permutation) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Permutation {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Standard in-place lexicographic successor.
pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "seed")]
pub enum Order {
    Lexicographic,
    Shuffled(u64),
}

/// Largest module count for which shuffled order is materialized.
pub const MAX_SHUFFLE_MODULES: usize = 9;

/// `n!` for `1 <= n <= 20`.
pub fn revision_count(n_modules: usize) -> Result<u64> {
    if n_modules == 0 || n_modules > 20 {
        return Err(Error::TooLarge(n_modules, "revision counting (1..=20)"));
    }
    Ok(factorial(n_modules as u64))
}

/// Streaming lexicographic enumeration from the identity.
#[derive(Debug, Clone)]
pub struct Lexicographic {
    next: Option<Permutation>,
}

impl Lexicographic {
    pub fn new(n: usize) -> Self {
        Self {
            next: Some(Permutation::identity(n)),
        }
    }
}

impl Iterator for Lexicographic {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.next.take()?;
        let mut succ = cur.clone();
        if succ.advance() {
            self.next = Some(succ);
        }
        Some(cur)
    }
}

/// Seeded shuffle of `items`.
pub fn shuffle<T>(items: &mut [T], seed: u64) {
    let mut rng = Pcg32::seed_from_u64(seed);
    items.shuffle(&mut rng);
}

/// Every permutation of `n` modules in the requested order.
pub fn enumerate(n: usize, order: Order) -> Result<Box<dyn Iterator<Item = Permutation>>> {
    if n == 0 {
        return Err(Error::Permutation("at least one module is required".into()));
    }
    match order {
        Order::Lexicographic => Ok(Box::new(Lexicographic::new(n))),
        Order::Shuffled(seed) => {
            if n > MAX_SHUFFLE_MODULES {
                return Err(Error::TooLarge(n, "shuffled enumeration"));
            }
            let mut all: Vec<Permutation> = Lexicographic::new(n).collect();
            shuffle(&mut all, seed);
            Ok(Box::new(all.into_iter()))
        }
    }
}

/// Reorders `base`'s modules by `p`. Directions are untouched: state targets
/// stay positional and module targets follow their module.
pub fn apply(base: &Mlts, p: &Permutation) -> Mlts {
    assert_eq!(p.len(), base.len(), "permutation length must match module count");
    Mlts {
        name: base.name.clone(),
        modules: p.0.iter().map(|&i| base.modules[i].clone()).collect(),
        agents: base.agents.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn counts() {
        assert_eq!(revision_count(1).unwrap(), 1);
        assert_eq!(revision_count(5).unwrap(), 120);
        assert_eq!(revision_count(7).unwrap(), 5040);
        assert_eq!(revision_count(20).unwrap(), 2_432_902_008_176_640_000);
        assert!(revision_count(21).is_err());
        assert!(revision_count(0).is_err());
    }

    #[test]
    fn lexicographic_is_complete_and_ordered() {
        for n in 1..=6 {
            let all: Vec<Permutation> = enumerate(n, Order::Lexicographic).unwrap().collect();
            assert_eq!(all.len() as u64, revision_count(n).unwrap());
            assert!(all.windows(2).all(|w| w[0] < w[1]));
            for (i, p) in all.iter().enumerate() {
                assert_eq!(p.rank(), i as u64);
            }
        }
        let one: Vec<_> = enumerate(1, Order::Lexicographic).unwrap().collect();
        assert_eq!(one, vec![Permutation::identity(1)]);
    }

    #[test]
    fn shuffled_is_a_seeded_permutation_of_the_space() {
        let a: Vec<_> = enumerate(5, Order::Shuffled(7)).unwrap().collect();
        let b: Vec<_> = enumerate(5, Order::Shuffled(7)).unwrap().collect();
        let c: Vec<_> = enumerate(5, Order::Shuffled(8)).unwrap().collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.iter().collect::<HashSet<_>>().len(), 120);
        assert!(enumerate(10, Order::Shuffled(0)).is_err());
    }

    #[test]
    fn serialization() {
        let p: Permutation = "3,1,2".parse().unwrap();
        assert_eq!(p.as_slice(), &[2, 0, 1]);
        assert_eq!(p.to_string(), "3,1,2");
        assert_eq!(p.features(), vec![3.0, 1.0, 2.0]);
        assert!("1,1,2".parse::<Permutation>().is_err());
        assert!("0,1".parse::<Permutation>().is_err());
    }
}
