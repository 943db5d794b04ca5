//! Weighted requirements and checking a revision against them.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{syntax, Error, Result};
use crate::lts::{strip_comment, Lts};
use crate::ltl::{check, parse_ltl, Formula, Verdict};
use crate::mlts::Mlts;
use crate::weaken::{weaken, OccupancyAutomaton};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Security,
    Functional,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Security => "security",
            Kind::Functional => "functional",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Requirement {
    pub id: String,
    pub kind: Kind,
    pub weight: u32,
    pub formula: Formula,
}

impl Requirement {
    pub fn new(id: impl Into<String>, kind: Kind, weight: u32, formula: Formula) -> Result<Self> {
        if weight == 0 {
            return Err(Error::Param("requirement weights must be positive".into()));
        }
        if !formula.is_safety() {
            return Err(Error::NonSafety(formula.to_string()));
        }
        Ok(Self {
            id: id.into(),
            kind,
            weight,
            formula,
        })
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "req {} kind={} weight={}: {}",
            self.id, self.kind, self.weight, self.formula
        )
    }
}

/// Parses `req <id> kind=<security|functional> weight=<int>: <LTL>` lines.
pub fn parse_requirements(source: &str) -> Result<Vec<Requirement>> {
    let mut out: Vec<Requirement> = Vec::new();
    let mut ids = HashSet::new();
    for (lineno, raw) in source.lines().enumerate() {
        let line_no = lineno + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let col = line.len() - line.trim_start().len() + 1;
        let Some((head, ltl)) = line.split_once(':') else {
            return Err(syntax(line_no, col, "expected `req <id> kind=.. weight=..: <LTL>`"));
        };
        let words: Vec<&str> = head.split_whitespace().collect();
        let (id, kind, weight) = match words.as_slice() {
            ["req", id, kind, weight] => (*id, *kind, *weight),
            _ => return Err(syntax(line_no, col, "expected `req <id> kind=.. weight=..`")),
        };
        let kind = match kind {
            "kind=security" => Kind::Security,
            "kind=functional" => Kind::Functional,
            k => return Err(syntax(line_no, col, format!("unknown kind `{k}`"))),
        };
        let weight = weight
            .strip_prefix("weight=")
            .and_then(|w| w.parse::<u32>().ok())
            .filter(|&w| w > 0)
            .ok_or_else(|| syntax(line_no, col, format!("bad weight `{weight}`")))?;
        let ltl_col = head.len() + 2;
        let formula = parse_ltl(ltl).map_err(|e| match e {
            Error::Syntax { pos, msg } => syntax(line_no, ltl_col + pos.column - 1, msg),
            e => e,
        })?;
        if !formula.is_safety() {
            return Err(Error::NonSafety(format!("{id}: {formula}")));
        }
        if !ids.insert(id.to_owned()) {
            return Err(syntax(line_no, col, format!("duplicate requirement id `{id}`")));
        }
        out.push(Requirement {
            id: id.to_owned(),
            kind,
            weight,
            formula,
        });
    }
    Ok(out)
}

/// Which model a requirement of each kind is checked on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CheckPolicy {
    /// Check functional requirements on the weakened model as well.
    pub functional_on_weakened: bool,
}

/// The two models a revision is checked on: its chain and the chain
/// composed with the occupancy automaton.
#[derive(Debug, Clone)]
pub struct RevisionModels {
    pub chain: Lts,
    pub weakened: Lts,
}

impl RevisionModels {
    pub fn build(rev: &Mlts, occ: &OccupancyAutomaton) -> Result<Self> {
        let chain = rev.to_lts();
        let weakened = weaken(&chain, occ)?;
        Ok(Self { chain, weakened })
    }

    pub fn check(&self, r: &Requirement, policy: CheckPolicy) -> Result<Verdict> {
        match (r.kind, policy.functional_on_weakened) {
            (Kind::Security, _) | (Kind::Functional, true) => check(&self.weakened, &r.formula),
            (Kind::Functional, false) => check(&self.chain, &r.formula),
        }
    }
}

/// Security requirements are checked on the weakened revision, functional
/// ones on the bare chain.
pub fn check_requirement(rev: &Mlts, r: &Requirement, occ: &OccupancyAutomaton) -> Result<Verdict> {
    match r.kind {
        Kind::Security => check(&weaken(&rev.to_lts(), occ)?, &r.formula),
        Kind::Functional => check(&rev.to_lts(), &r.formula),
    }
}

/// Sum of all requirement weights.
pub fn total_weight(reqs: &[Requirement]) -> u32 {
    reqs.iter().map(|r| r.weight).sum()
}
