//! Selecting revisions from a verdict table: the all-requirements set,
//! weighted degradation, and reports with ordering lints.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{syntax, Error, Result};
use crate::lts::strip_comment;
use crate::mlts::Mlts;
use crate::pipeline::RevisionVerdicts;
use crate::recompose::{apply, Permutation};
use crate::requirement::{total_weight, Requirement};

/// Sum of the weights of the requirements a row satisfies.
pub fn payoff(verdicts: &RevisionVerdicts, reqs: &[Requirement], row: usize) -> u32 {
    reqs.iter()
        .zip(&verdicts.verdicts[row])
        .filter(|(_, t)| t.is_true())
        .map(|(r, _)| r.weight)
        .sum()
}

fn check_columns(verdicts: &RevisionVerdicts, reqs: &[Requirement]) -> Result<()> {
    let ids: Vec<&str> = reqs.iter().map(|r| r.id.as_str()).collect();
    if verdicts.requirement_ids.iter().map(String::as_str).ne(ids.iter().copied()) {
        return Err(Error::Param(format!(
            "verdict columns [{}] do not match requirements [{}]",
            verdicts.requirement_ids.join(","),
            ids.join(",")
        )));
    }
    Ok(())
}

fn ensure_relied_upon(verdicts: &RevisionVerdicts, row: usize, allow_predicted: bool) -> Result<()> {
    if allow_predicted {
        return Ok(());
    }
    match verdicts.verdicts[row].iter().position(|t| t.is_predicted()) {
        Some(j) => Err(Error::Unverified {
            req: verdicts.requirement_ids[j].clone(),
            perm: verdicts.revisions[row].to_string(),
        }),
        None => Ok(()),
    }
}

/// Rows true for every requirement, in enumeration order. Each returned row
/// must be free of unverified predictions unless `allow_predicted`.
pub fn eligible(verdicts: &RevisionVerdicts, reqs: &[Requirement], allow_predicted: bool) -> Result<Vec<usize>> {
    check_columns(verdicts, reqs)?;
    if !verdicts.verified && verdicts.has_predictions() && !allow_predicted {
        return Err(Error::Param(
            "verdicts contain unverified predictions; verify them or allow predicted verdicts".into(),
        ));
    }
    let rows = verdicts.all_true_rows();
    for &i in &rows {
        ensure_relied_upon(verdicts, i, allow_predicted)?;
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DegradationQuery {
    pub payoff_threshold: u32,
    /// Requirement ids that may be unsatisfied; `None` means all.
    pub waivable: Option<Vec<String>>,
    pub max_waived: Option<usize>,
}

impl DegradationQuery {
    pub fn threshold(payoff_threshold: u32) -> Self {
        Self {
            payoff_threshold,
            ..Default::default()
        }
    }

    pub fn validate(&self, reqs: &[Requirement]) -> Result<()> {
        let total = total_weight(reqs);
        if self.payoff_threshold > total {
            return Err(Error::Param(format!(
                "payoff threshold {} exceeds the total weight {total}",
                self.payoff_threshold
            )));
        }
        if let Some(w) = &self.waivable {
            if let Some(bad) = w.iter().find(|id| !reqs.iter().any(|r| &r.id == *id)) {
                return Err(Error::Param(format!("unknown waivable requirement `{bad}`")));
            }
        }
        Ok(())
    }

    fn admits(&self, verdicts: &RevisionVerdicts, reqs: &[Requirement], row: usize) -> bool {
        let waived: Vec<&str> = reqs
            .iter()
            .zip(&verdicts.verdicts[row])
            .filter(|(_, t)| !t.is_true())
            .map(|(r, _)| r.id.as_str())
            .collect();
        payoff(verdicts, reqs, row) >= self.payoff_threshold
            && self.max_waived.is_none_or(|m| waived.len() <= m)
            && self
                .waivable
                .as_ref()
                .is_none_or(|w| waived.iter().all(|id| w.iter().any(|x| x == id)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degraded {
    pub index: usize,
    pub permutation: String,
    pub payoff: u32,
    pub satisfied: Vec<String>,
    pub waived: Vec<String>,
}

/// Rows admitted by `q`, sorted by payoff descending, then fewest waived,
/// then enumeration index.
pub fn degrade(
    verdicts: &RevisionVerdicts,
    reqs: &[Requirement],
    q: &DegradationQuery,
    allow_predicted: bool,
) -> Result<Vec<Degraded>> {
    check_columns(verdicts, reqs)?;
    q.validate(reqs)?;
    let mut out = Vec::new();
    for row in candidate_rows(verdicts, reqs, q) {
        ensure_relied_upon(verdicts, row, allow_predicted)?;
        let (sat, waived): (Vec<_>, Vec<_>) = reqs.iter().zip(&verdicts.verdicts[row]).partition(|(_, t)| t.is_true());
        out.push(Degraded {
            index: row,
            permutation: verdicts.revisions[row].to_string(),
            payoff: payoff(verdicts, reqs, row),
            satisfied: sat.into_iter().map(|(r, _)| r.id.clone()).collect(),
            waived: waived.into_iter().map(|(r, _)| r.id.clone()).collect(),
        });
    }
    out.sort_by(|a, b| {
        b.payoff
            .cmp(&a.payoff)
            .then(a.waived.len().cmp(&b.waived.len()))
            .then(a.index.cmp(&b.index))
    });
    Ok(out)
}

/// Rows `q` admits under the current tags.
pub fn candidate_rows(verdicts: &RevisionVerdicts, reqs: &[Requirement], q: &DegradationQuery) -> Vec<usize> {
    (0..verdicts.len()).filter(|&i| q.admits(verdicts, reqs, i)).collect()
}

/// An ordering rule: flags revisions where `earlier` precedes `later` in
/// chain order of their modules' forward actions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lint {
    pub name: String,
    pub earlier: String,
    pub later: String,
}

/// Parses `lint <name>: <action> before <action>` lines.
pub fn parse_lints(source: &str) -> Result<Vec<Lint>> {
    let mut out = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        let col = line.len() - line.trim_start().len() + 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["lint", name, earlier, "before", later] if name.ends_with(':') && name.len() > 1 => out.push(Lint {
                name: name.trim_end_matches(':').to_owned(),
                earlier: (*earlier).to_owned(),
                later: (*later).to_owned(),
            }),
            _ => return Err(syntax(i + 1, col, "expected `lint <name>: <action> before <action>`")),
        }
    }
    Ok(out)
}

/// Names of the lints that fire on `rev`, plus `backward-at-head` when the
/// first module carries a backward action.
pub fn lint_revision(rev: &Mlts, lints: &[Lint]) -> Vec<String> {
    let mut fired = Vec::new();
    if rev.modules.first().is_some_and(|m| m.has_backward()) {
        fired.push("backward-at-head".to_owned());
    }
    for l in lints {
        if let (Some(a), Some(b)) = (rev.position_of_action(&l.earlier), rev.position_of_action(&l.later)) {
            if a < b {
                fired.push(l.name.clone());
            }
        }
    }
    fired
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub index: usize,
    pub permutation: String,
    pub payoff: u32,
    pub satisfied: Vec<String>,
    pub waived: Vec<String>,
    pub lints: Vec<String>,
    pub specification: String,
    pub chain: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Interpretation notes shown above the entries.
    pub header: Vec<String>,
    pub entries: Vec<ReportEntry>,
}

pub fn report(selected: &[Degraded], base: &Mlts, lints: &[Lint], threshold: Option<u32>) -> Result<Report> {
    let mut header = vec![
        "payoff is the sum of the weights of the satisfied requirements".to_owned(),
    ];
    if let Some(t) = threshold {
        header.push(format!("revisions listed have payoff >= {t}"));
    }
    let entries = selected
        .iter()
        .map(|d| {
            let p: Permutation = d.permutation.parse()?;
            let rev = apply(base, &p);
            Ok(ReportEntry {
                index: d.index,
                permutation: d.permutation.clone(),
                payoff: d.payoff,
                satisfied: d.satisfied.clone(),
                waived: d.waived.clone(),
                lints: lint_revision(&rev, lints),
                specification: rev.to_string(),
                chain: rev.to_lts().to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { header, entries })
}

impl Report {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for h in &self.header {
            s.push_str(&format!("# {h}\n"));
        }
        for e in &self.entries {
            s.push_str(&format!(
                "\nrevision {} [{}] payoff={} waived={{{}}}",
                e.index,
                e.permutation,
                e.payoff,
                e.waived.join(",")
            ));
            if !e.lints.is_empty() {
                s.push_str(&format!(" lints={}", e.lints.join(",")));
            }
            s.push('\n');
            let ids: BTreeSet<&str> = e.satisfied.iter().map(String::as_str).collect();
            s.push_str(&format!("satisfied: {}\n", ids.into_iter().collect::<Vec<_>>().join(",")));
            s.push_str(&e.specification);
        }
        s
    }
}
