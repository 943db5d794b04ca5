//! Abstraction-based revision coverage: every revision obtained by splitting
//! the module chain into a subset `L` and its complement and merging the two
//! order-preserving subsequences. Subsets are visited by size then
//! lexicographically, sizes `1..=N/2`; at `|L| = N/2` only subsets holding
//! module 0 are visited since the complement split yields the same merges.

use std::ops::RangeInclusive;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mlts::Mlts;
use crate::recompose::{apply, Permutation};
use crate::requirement::{CheckPolicy, Requirement, RevisionModels};
use crate::weaken::OccupancyAutomaton;

/// Reference coverage counts: per `N`, `(non_redundant, generated)` by subset size, then the row sum.
pub const REFERENCE_TABLE: &[(usize, &[(u64, u64)], (u64, u64))] = &[
    (4, &[(10, 16), (4, 18)], (14, 34)),
    (5, &[(17, 25), (25, 100)], (42, 125)),
    (6, &[(26, 36), (79, 225), (27, 200)], (132, 461)),
    (7, &[(37, 49), (188, 441), (204, 1225)], (429, 1715)),
    (8, &[(50, 64), (380, 784), (766, 3136), (234, 2450)], (1430, 6434)),
    (9, &[(65, 81), (689, 1296), (2158, 7056), (1950, 15876)], (4862, 24309)),
];

/// All order-preserving merges of `left` and `right`, taking from `left`
/// first at every step.
pub fn interleavings(left: &[usize], right: &[usize]) -> Result<Vec<Permutation>> {
    let n = left.len() + right.len();
    let mut seen = vec![false; n];
    for part in [left, right] {
        if part.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Permutation(format!("{part:?} is not ascending")));
        }
        for &i in part {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Permutation(format!(
                    "{left:?} and {right:?} do not partition 0..{n}"
                )));
            }
        }
    }
    let mut out = Vec::new();
    let mut buf = Vec::with_capacity(n);
    merge(left, right, &mut buf, &mut out);
    Ok(out)
}

fn merge(left: &[usize], right: &[usize], buf: &mut Vec<usize>, out: &mut Vec<Permutation>) {
    if left.is_empty() && right.is_empty() {
        out.push(Permutation::new(buf.clone()).expect("merge of a partition"));
        return;
    }
    if let Some((&h, rest)) = left.split_first() {
        buf.push(h);
        merge(rest, right, buf, out);
        buf.pop();
    }
    if let Some((&h, rest)) = right.split_first() {
        buf.push(h);
        merge(left, rest, buf, out);
        buf.pop();
    }
}

/// Subsets in coverage order.
#[derive(Debug, Clone)]
pub struct SubsetCursor {
    n: usize,
    size: usize,
    current: Option<Vec<usize>>,
}

impl SubsetCursor {
    pub fn new(n: usize) -> Self {
        let mut c = Self {
            n,
            size: 1,
            current: None,
        };
        c.current = c.first_of_size(1);
        c
    }

    fn first_of_size(&self, k: usize) -> Option<Vec<usize>> {
        (k >= 1 && 2 * k <= self.n).then(|| (0..k).collect())
    }

    fn admissible(&self, s: &[usize]) -> bool {
        2 * s.len() != self.n || s[0] == 0
    }

    fn next_combination(&self, s: &mut [usize]) -> bool {
        let k = s.len();
        for i in (0..k).rev() {
            if s[i] < self.n - k + i {
                s[i] += 1;
                for j in i + 1..k {
                    s[j] = s[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for SubsetCursor {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        loop {
            let cur = self.current.clone()?;
            let mut succ = cur.clone();
            self.current = if self.next_combination(&mut succ) {
                Some(succ)
            } else {
                self.size += 1;
                self.first_of_size(self.size)
            };
            if self.admissible(&cur) {
                return Some(cur);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Emission {
    pub permutation: Permutation,
    pub subset_size: usize,
    /// First time this permutation appears in the stream.
    pub first: bool,
}

/// The redundant coverage stream with global first-appearance flags.
pub fn oasis_stream(n: usize) -> impl Iterator<Item = Emission> {
    let total = if n <= 12 { (1..=n).product::<usize>() } else { 0 };
    let mut seen = vec![false; total];
    SubsetCursor::new(n).flat_map(move |subset| {
        let complement: Vec<usize> = (0..n).filter(|i| !subset.contains(i)).collect();
        let size = subset.len();
        interleavings(&subset, &complement)
            .expect("subset and complement partition the modules")
            .into_iter()
            .map(move |p| (p, size))
    })
    .map(move |(permutation, subset_size)| {
        let rank = permutation.rank() as usize;
        let first = !std::mem::replace(&mut seen[rank], true);
        Emission {
            permutation,
            subset_size,
            first,
        }
    })
}

/// The non-redundant coverage, in order of first appearance.
pub fn common_coverage(n: usize) -> Vec<Permutation> {
    oasis_stream(n)
        .filter(|e| e.first)
        .map(|e| e.permutation)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub subset_size: usize,
    pub generated: u64,
    pub non_redundant: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OlsFit {
    pub bin_width: usize,
    pub bins: usize,
    pub slope: f64,
    pub intercept: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub n_modules: usize,
    pub cells: Vec<Cell>,
    pub generated: u64,
    pub non_redundant: u64,
    /// 1-based stream positions of first appearances.
    #[serde(skip)]
    pub first_positions: Vec<usize>,
    pub median_first: Option<usize>,
    pub last_first: Option<usize>,
    pub fit: Option<OlsFit>,
}

/// Ordinary least squares of `y` on `x`; `None` when `x` has no spread.
pub fn ols(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Bin width for first-appearance density: `10^(digits - 3)`, at least 1
/// (so 24309 emissions are binned by 100).
pub fn bin_width(total: usize) -> usize {
    let digits = total.max(1).to_string().len();
    10usize.pow(digits.saturating_sub(3) as u32)
}

/// First-appearance counts per full bin, fitted by OLS over bin index.
pub fn density_fit(first_positions: &[usize], total: usize) -> Option<OlsFit> {
    let width = bin_width(total);
    let bins = total / width;
    let mut counts = vec![0usize; bins];
    for &p in first_positions {
        let b = (p - 1) / width;
        if b < bins {
            counts[b] += 1;
        }
    }
    let points: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as f64, c as f64))
        .collect();
    ols(&points).map(|(slope, intercept)| OlsFit {
        bin_width: width,
        bins,
        slope,
        intercept,
    })
}

pub fn coverage_stats(n: usize) -> CoverageStats {
    let mut cells: Vec<Cell> = Vec::new();
    let mut first_positions = Vec::new();
    let mut total = 0usize;
    for (i, e) in oasis_stream(n).enumerate() {
        total += 1;
        if cells.last().map(|c| c.subset_size) != Some(e.subset_size) {
            cells.push(Cell {
                subset_size: e.subset_size,
                generated: 0,
                non_redundant: 0,
            });
        }
        let cell = cells.last_mut().expect("pushed above");
        cell.generated += 1;
        if e.first {
            cell.non_redundant += 1;
            first_positions.push(i + 1);
        }
    }
    let k = first_positions.len();
    CoverageStats {
        n_modules: n,
        generated: cells.iter().map(|c| c.generated).sum(),
        non_redundant: cells.iter().map(|c| c.non_redundant).sum(),
        cells,
        median_first: (k > 0).then(|| first_positions[k.div_ceil(2) - 1]),
        last_first: first_positions.last().copied(),
        fit: density_fit(&first_positions, total),
        first_positions,
    }
}

/// Coverage statistics for every `N` in range.
pub fn table1(range: RangeInclusive<usize>) -> Vec<CoverageStats> {
    range.map(coverage_stats).collect()
}

/// Cells that differ from the reference table, as human-readable lines.
/// Rows outside the reference range are not compared.
pub fn compare_with_reference(rows: &[CoverageStats]) -> Vec<String> {
    let mut diffs = Vec::new();
    for row in rows {
        let Some((_, cells, sum)) = REFERENCE_TABLE.iter().find(|(n, _, _)| *n == row.n_modules) else {
            continue;
        };
        if row.cells.len() != cells.len() {
            diffs.push(format!(
                "N={}: {} columns, expected {}",
                row.n_modules,
                row.cells.len(),
                cells.len()
            ));
        }
        for (got, &(nr, gen)) in row.cells.iter().zip(cells.iter()) {
            if (got.non_redundant, got.generated) != (nr, gen) {
                diffs.push(format!(
                    "N={} |L|={}: {}/{}, expected {nr}/{gen}",
                    row.n_modules, got.subset_size, got.non_redundant, got.generated
                ));
            }
        }
        if (row.non_redundant, row.generated) != *sum {
            diffs.push(format!(
                "N={} sum: {}/{}, expected {}/{}",
                row.n_modules, row.non_redundant, row.generated, sum.0, sum.1
            ));
        }
    }
    diffs
}

#[derive(Debug, Clone, PartialEq)]
pub struct OasisOutcome {
    pub found: Option<Permutation>,
    /// Stream positions examined, redundant emissions included.
    pub checks_performed: usize,
    pub elapsed: Duration,
}

/// Sequential search in coverage order: every emission, redundant or not,
/// costs one check against all requirements.
pub fn oasis_search(
    base: &Mlts,
    reqs: &[Requirement],
    occ: &OccupancyAutomaton,
    policy: CheckPolicy,
) -> Result<OasisOutcome> {
    let start = Instant::now();
    let mut checks = 0;
    for e in oasis_stream(base.len()) {
        checks += 1;
        let rev = apply(base, &e.permutation);
        let models = RevisionModels::build(&rev, occ)?;
        let mut ok = true;
        for r in reqs {
            if !models.check(r, policy)?.satisfied {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(OasisOutcome {
                found: Some(e.permutation),
                checks_performed: checks,
                elapsed: start.elapsed(),
            });
        }
    }
    Ok(OasisOutcome {
        found: None,
        checks_performed: checks,
        elapsed: start.elapsed(),
    })
}
