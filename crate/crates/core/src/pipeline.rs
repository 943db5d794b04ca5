//! Accelerated checking: shuffle the revision set, model-check a leading
//! slice, train one classifier per requirement on it, predict the rest and
//! verify predicted-eligible revisions.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ml::dataset::csv_err;
use crate::ml::{evaluate, train_gbt, Classifier, FeatureRow, GbtParams, Metrics};
use crate::mlts::Mlts;
use crate::oasis::common_coverage;
use crate::recompose::{apply, enumerate, shuffle, Order, Permutation};
use crate::requirement::{CheckPolicy, Requirement, RevisionModels};
use crate::weaken::OccupancyAutomaton;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coverage {
    /// All `N!` permutations in lexicographic order.
    Full,
    /// First appearances of the OASIS stream, in stream order.
    Common,
}

impl FromStr for Coverage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Coverage::Full),
            "common" => Ok(Coverage::Common),
            _ => Err(Error::Param(format!("unknown coverage `{s}` (full|common)"))),
        }
    }
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Coverage::Full => "full",
            Coverage::Common => "common",
        })
    }
}

/// Revisions of an `n`-module chain under `coverage`, in enumeration order.
pub fn coverage_revisions(n: usize, coverage: Coverage) -> Result<Vec<Permutation>> {
    match coverage {
        Coverage::Full => Ok(enumerate(n, Order::Lexicographic)?.collect()),
        Coverage::Common => {
            if !(4..=9).contains(&n) {
                return Err(Error::Param(format!("common coverage needs 4..=9 modules, got {n}")));
            }
            Ok(common_coverage(n))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub tau: f64,
    pub seed: u64,
    pub verify: bool,
    pub coverage: Coverage,
    pub gbt: GbtParams,
    pub policy: CheckPolicy,
    /// Worker threads for the checking phases; output does not depend on it.
    pub jobs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            tau: 0.3,
            seed: 0,
            verify: true,
            coverage: Coverage::Full,
            gbt: GbtParams::default(),
            policy: CheckPolicy::default(),
            jobs: 1,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Param(format!("tau {} outside (0, 1]", self.tau)));
        }
        if self.jobs == 0 {
            return Err(Error::Param("jobs must be at least 1".into()));
        }
        self.gbt.validate()
    }

    /// Size of the model-checked training slice.
    pub fn slice_len(&self, size: usize) -> usize {
        ((self.tau * size as f64).ceil() as usize).clamp(1, size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictTag {
    CheckedTrue,
    CheckedFalse,
    PredictedTrue,
    PredictedFalse,
    VerifiedTrue,
    VerifiedFalse,
}

impl VerdictTag {
    pub fn checked(satisfied: bool) -> Self {
        if satisfied {
            VerdictTag::CheckedTrue
        } else {
            VerdictTag::CheckedFalse
        }
    }

    pub fn is_true(self) -> bool {
        matches!(
            self,
            VerdictTag::CheckedTrue | VerdictTag::PredictedTrue | VerdictTag::VerifiedTrue
        )
    }

    pub fn is_predicted(self) -> bool {
        matches!(self, VerdictTag::PredictedTrue | VerdictTag::PredictedFalse)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerdictTag::CheckedTrue => "checked-true",
            VerdictTag::CheckedFalse => "checked-false",
            VerdictTag::PredictedTrue => "predicted-true",
            VerdictTag::PredictedFalse => "predicted-false",
            VerdictTag::VerifiedTrue => "verified-true",
            VerdictTag::VerifiedFalse => "verified-false",
        }
    }
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VerdictTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "checked-true" => VerdictTag::CheckedTrue,
            "checked-false" => VerdictTag::CheckedFalse,
            "predicted-true" => VerdictTag::PredictedTrue,
            "predicted-false" => VerdictTag::PredictedFalse,
            "verified-true" => VerdictTag::VerifiedTrue,
            "verified-false" => VerdictTag::VerifiedFalse,
            _ => return Err(Error::Param(format!("unknown verdict tag `{s}`"))),
        })
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1e3)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?.max(0.0) / 1e3))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Wall time spent model checking.
    #[serde(rename = "t_mc_ms", with = "millis")]
    pub t_mc: Duration,
    /// Wall time spent training and predicting.
    #[serde(rename = "t_ml_ms", with = "millis")]
    pub t_ml: Duration,
    /// Individual requirement checks performed.
    pub checks: usize,
}

/// Verdicts per revision (rows, in enumeration order) and requirement
/// (columns, in requirement-file order).
#[derive(Debug, Clone, PartialEq)]
pub struct RevisionVerdicts {
    pub requirement_ids: Vec<String>,
    pub revisions: Vec<Permutation>,
    pub verdicts: Vec<Vec<VerdictTag>>,
    /// Predicted probabilities for predicted entries.
    pub probabilities: Vec<Vec<Option<f64>>>,
    /// Row indices of the model-checked slice, in shuffled order.
    pub training: Vec<usize>,
    /// Requirements whose slice was single-class and were checked exhaustively.
    pub fallbacks: Vec<String>,
    /// Whether predicted-eligible rows were verified.
    pub verified: bool,
    pub timing: Timing,
}

impl RevisionVerdicts {
    pub fn len(&self) -> usize {
        self.revisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.revisions.is_empty()
    }

    pub fn row_satisfied(&self, row: usize) -> bool {
        self.verdicts[row].iter().all(|t| t.is_true())
    }

    /// Rows true for every requirement, by tag.
    pub fn all_true_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.row_satisfied(i)).collect()
    }

    pub fn has_predictions(&self) -> bool {
        self.verdicts.iter().flatten().any(|t| t.is_predicted())
    }

    /// Same rows, requirements and tags.
    pub fn same_verdicts(&self, other: &RevisionVerdicts) -> bool {
        self.requirement_ids == other.requirement_ids
            && self.revisions == other.revisions
            && self.verdicts == other.verdicts
    }

    /// Model-checks every predicted entry of `rows`, upgrading it to verified.
    pub fn verify_rows(
        &mut self,
        rows: &[usize],
        base: &Mlts,
        reqs: &[Requirement],
        occ: &OccupancyAutomaton,
        policy: CheckPolicy,
        jobs: usize,
    ) -> Result<usize> {
        self.ensure_matches(base, reqs)?;
        let pending: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&i| self.verdicts[i].iter().any(|t| t.is_predicted()))
            .collect();
        let start = Instant::now();
        let masks: Vec<Vec<bool>> = pending
            .iter()
            .map(|&i| self.verdicts[i].iter().map(|t| t.is_predicted()).collect())
            .collect();
        let results = par_map(pending.len(), jobs, |k| {
            check_revision(base, &self.revisions[pending[k]], reqs, occ, policy, Some(&masks[k]))
        })?;
        let mut checks = 0;
        for (k, &row) in pending.iter().enumerate() {
            for (j, v) in results[k].iter().enumerate() {
                if let Some(sat) = v {
                    checks += 1;
                    self.verdicts[row][j] = if *sat {
                        VerdictTag::VerifiedTrue
                    } else {
                        VerdictTag::VerifiedFalse
                    };
                }
            }
        }
        self.timing.t_mc += start.elapsed();
        self.timing.checks += checks;
        Ok(pending.len())
    }

    fn ensure_matches(&self, base: &Mlts, reqs: &[Requirement]) -> Result<()> {
        let ids: Vec<&str> = reqs.iter().map(|r| r.id.as_str()).collect();
        if ids != self.requirement_ids.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::Param("requirements do not match the verdict table".into()));
        }
        if self.revisions.first().is_some_and(|p| p.len() != base.len()) {
            return Err(Error::Param("model does not match the verdict table".into()));
        }
        Ok(())
    }

    /// Held-out metrics of each requirement's predictions against `oracle`
    /// (an all-checked table over the same rows). `None` when the
    /// requirement has no predicted entries.
    pub fn metrics_against(&self, oracle: &RevisionVerdicts) -> Result<Vec<Option<Metrics>>> {
        if !self.same_shape(oracle) {
            return Err(Error::Param("oracle table has different rows or requirements".into()));
        }
        let mut out = Vec::new();
        for j in 0..self.requirement_ids.len() {
            let scores: Vec<(f64, bool)> = (0..self.len())
                .filter_map(|i| self.probabilities[i][j].map(|p| (p, oracle.verdicts[i][j].is_true())))
                .collect();
            out.push(if scores.is_empty() { None } else { Some(evaluate(&scores)?) });
        }
        Ok(out)
    }

    fn same_shape(&self, other: &RevisionVerdicts) -> bool {
        self.requirement_ids == other.requirement_ids && self.revisions == other.revisions
    }

    /// CSV with columns `index,permutation,<requirement ids>`; `comments`
    /// become leading `# ` lines.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> Result<()> {
        for c in comments {
            writeln!(out, "# {c}").map_err(|e| Error::Param(e.to_string()))?;
        }
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_owned(), "permutation".to_owned()];
        header.extend(self.requirement_ids.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for (i, (p, row)) in self.revisions.iter().zip(&self.verdicts).enumerate() {
            let mut rec = vec![i.to_string(), p.to_string()];
            rec.extend(row.iter().map(|t| t.as_str().to_owned()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Param(e.to_string()))?;
        Ok(())
    }

    /// Reads a table written by [`RevisionVerdicts::write_csv`]. Slice,
    /// probabilities and timing are not part of the file.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
        let header = r.headers().map_err(csv_err)?.clone();
        if header.len() < 2 || &header[0] != "index" || &header[1] != "permutation" {
            return Err(Error::Param("verdict table must start with `index,permutation`".into()));
        }
        let requirement_ids: Vec<String> = header.iter().skip(2).map(str::to_owned).collect();
        let mut revisions = Vec::new();
        let mut verdicts = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_err)?;
            if rec.get(0) != Some(i.to_string().as_str()) {
                return Err(Error::Param(format!("row {i} is out of order")));
            }
            revisions.push(rec[1].parse::<Permutation>()?);
            verdicts.push(rec.iter().skip(2).map(str::parse).collect::<Result<Vec<VerdictTag>>>()?);
        }
        let n = requirement_ids.len();
        let verified = !verdicts.iter().flatten().any(|t: &VerdictTag| t.is_predicted())
            || verdicts.iter().flatten().any(|t| matches!(t, VerdictTag::VerifiedTrue | VerdictTag::VerifiedFalse));
        Ok(Self {
            probabilities: vec![vec![None; n]; revisions.len()],
            requirement_ids,
            revisions,
            verdicts,
            training: Vec::new(),
            fallbacks: Vec::new(),
            verified,
            timing: Timing::default(),
        })
    }
}

/// Maps `f` over `0..len` on up to `jobs` scoped threads, keeping index order.
pub(crate) fn par_map<T, F>(len: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let jobs = jobs.clamp(1, len.max(1));
    if jobs == 1 {
        return (0..len).map(&f).collect();
    }
    let chunk = len.div_ceil(jobs);
    let parts: Vec<Result<Vec<T>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let f = &f;
                s.spawn(move || (w * chunk..((w + 1) * chunk).min(len)).map(f).collect::<Result<Vec<T>>>())
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = Vec::with_capacity(len);
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Checks `p` against the requirements selected by `mask` (all when `None`).
pub fn check_revision(
    base: &Mlts,
    p: &Permutation,
    reqs: &[Requirement],
    occ: &OccupancyAutomaton,
    policy: CheckPolicy,
    mask: Option<&[bool]>,
) -> Result<Vec<Option<bool>>> {
    let models = RevisionModels::build(&apply(base, p), occ)?;
    reqs.iter()
        .enumerate()
        .map(|(j, r)| {
            if mask.is_none_or(|m| m[j]) {
                models.check(r, policy).map(|v| Some(v.satisfied))
            } else {
                Ok(None)
            }
        })
        .collect()
}

/// Checks every revision of the coverage against every requirement.
pub fn exhaustive(
    base: &Mlts,
    reqs: &[Requirement],
    occ: &OccupancyAutomaton,
    coverage: Coverage,
    policy: CheckPolicy,
    jobs: usize,
) -> Result<RevisionVerdicts> {
    let revisions = coverage_revisions(base.len(), coverage)?;
    let start = Instant::now();
    let rows = par_map(revisions.len(), jobs, |i| {
        check_revision(base, &revisions[i], reqs, occ, policy, None)
    })?;
    let t_mc = start.elapsed();
    let verdicts: Vec<Vec<VerdictTag>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| VerdictTag::checked(v.expect("unmasked"))).collect())
        .collect();
    Ok(RevisionVerdicts {
        requirement_ids: reqs.iter().map(|r| r.id.clone()).collect(),
        probabilities: vec![vec![None; reqs.len()]; revisions.len()],
        training: (0..revisions.len()).collect(),
        timing: Timing {
            t_mc,
            t_ml: Duration::ZERO,
            checks: revisions.len() * reqs.len(),
        },
        revisions,
        verdicts,
        fallbacks: Vec::new(),
        verified: true,
    })
}

fn shuffled_indices(size: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..size).collect();
    shuffle(&mut order, seed);
    order
}

pub fn run_pipeline(
    base: &Mlts,
    reqs: &[Requirement],
    occ: &OccupancyAutomaton,
    cfg: &PipelineConfig,
) -> Result<RevisionVerdicts> {
    cfg.validate()?;
    let revisions = coverage_revisions(base.len(), cfg.coverage)?;
    let size = revisions.len();
    let order = shuffled_indices(size, cfg.seed);
    let k = cfg.slice_len(size);
    let (slice, rest) = order.split_at(k);
    let m = reqs.len();

    let mut timing = Timing::default();
    let mut verdicts: Vec<Vec<Option<VerdictTag>>> = vec![vec![None; m]; size];
    let mut probabilities = vec![vec![None; m]; size];

    let start = Instant::now();
    let labels = par_map(slice.len(), cfg.jobs, |s| {
        check_revision(base, &revisions[slice[s]], reqs, occ, cfg.policy, None)
    })?;
    timing.t_mc += start.elapsed();
    timing.checks += slice.len() * m;
    for (s, row) in labels.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            verdicts[slice[s]][j] = Some(VerdictTag::checked(v.expect("unmasked")));
        }
    }
    info!("checked {} of {} revisions", slice.len(), size);

    let mut fallbacks = Vec::new();
    if !rest.is_empty() {
        for (j, r) in reqs.iter().enumerate() {
            let start = Instant::now();
            let rows: Vec<FeatureRow> = slice
                .iter()
                .zip(&labels)
                .map(|(&i, l)| FeatureRow::from_permutation(&revisions[i], l[j].expect("unmasked")))
                .collect();
            let model = train_gbt(&rows, &cfg.gbt)?;
            if model.degenerate {
                timing.t_ml += start.elapsed();
                warn!("{}: single-class training slice, checking the remainder exhaustively", r.id);
                fallbacks.push(r.id.clone());
                let start = Instant::now();
                let mask: Vec<bool> = (0..m).map(|q| q == j).collect();
                let checked = par_map(rest.len(), cfg.jobs, |s| {
                    check_revision(base, &revisions[rest[s]], reqs, occ, cfg.policy, Some(&mask))
                })?;
                timing.t_mc += start.elapsed();
                timing.checks += rest.len();
                for (s, row) in checked.iter().enumerate() {
                    verdicts[rest[s]][j] = Some(VerdictTag::checked(row[j].expect("masked in")));
                }
                continue;
            }
            for &i in rest {
                let x = FeatureRow::from_permutation(&revisions[i], false).x;
                let p = model.predict(&x)?;
                probabilities[i][j] = Some(p);
                verdicts[i][j] = Some(if p > crate::ml::metrics::THRESHOLD {
                    VerdictTag::PredictedTrue
                } else {
                    VerdictTag::PredictedFalse
                });
            }
            timing.t_ml += start.elapsed();
        }
    }

    let mut table = RevisionVerdicts {
        requirement_ids: reqs.iter().map(|r| r.id.clone()).collect(),
        verdicts: verdicts
            .into_iter()
            .map(|row| row.into_iter().map(|t| t.expect("every entry assigned")).collect())
            .collect(),
        revisions,
        probabilities,
        training: slice.to_vec(),
        fallbacks,
        verified: false,
        timing,
    };
    if cfg.verify {
        let rows = table.all_true_rows();
        let n = table.verify_rows(&rows, base, reqs, occ, cfg.policy, cfg.jobs)?;
        info!("verified {n} predicted-eligible revisions");
        table.verified = true;
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Checking,
    Ml,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub found: Option<Permutation>,
    pub phase: Phase,
    /// Individual requirement checks performed.
    pub checks: usize,
    #[serde(rename = "elapsed_ms", with = "millis")]
    pub elapsed: Duration,
}

/// Scans the shuffled slice by model checking and returns the first
/// satisfier; otherwise ranks the remainder by the product of predicted
/// probabilities and verifies in rank order.
pub fn early_exit_search(
    base: &Mlts,
    reqs: &[Requirement],
    occ: &OccupancyAutomaton,
    cfg: &PipelineConfig,
) -> Result<SearchOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let revisions = coverage_revisions(base.len(), cfg.coverage)?;
    let order = shuffled_indices(revisions.len(), cfg.seed);
    let (slice, rest) = order.split_at(cfg.slice_len(revisions.len()));
    let mut checks = 0;
    let mut labels = Vec::with_capacity(slice.len());
    for &i in slice {
        let row = check_revision(base, &revisions[i], reqs, occ, cfg.policy, None)?;
        checks += reqs.len();
        let row: Vec<bool> = row.into_iter().map(|v| v.expect("unmasked")).collect();
        if row.iter().all(|&s| s) {
            return Ok(SearchOutcome {
                found: Some(revisions[i].clone()),
                phase: Phase::Checking,
                checks,
                elapsed: start.elapsed(),
            });
        }
        labels.push(row);
    }

    let mut score = vec![1.0f64; rest.len()];
    for j in 0..reqs.len() {
        let rows: Vec<FeatureRow> = slice
            .iter()
            .zip(&labels)
            .map(|(&i, l)| FeatureRow::from_permutation(&revisions[i], l[j]))
            .collect();
        let model = train_gbt(&rows, &cfg.gbt)?;
        for (s, &i) in rest.iter().enumerate() {
            score[s] *= model.predict(&FeatureRow::from_permutation(&revisions[i], false).x)?;
        }
    }
    let mut ranked: Vec<usize> = (0..rest.len()).collect();
    ranked.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    for s in ranked {
        let p = &revisions[rest[s]];
        let models = RevisionModels::build(&apply(base, p), occ)?;
        let mut ok = true;
        for r in reqs {
            checks += 1;
            if !models.check(r, cfg.policy)?.satisfied {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(SearchOutcome {
                found: Some(p.clone()),
                phase: Phase::Ml,
                checks,
                elapsed: start.elapsed(),
            });
        }
    }
    Ok(SearchOutcome {
        found: None,
        phase: Phase::Ml,
        checks,
        elapsed: start.elapsed(),
    })
}
