//! Efficiency experiment: random satisfiable requirements, timed OASIS-order
//! versus accelerated search over the common coverage, and the analytic
//! cost model.

use std::fmt;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg32;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ltl::Formula;
use crate::ml::{train_gbt, FeatureRow, GbtParams};
use crate::mlts::Mlts;
use crate::oasis::{common_coverage, oasis_search};
use crate::pipeline::{early_exit_search, Coverage, Phase, PipelineConfig};
use crate::recompose::{apply, Permutation};
use crate::requirement::{Kind, Requirement, RevisionModels};
use crate::weaken::OccupancyAutomaton;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Template {
    /// `G(a -> G !b)`
    T1,
    /// `G(a -> (!b W c))`
    T2,
    /// `G(a -> X !b)`
    T3,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::T1, Template::T2, Template::T3];

    pub fn arity(self) -> usize {
        match self {
            Template::T2 => 3,
            _ => 2,
        }
    }

    pub fn instantiate(self, actions: &[&str]) -> Formula {
        let atom = |i: usize| Formula::atom(actions[i]);
        let body = match self {
            Template::T1 => Formula::globally(Formula::not(atom(1))),
            Template::T2 => Formula::weak_until(Formula::not(atom(1)), atom(2)),
            Template::T3 => Formula::next(Formula::not(atom(1))),
        };
        Formula::globally(Formula::implies(atom(0), body))
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequirementGenerator {
    pub seed: u64,
    pub target_count: usize,
    /// Candidate draws allowed per accepted requirement.
    pub attempts_per_requirement: usize,
}

impl Default for RequirementGenerator {
    fn default() -> Self {
        Self {
            seed: 0,
            target_count: 1000,
            attempts_per_requirement: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedRequirement {
    pub requirement: Requirement,
    pub template: Template,
}

/// Agent-prefixed machine actions, sorted.
fn prefixed_actions(base: &Mlts) -> Vec<String> {
    let mut names: Vec<&str> = base
        .modules
        .iter()
        .flat_map(|m| m.actions.iter().map(|a| a.name.as_str()))
        .collect();
    names.sort_unstable();
    names.dedup();
    let (u, mu) = &base.agents;
    let mut out: Vec<String> = names
        .iter()
        .flat_map(|a| [format!("{u}.{a}"), format!("{mu}.{a}")])
        .collect();
    out.sort();
    out
}

/// Rejection-samples template instances satisfied by at least one revision
/// of the common coverage.
pub fn generate_requirements(
    base: &Mlts,
    gen: &RequirementGenerator,
    occ: &OccupancyAutomaton,
) -> Result<Vec<GeneratedRequirement>> {
    let actions = prefixed_actions(base);
    let distinct: std::collections::BTreeSet<&str> =
        actions.iter().map(|a| a.split_once('.').map_or(a.as_str(), |(_, x)| x)).collect();
    if distinct.len() < 3 {
        return Err(Error::Param("requirement generation needs at least 3 distinct actions".into()));
    }
    let models: Vec<RevisionModels> = common_coverage(base.len())
        .iter()
        .map(|p| RevisionModels::build(&apply(base, p), occ))
        .collect::<Result<_>>()?;
    let mut rng = Pcg32::seed_from_u64(gen.seed);
    let budget = gen.target_count.saturating_mul(gen.attempts_per_requirement);
    let mut out = Vec::with_capacity(gen.target_count);
    let mut attempts = 0;
    while out.len() < gen.target_count {
        if attempts == budget {
            return Err(Error::RetryBudget {
                budget,
                accepted: out.len(),
            });
        }
        attempts += 1;
        let template = Template::ALL[rng.random_range(0..Template::ALL.len())];
        let picked: Vec<&str> = sample(&mut rng, actions.len(), template.arity())
            .into_iter()
            .map(|i| actions[i].as_str())
            .collect();
        let requirement = Requirement::new(
            format!("G{}", out.len() + 1),
            Kind::Security,
            1,
            template.instantiate(&picked),
        )?;
        let mut satisfiable = false;
        for m in &models {
            if crate::ltl::check(&m.weakened, &requirement.formula)?.satisfied {
                satisfiable = true;
                break;
            }
        }
        if satisfiable {
            out.push(GeneratedRequirement { requirement, template });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub requirement: String,
    pub template: Template,
    pub formula: String,
    /// 1-based stream position of the OASIS satisfier, redundant emissions counted.
    pub oasis_position: Option<usize>,
    pub oasis_checks: usize,
    pub oasis_time_ms: f64,
    pub oacal_found: Option<String>,
    pub oacal_phase: Phase,
    pub oacal_checks: usize,
    pub oacal_time_ms: f64,
}

impl Trial {
    pub fn ratio(&self) -> f64 {
        self.oasis_time_ms / self.oacal_time_ms.max(1e-9)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub n_modules: usize,
    pub trials: usize,
    pub mean_oasis_ms: f64,
    pub mean_oacal_ms: f64,
    pub max_oasis_ms: f64,
    pub max_oacal_ms: f64,
    /// `mean_oasis_ms / mean_oacal_ms`.
    pub ratio_of_means: f64,
    /// `max_oasis_ms / max_oacal_ms`.
    pub ratio_of_maxima: f64,
    pub mean_trial_ratio: f64,
}

/// Times both searches for each requirement in turn; OACAL searches the
/// common coverage.
pub fn run_benchmark(
    base: &Mlts,
    reqs: &[GeneratedRequirement],
    occ: &OccupancyAutomaton,
    cfg: &PipelineConfig,
) -> Result<Vec<Trial>> {
    let cfg = PipelineConfig {
        coverage: Coverage::Common,
        jobs: 1,
        ..*cfg
    };
    let mut trials = Vec::with_capacity(reqs.len());
    for g in reqs {
        let single = std::slice::from_ref(&g.requirement);
        let oasis = oasis_search(base, single, occ, cfg.policy)?;
        let oacal = early_exit_search(base, single, occ, &cfg)?;
        trials.push(Trial {
            requirement: g.requirement.id.clone(),
            template: g.template,
            formula: g.requirement.formula.to_string(),
            oasis_position: oasis.found.as_ref().map(|_| oasis.checks_performed),
            oasis_checks: oasis.checks_performed,
            oasis_time_ms: ms(oasis.elapsed),
            oacal_found: oacal.found.as_ref().map(ToString::to_string),
            oacal_phase: oacal.phase,
            oacal_checks: oacal.checks,
            oacal_time_ms: ms(oacal.elapsed),
        });
    }
    Ok(trials)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn summarize(n_modules: usize, trials: &[Trial]) -> Result<BenchSummary> {
    if trials.is_empty() {
        return Err(Error::Empty("trials"));
    }
    let t = trials.len() as f64;
    let mean = |f: fn(&Trial) -> f64| trials.iter().map(f).sum::<f64>() / t;
    let max = |f: fn(&Trial) -> f64| trials.iter().map(f).fold(f64::MIN, f64::max);
    let mean_oasis_ms = mean(|x| x.oasis_time_ms);
    let mean_oacal_ms = mean(|x| x.oacal_time_ms);
    let max_oasis_ms = max(|x| x.oasis_time_ms);
    let max_oacal_ms = max(|x| x.oacal_time_ms);
    Ok(BenchSummary {
        n_modules,
        trials: trials.len(),
        mean_oasis_ms,
        mean_oacal_ms,
        max_oasis_ms,
        max_oacal_ms,
        ratio_of_means: mean_oasis_ms / mean_oacal_ms,
        ratio_of_maxima: max_oasis_ms / max_oacal_ms,
        mean_trial_ratio: mean(Trial::ratio),
    })
}

/// Inputs of the analytic cost model. Times in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModelParams {
    pub n_modules: usize,
    pub tau: f64,
    pub trees: usize,
    pub depth: usize,
    /// Time per complexity unit.
    pub machine_constant: f64,
    pub t_dcs: f64,
    pub t_mc: f64,
    /// Non-redundant coverage size.
    pub cov_nr: f64,
    /// Mean OASIS iterations to the first satisfier, `mean(pos_r * cov_r)`.
    pub oasis_avg_iterations: f64,
    /// Worst-case OASIS iterations, `max(pos_r * cov_r)`.
    pub oasis_max_iterations: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub t_oasis_avg: f64,
    pub t_oasis_max: f64,
    pub t_oacal_avg: f64,
    pub t_oacal_max: f64,
    pub ratio_avg: f64,
    pub ratio_max: f64,
    /// Coefficient of `t_mc` in the average-case denominator.
    pub avg_check_coefficient: f64,
    /// Learning term of the average-case denominator.
    pub avg_learning_term: f64,
    pub max_check_coefficient: f64,
    pub max_learning_term: f64,
}

/// Training complexity units `K * d * N * log2(n)`.
pub fn complexity_units(trees: usize, depth: usize, n_features: usize, rows: f64) -> Result<f64> {
    if !(rows > 0.0) {
        return Err(Error::Param(format!("log argument {rows} must be positive")));
    }
    Ok((trees * depth * n_features) as f64 * rows.log2())
}

pub fn cost_model(p: &CostModelParams) -> Result<CostModel> {
    if !(p.tau > 0.0 && p.tau <= 1.0) {
        return Err(Error::Param(format!("tau {} outside (0, 1]", p.tau)));
    }
    let learning = p.machine_constant * complexity_units(p.trees, p.depth, p.n_modules, p.tau * p.cov_nr)?;
    let avg_check_coefficient = (p.tau - p.tau * p.tau / 2.0) * p.cov_nr;
    let avg_learning_term = (1.0 - p.tau) * learning;
    let max_check_coefficient = p.tau * p.cov_nr;
    let t_oasis_avg = p.oasis_avg_iterations * p.t_dcs;
    let t_oasis_max = p.oasis_max_iterations * p.t_dcs;
    let t_oacal_avg = avg_check_coefficient * p.t_mc + avg_learning_term;
    let t_oacal_max = max_check_coefficient * p.t_mc + learning;
    Ok(CostModel {
        t_oasis_avg,
        t_oasis_max,
        t_oacal_avg,
        t_oacal_max,
        ratio_avg: t_oasis_avg / t_oacal_avg,
        ratio_max: t_oasis_max / t_oacal_max,
        avg_check_coefficient,
        avg_learning_term,
        max_check_coefficient,
        max_learning_term: learning,
    })
}

/// Least-squares slope through the origin of `(units, time)` samples.
pub fn fit_machine_constant(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 3 {
        return Err(Error::Param(format!("need at least 3 samples, got {}", samples.len())));
    }
    let sxx: f64 = samples.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = samples.iter().map(|(x, y)| x * y).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(Error::Param("degenerate samples".into()));
    }
    Ok(sxy / sxx)
}

/// `(complexity units, training ms)` samples from timing `train_gbt` on
/// seeded random permutations of `n_modules` labelled by `p[0] < p[1]`,
/// one sample per entry of `sizes`.
pub fn measure_training_samples(
    n_modules: usize,
    params: &GbtParams,
    sizes: &[usize],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if n_modules < 2 {
        return Err(Error::Param("training samples need at least 2 modules".into()));
    }
    let mut rng = Pcg32::seed_from_u64(seed);
    let mut out = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let rows: Vec<FeatureRow> = (0..size)
            .map(|_| {
                let mut v: Vec<usize> = (0..n_modules).collect();
                v.shuffle(&mut rng);
                let p = Permutation::new(v).expect("shuffled identity");
                let label = p.as_slice()[0] < p.as_slice()[1];
                FeatureRow::from_permutation(&p, label)
            })
            .collect();
        let start = Instant::now();
        train_gbt(&rows, params)?;
        let t = ms(start.elapsed());
        out.push((complexity_units(params.trees, params.max_depth, n_modules, size as f64)?, t));
    }
    Ok(out)
}

/// Median wall time in milliseconds of `runs` warm checks of the base
/// revision against `req` (one warm-up run first).
pub fn measure_check_time(base: &Mlts, req: &Requirement, occ: &OccupancyAutomaton, runs: usize) -> Result<f64> {
    let run = || -> Result<f64> {
        let start = Instant::now();
        let models = RevisionModels::build(base, occ)?;
        models.check(req, Default::default())?;
        Ok(ms(start.elapsed()))
    };
    run()?;
    let mut times = (0..runs.max(1)).map(|_| run()).collect::<Result<Vec<_>>>()?;
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}
