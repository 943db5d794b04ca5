//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use revkit::bench::{
    cost_model, fit_machine_constant, generate_requirements, measure_check_time, measure_training_samples,
    run_benchmark, summarize, CostModelParams, RequirementGenerator, Trial,
};
use revkit::lts::parse_lts;
use revkit::ml::evaluate;
use revkit::mlts::{parse_mlts, Mlts};
use revkit::oasis::{common_coverage, compare_with_reference, oasis_search, table1 as coverage_table};
use revkit::pipeline::{
    coverage_revisions, early_exit_search, exhaustive, run_pipeline, Coverage, RevisionVerdicts, VerdictTag,
};
use revkit::recompose::{apply, Permutation};
use revkit::requirement::{parse_requirements, total_weight, CheckPolicy, Requirement, RevisionModels};
use revkit::selection::{self, candidate_rows, parse_lints, DegradationQuery, Degraded};
use revkit::weaken::{weaken as weaken_lts, OccupancyAutomaton};
use serde::Serialize;
use serde_json::{json, Value};

use crate::manifest::{read, sha256_hex, Run};
use crate::settings::{DegradeFlags, Flags, Settings};
use crate::{Failure, Mode};

const REQUIREMENTS_DIGEST: &str = "requirements-sha256";
const MODEL_DIGEST: &str = "model-sha256";

fn located(path: &Path, e: revkit::Error) -> Failure {
    Failure::input(format!("{}: {e}", path.display()))
}

fn load_mlts(text: &str, path: &Path) -> Result<Mlts, Failure> {
    parse_mlts(text).map_err(|e| located(path, e))
}

fn load_requirements(text: &str, path: &Path) -> Result<Vec<Requirement>, Failure> {
    parse_requirements(text).map_err(|e| located(path, e))
}

fn revision_of(base: &Mlts, revision: Option<&str>) -> Result<Mlts, Failure> {
    let Some(s) = revision else { return Ok(base.clone()) };
    let p: Permutation = s.parse()?;
    if p.len() != base.len() {
        return Err(Failure::input(format!("revision {p} has {} modules, model has {}", p.len(), base.len())));
    }
    Ok(apply(base, &p))
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn validate(paths: &[PathBuf]) -> Result<(), Failure> {
    for path in paths {
        let text = read(path)?;
        let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        let parsed = match ext {
            "mlts" => parse_mlts(&text).map(|m| format!("{} modules", m.len())),
            "lts" => parse_lts(&text).map(|l| format!("{} states", l.num_states())),
            "req" => parse_requirements(&text).map(|r| format!("{} requirements", r.len())),
            "lints" => parse_lints(&text).map(|l| format!("{} lints", l.len())),
            _ => return Err(Failure::input(format!("{}: unknown file type `.{ext}`", path.display()))),
        };
        let summary = parsed.map_err(|e| located(path, e))?;
        println!("ok {} ({summary})", path.display());
    }
    Ok(())
}

pub fn weaken(model: &Path, revision: Option<&str>) -> Result<(), Failure> {
    let text = read(model)?;
    let (machine, occ) = if model.extension().is_some_and(|e| e == "lts") {
        if revision.is_some() {
            return Err(Failure::input("--revision needs an .mlts model"));
        }
        (parse_lts(&text).map_err(|e| located(model, e))?, OccupancyAutomaton::default())
    } else {
        let base = load_mlts(&text, model)?;
        let occ = OccupancyAutomaton::for_agents(&base.agents);
        (revision_of(&base, revision)?.to_lts(), occ)
    };
    print!("{}", weaken_lts(&machine, &occ)?);
    Ok(())
}

pub fn check(model: &Path, reqs: &Path, revision: Option<&str>, functional_on_weakened: bool) -> Result<(), Failure> {
    let base = load_mlts(&read(model)?, model)?;
    let reqs_list = load_requirements(&read(reqs)?, reqs)?;
    let rev = revision_of(&base, revision)?;
    let models = RevisionModels::build(&rev, &OccupancyAutomaton::for_agents(&base.agents))?;
    let policy = CheckPolicy { functional_on_weakened };
    for r in &reqs_list {
        let v = models.check(r, policy)?;
        match &v.counterexample {
            None => println!("{} satisfied", r.id),
            Some(cex) => println!("{} violated: {}", r.id, cex.join(" ")),
        }
        for w in &v.warnings {
            println!("{} warning: {w}", r.id);
        }
    }
    Ok(())
}

pub fn enumerate(modules: usize, coverage: Coverage) -> Result<(), Failure> {
    let out = std::io::stdout();
    let mut out = std::io::BufWriter::new(out.lock());
    for p in coverage_revisions(modules, coverage)? {
        writeln!(out, "{p}").map_err(|e| Failure::input(e.to_string()))?;
    }
    out.flush().map_err(|e| Failure::input(e.to_string()))
}

#[derive(Serialize)]
struct Selected {
    index: Option<usize>,
    permutation: String,
}

#[derive(Serialize)]
struct Selection {
    revisions: usize,
    count: usize,
    /// Whether any listed revision rests on unverified predictions.
    unverified: bool,
    eligible: Vec<Selected>,
}

fn verdict_comments(reqs_text: &str, model_text: &str) -> Vec<String> {
    vec![
        format!("{REQUIREMENTS_DIGEST}: {}", sha256_hex(reqs_text.as_bytes())),
        format!("{MODEL_DIGEST}: {}", sha256_hex(model_text.as_bytes())),
    ]
}

fn requirement_metrics(v: &RevisionVerdicts) -> Result<Value, Failure> {
    let mut out = BTreeMap::new();
    for (j, id) in v.requirement_ids.iter().enumerate() {
        let count = |f: fn(VerdictTag) -> bool| v.verdicts.iter().filter(|row| f(row[j])).count();
        let scores: Vec<(f64, bool)> = (0..v.len())
            .filter_map(|i| match (v.probabilities[i][j], v.verdicts[i][j]) {
                (Some(p), VerdictTag::VerifiedTrue) => Some((p, true)),
                (Some(p), VerdictTag::VerifiedFalse) => Some((p, false)),
                _ => None,
            })
            .collect();
        let verified = if scores.is_empty() { None } else { Some(evaluate(&scores)?) };
        out.insert(
            id.clone(),
            json!({
                "checked": count(|t| matches!(t, VerdictTag::CheckedTrue | VerdictTag::CheckedFalse)),
                "predicted": count(|t| t.is_predicted()),
                "verified": count(|t| matches!(t, VerdictTag::VerifiedTrue | VerdictTag::VerifiedFalse)),
                "true": count(VerdictTag::is_true),
                "fallback": v.fallbacks.contains(id),
                "against_verified": verified,
            }),
        );
    }
    Ok(serde_json::to_value(out).expect("plain map"))
}

pub fn search(model: &Path, reqs_path: &Path, mode: Mode, early_exit: bool, flags: &Flags) -> Result<(), Failure> {
    let s = Settings::resolve(flags, None)?;
    if early_exit && mode != Mode::Oacal {
        return Err(Failure::input("--early-exit applies to --mode oacal only"));
    }
    let command = if early_exit { format!("search --mode {mode} --early-exit") } else { format!("search --mode {mode}") };
    let mut run = Run::start(command, &s)?;
    let model_text = run.input(model)?;
    let reqs_text = run.input(reqs_path)?;
    let base = load_mlts(&model_text, model)?;
    let reqs = load_requirements(&reqs_text, reqs_path)?;
    let occ = OccupancyAutomaton::for_agents(&base.agents);
    let cfg = s.pipeline();
    let start = Instant::now();

    let (selection, sizes, timing, metrics) = match (mode, early_exit) {
        (Mode::Exhaustive, _) | (Mode::Oacal, false) => {
            let v = if mode == Mode::Exhaustive {
                exhaustive(&base, &reqs, &occ, s.coverage(), s.policy(), s.jobs)?
            } else {
                run_pipeline(&base, &reqs, &occ, &cfg)?
            };
            let mut csv = Vec::new();
            v.write_csv(&mut csv, &verdict_comments(&reqs_text, &model_text))?;
            run.write("verdicts.csv", &csv)?;
            let rows = selection::eligible(&v, &reqs, !v.verified)?;
            let selection = Selection {
                revisions: v.len(),
                count: rows.len(),
                unverified: rows.iter().any(|&i| v.verdicts[i].iter().any(|t| t.is_predicted())),
                eligible: rows
                    .iter()
                    .map(|&i| Selected { index: Some(i), permutation: v.revisions[i].to_string() })
                    .collect(),
            };
            let sizes = json!({
                "modules": base.len(),
                "requirements": reqs.len(),
                "revisions": v.len(),
                "training": v.training.len(),
                "checks": v.timing.checks,
            });
            let timing = json!({
                "t_mc_ms": ms(v.timing.t_mc),
                "t_ml_ms": ms(v.timing.t_ml),
                "total_ms": ms(start.elapsed()),
            });
            (selection, sizes, timing, requirement_metrics(&v)?)
        }
        (Mode::Oacal, true) => {
            let out = early_exit_search(&base, &reqs, &occ, &cfg)?;
            let size = coverage_revisions(base.len(), s.coverage())?.len();
            let found: Vec<Selected> = out
                .found
                .iter()
                .map(|p| Selected { index: None, permutation: p.to_string() })
                .collect();
            let sizes = json!({
                "modules": base.len(),
                "requirements": reqs.len(),
                "revisions": size,
                "training": cfg.slice_len(size),
                "checks": out.checks,
                "phase": out.phase,
            });
            let selection = Selection { revisions: size, count: found.len(), unverified: false, eligible: found };
            (selection, sizes, json!({ "total_ms": ms(out.elapsed) }), Value::Null)
        }
        (Mode::Oasis, _) => {
            let out = oasis_search(&base, &reqs, &occ, s.policy())?;
            let size = common_coverage(base.len()).len();
            let found: Vec<Selected> = out
                .found
                .iter()
                .map(|p| Selected { index: None, permutation: p.to_string() })
                .collect();
            let sizes = json!({
                "modules": base.len(),
                "requirements": reqs.len(),
                "revisions": size,
                "checks": out.checks_performed,
            });
            let selection = Selection { revisions: size, count: found.len(), unverified: false, eligible: found };
            (selection, sizes, json!({ "total_ms": ms(out.elapsed) }), Value::Null)
        }
    };
    run.write_json("selection.json", &selection)?;
    run.finish(sizes, timing, metrics)?;
    for e in &selection.eligible {
        println!("{}", e.permutation);
    }
    if selection.eligible.is_empty() {
        return Err(Failure::nothing_found("no revision satisfies every requirement"));
    }
    info!("{} of {} revisions eligible", selection.count, selection.revisions);
    Ok(())
}

fn parse_range(s: &str) -> Result<std::ops::RangeInclusive<usize>, Failure> {
    let bad = || Failure::input(format!("--n-range expects `a..b`, got `{s}`"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a < 2 || a > b || b > 12 {
        return Err(Failure::input(format!("--n-range {s}: need 2 <= a <= b <= 12")));
    }
    Ok(a..=b)
}

pub fn table1(n_range: Option<&str>, assert_reference: bool, out: Option<PathBuf>, no_timing: bool) -> Result<(), Failure> {
    let flags = Flags { out, no_timing, ..Flags::default() };
    let s = Settings::resolve(&flags, None)?;
    let range = parse_range(n_range.unwrap_or("4..9"))?;
    let mut run = Run::start(format!("table1 --n-range {}..{}", range.start(), range.end()), &s)?;
    let start = Instant::now();
    let rows = coverage_table(range);
    let elapsed = start.elapsed();

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::input(e.to_string());
    w.write_record(["n_modules", "subset_size", "generated", "non_redundant"]).map_err(csv_err)?;
    for row in &rows {
        for c in &row.cells {
            w.serialize((row.n_modules, c.subset_size.to_string(), c.generated, c.non_redundant)).map_err(csv_err)?;
        }
        w.serialize((row.n_modules, "sum", row.generated, row.non_redundant)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::input(e.to_string()))?;
    run.write("table1.csv", &bytes)?;
    run.write_json("table1.json", &rows)?;
    for row in &rows {
        let cells: Vec<String> = row.cells.iter().map(|c| format!("{}/{}", c.non_redundant, c.generated)).collect();
        println!("N={} {} sum={}/{}", row.n_modules, cells.join(" "), row.non_redundant, row.generated);
    }
    let diffs = if assert_reference { compare_with_reference(&rows) } else { Vec::new() };
    run.finish(
        json!({ "rows": rows.len() }),
        json!({ "total_ms": ms(elapsed) }),
        json!({ "mismatches": diffs }),
    )?;
    if !diffs.is_empty() {
        return Err(Failure::mismatch(format!("table differs from the reference table:\n{}", diffs.join("\n"))));
    }
    Ok(())
}

const TRAINING_SIZES: [usize; 5] = [32, 64, 128, 256, 512];
const CHECK_RUNS: usize = 100;

pub fn bench(model: &Path, count: usize, flags: &Flags) -> Result<(), Failure> {
    let s = Settings::resolve(flags, None)?;
    let mut run = Run::start(format!("bench --requirements {count}"), &s)?;
    let model_text = run.input(model)?;
    let base = load_mlts(&model_text, model)?;
    let occ = OccupancyAutomaton::for_agents(&base.agents);
    let gen = RequirementGenerator {
        seed: s.seed,
        target_count: count,
        ..RequirementGenerator::default()
    };
    let reqs = generate_requirements(&base, &gen, &occ)?;
    let trials = run_benchmark(&base, &reqs, &occ, &s.pipeline())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::input(e.to_string());
    w.write_record([
        "requirement",
        "template",
        "formula",
        "oasis_position",
        "oasis_checks",
        "oasis_time_ms",
        "oacal_found",
        "oacal_phase",
        "oacal_checks",
        "oacal_time_ms",
    ])
    .map_err(csv_err)?;
    let time = |t: f64| if s.no_timing { String::new() } else { t.to_string() };
    for t in &trials {
        w.write_record([
            t.requirement.clone(),
            t.template.to_string(),
            t.formula.clone(),
            t.oasis_position.map_or(String::new(), |p| p.to_string()),
            t.oasis_checks.to_string(),
            time(t.oasis_time_ms),
            t.oacal_found.clone().unwrap_or_default(),
            serde_json::to_value(t.oacal_phase).expect("enum").as_str().unwrap_or("").to_owned(),
            t.oacal_checks.to_string(),
            time(t.oacal_time_ms),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::input(e.to_string()))?;
    run.write("bench_trials.csv", &bytes)?;

    let found: Vec<&Trial> = trials.iter().filter(|t| t.oasis_position.is_some()).collect();
    let iterations: Vec<f64> = found.iter().map(|t| t.oasis_checks as f64).collect();
    let logical = json!({
        "n_modules": base.len(),
        "trials": trials.len(),
        "cov_nr": common_coverage(base.len()).len(),
        "oasis_avg_iterations": iterations.iter().sum::<f64>() / iterations.len().max(1) as f64,
        "oasis_max_iterations": iterations.iter().copied().fold(0.0, f64::max),
        "oacal_checks_total": trials.iter().map(|t| t.oacal_checks).sum::<usize>(),
        "oasis_checks_total": trials.iter().map(|t| t.oasis_checks).sum::<usize>(),
    });
    let measured = if s.no_timing {
        Value::Null
    } else {
        let summary = summarize(base.len(), &trials)?;
        let t_mc = measure_check_time(&base, &reqs[0].requirement, &occ, CHECK_RUNS)?;
        let samples = measure_training_samples(base.len(), &s.pipeline().gbt, &TRAINING_SIZES, s.seed)?;
        let c = fit_machine_constant(&samples)?;
        let model = cost_model(&CostModelParams {
            n_modules: base.len(),
            tau: s.tau,
            trees: s.trees,
            depth: s.depth,
            machine_constant: c,
            t_dcs: t_mc,
            t_mc,
            cov_nr: common_coverage(base.len()).len() as f64,
            oasis_avg_iterations: logical["oasis_avg_iterations"].as_f64().unwrap_or(0.0),
            oasis_max_iterations: logical["oasis_max_iterations"].as_f64().unwrap_or(0.0),
        })?;
        json!({
            "summary": summary,
            "t_mc_ms": t_mc,
            "machine_constant": c,
            "training_samples": samples,
            "cost_model": model,
        })
    };
    run.write_json("bench.json", &json!({ "logical": logical, "measured": measured }))?;
    let timing = json!({
        "oasis_ms": trials.iter().map(|t| t.oasis_time_ms).sum::<f64>(),
        "oacal_ms": trials.iter().map(|t| t.oacal_time_ms).sum::<f64>(),
        "machine_constant": measured.get("machine_constant"),
    });
    run.finish(json!({ "modules": base.len(), "requirements": reqs.len() }), timing, Value::Null)?;
    if let Some(sum) = measured.get("summary") {
        println!(
            "N={} trials={} mean oasis {:.3} ms, mean oacal {:.3} ms, ratio {:.3}",
            base.len(),
            trials.len(),
            sum["mean_oasis_ms"].as_f64().unwrap_or(0.0),
            sum["mean_oacal_ms"].as_f64().unwrap_or(0.0),
            sum["ratio_of_means"].as_f64().unwrap_or(0.0)
        );
    } else {
        println!("N={} trials={}", base.len(), trials.len());
    }
    Ok(())
}

/// Digest comments (`# key: value`) at the head of a verdict file.
fn digests(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .map_while(|l| l.strip_prefix("# "))
        .filter_map(|l| l.split_once(": "))
        .map(|(k, v)| (k.trim().to_owned(), v.trim().to_owned()))
        .collect()
}

fn ensure_digest(found: &BTreeMap<String, String>, key: &str, text: &str, path: &Path) -> Result<(), Failure> {
    match found.get(key) {
        Some(d) if *d == sha256_hex(text.as_bytes()) => Ok(()),
        Some(_) => Err(Failure::input(format!(
            "stale verdict file: {} does not match its recorded {key}",
            path.display()
        ))),
        None => Err(Failure::input(format!("verdict file has no `{key}` comment"))),
    }
}

struct Cached {
    base: Option<Mlts>,
    reqs: Vec<Requirement>,
    verdicts: RevisionVerdicts,
    query: DegradationQuery,
    selected: Vec<Degraded>,
    verified_rows: usize,
}

/// Loads a verdict table, checks its digests, verifies on demand any
/// predicted entries the query relies on, then degrades.
fn degrade_cached(
    run: &mut Run,
    s: &Settings,
    verdicts_path: &Path,
    reqs_path: &Path,
    model: Option<&Path>,
    allow_predicted: bool,
) -> Result<Cached, Failure> {
    let table_text = run.input(verdicts_path)?;
    let reqs_text = run.input(reqs_path)?;
    let found = digests(&table_text);
    ensure_digest(&found, REQUIREMENTS_DIGEST, &reqs_text, reqs_path)?;
    let base = match model {
        Some(path) => {
            let text = run.input(path)?;
            ensure_digest(&found, MODEL_DIGEST, &text, path)?;
            Some(load_mlts(&text, path)?)
        }
        None => None,
    };
    let reqs = load_requirements(&reqs_text, reqs_path)?;
    let mut verdicts = RevisionVerdicts::read_csv(table_text.as_bytes()).map_err(|e| located(verdicts_path, e))?;
    let query = DegradationQuery {
        payoff_threshold: s.threshold.unwrap_or_else(|| total_weight(&reqs)),
        waivable: s.waivable.clone(),
        max_waived: s.max_waived,
    };
    query.validate(&reqs)?;

    let mut verified_rows = 0;
    if let (Some(b), false) = (&base, allow_predicted) {
        let occ = OccupancyAutomaton::for_agents(&b.agents);
        // verification can raise a payoff, so repeat until no admitted row rests on a prediction
        loop {
            let rows: Vec<usize> = candidate_rows(&verdicts, &reqs, &query)
                .into_iter()
                .filter(|&i| verdicts.verdicts[i].iter().any(|t| t.is_predicted()))
                .collect();
            if rows.is_empty() {
                break;
            }
            verified_rows += verdicts.verify_rows(&rows, b, &reqs, &occ, s.policy(), s.jobs)?;
        }
        verdicts.verified = true;
    }
    let selected = selection::degrade(&verdicts, &reqs, &query, allow_predicted)?;
    Ok(Cached { base, reqs, verdicts, query, selected, verified_rows })
}

pub fn degrade(
    verdicts_path: &Path,
    reqs_path: &Path,
    model: Option<&Path>,
    allow_predicted: bool,
    d: &DegradeFlags,
    flags: &Flags,
) -> Result<(), Failure> {
    let s = Settings::resolve(flags, Some(d))?;
    let mut run = Run::start("degrade", &s)?;
    let start = Instant::now();
    let c = degrade_cached(&mut run, &s, verdicts_path, reqs_path, model, allow_predicted)?;
    run.write_json(
        "degrade.json",
        &json!({
            "threshold": c.query.payoff_threshold,
            "total_weight": total_weight(&c.reqs),
            "count": c.selected.len(),
            "revisions": c.selected,
        }),
    )?;
    run.finish(
        json!({ "revisions": c.verdicts.len(), "requirements": c.reqs.len(), "verified_rows": c.verified_rows }),
        json!({ "total_ms": ms(start.elapsed()) }),
        Value::Null,
    )?;
    println!("{} revisions with payoff >= {}", c.selected.len(), c.query.payoff_threshold);
    Ok(())
}

pub fn report(
    verdicts_path: &Path,
    reqs_path: &Path,
    model: &Path,
    lints: Option<&Path>,
    allow_predicted: bool,
    d: &DegradeFlags,
    flags: &Flags,
) -> Result<(), Failure> {
    let s = Settings::resolve(flags, Some(d))?;
    let mut run = Run::start("report", &s)?;
    let start = Instant::now();
    let c = degrade_cached(&mut run, &s, verdicts_path, reqs_path, Some(model), allow_predicted)?;
    let lints = match lints {
        Some(path) => {
            let text = run.input(path)?;
            parse_lints(&text).map_err(|e| located(path, e))?
        }
        None => Vec::new(),
    };
    let base = c.base.as_ref().expect("model given");
    let doc = selection::report(&c.selected, base, &lints, s.threshold)?;
    let text = doc.to_text();
    run.write("report.txt", text.as_bytes())?;
    run.write_json("report.json", &doc)?;
    run.finish(
        json!({ "revisions": c.verdicts.len(), "listed": doc.entries.len(), "verified_rows": c.verified_rows }),
        json!({ "total_ms": ms(start.elapsed()) }),
        Value::Null,
    )?;
    print!("{text}");
    Ok(())
}
