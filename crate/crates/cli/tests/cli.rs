use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use revkit_testkit::{brute_force_merges, fixture_path};
use serde_json::Value;

fn revkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revkit")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn fx(name: &str) -> String {
    fixture_path(name).display().to_string()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn eligible(dir: &Path) -> BTreeSet<String> {
    json(dir.join("selection.json"))["eligible"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["permutation"].as_str().unwrap().to_owned())
        .collect()
}

fn search(dir: &Path, extra: &[&str]) -> Output {
    let (m, r, d) = (fx("gifting.mlts"), fx("gifting.req"), s(dir));
    let mut args = vec!["search", m.as_str(), r.as_str(), "--out", d.as_str(), "--no-timing"];
    args.extend_from_slice(extra);
    revkit(&args)
}

/// Tags by (permutation, requirement column) from a verdict CSV.
fn verdict_rows(dir: &Path) -> Vec<(String, Vec<String>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.join("verdicts.csv"))
        .unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[1].to_owned(), rec.iter().skip(2).map(str::to_owned).collect())
        })
        .collect()
}

#[test]
fn help_lists_every_flag_with_its_default() {
    for (cmd, snapshot) in [
        ("search", "search_help.txt"),
        ("degrade", "degrade_help.txt"),
        ("table1", "table1_help.txt"),
    ] {
        let o = revkit(&[cmd, "--help"]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8(o.stdout).unwrap();
        let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots").join(snapshot);
        let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(text, expected, "{cmd} --help changed");
    }
    let search = String::from_utf8(revkit(&["search", "--help"]).stdout).unwrap();
    for flag in [
        "--tau", "--seed", "--trees", "--depth", "--eta", "--verify", "--no-verify", "--coverage", "--jobs",
        "--out", "--no-timing", "--config",
    ] {
        assert!(search.contains(flag), "{flag}");
    }
    let degrade = String::from_utf8(revkit(&["degrade", "--help"]).stdout).unwrap();
    for flag in ["--threshold", "--waivable", "--max-waived", "--allow-predicted"] {
        assert!(degrade.contains(flag), "{flag}");
    }
    // every value-taking option names its default
    for text in [&search, &degrade] {
        let lines: Vec<&str> = text.lines().collect();
        for (i, l) in lines.iter().enumerate() {
            let l = l.trim_start();
            if l.starts_with("--") && l.contains('<') && !l.starts_with("--config") && !l.starts_with("--model") {
                assert!(l.contains("[default:") || lines[i + 1].contains("[default:"), "{l}");
            }
        }
    }
}

#[test]
fn validate_reports_first_error() {
    let o = revkit(&["validate", &fx("ticket.mlts"), &fx("gifting.req"), &fx("gifting.lints")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let two = dir.path().join("two.mlts");
    std::fs::write(&two, "system S\nmodule a:\n  forward x\n  forward y\n").unwrap();
    let o = revkit(&["validate", &s(&two)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("module `a`"), "{}", stderr(&o));

    let live = dir.path().join("live.req");
    std::fs::write(&live, "req L kind=security weight=1: G F u.x\n").unwrap();
    let o = revkit(&["validate", &s(&live)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("non-safety formula"), "{}", stderr(&o));

    let bad = dir.path().join("bad.req");
    std::fs::write(&bad, "req A kind=security weight=1: G(a ->\n").unwrap();
    let o = revkit(&["validate", &s(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("syntax error at 1:"), "{}", stderr(&o));
}

#[test]
fn search_modes_against_exhaustive() {
    let dir = tempfile::tempdir().unwrap();
    let (ex, oa, t1, os) = (dir.path().join("ex"), dir.path().join("oa"), dir.path().join("t1"), dir.path().join("os"));
    assert_eq!(code(&search(&ex, &["--mode", "exhaustive"])), 0);
    let oracle = eligible(&ex);
    assert_eq!(oracle.len(), 46);

    // accelerated: never reports a revision the oracle rejects, and every
    // model-checked entry agrees with it
    assert_eq!(code(&search(&oa, &["--mode", "oacal", "--tau", "0.3", "--seed", "0", "--verify"])), 0);
    assert!(eligible(&oa).is_subset(&oracle));
    let truth = verdict_rows(&ex);
    for ((p, row), (q, expected)) in verdict_rows(&oa).iter().zip(&truth) {
        assert_eq!(p, q);
        for (tag, want) in row.iter().zip(expected) {
            if tag.starts_with("checked") || tag.starts_with("verified") {
                assert_eq!(tag.ends_with("true"), want.ends_with("true"), "{p}");
            }
        }
    }

    // tau = 1 is exhaustive checking
    assert_eq!(code(&search(&t1, &["--mode", "oacal", "--tau", "1.0"])), 0);
    for f in ["verdicts.csv", "selection.json"] {
        assert_eq!(std::fs::read(ex.join(f)).unwrap(), std::fs::read(t1.join(f)).unwrap(), "{f}");
    }

    assert_eq!(code(&search(&os, &["--mode", "oasis"])), 0);
    let one = eligible(&os);
    assert!(one.len() <= 1);
    assert!(one.is_subset(&oracle));
}

#[test]
fn nothing_found_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let reqs = dir.path().join("never.req");
    std::fs::write(&reqs, "req N kind=security weight=1: G(!u.login)\n").unwrap();
    let (m, r) = (fx("gifting.mlts"), s(&reqs));
    for mode in ["exhaustive", "oasis"] {
        let out = s(&dir.path().join(mode));
        let o = revkit(&["search", &m, &r, "--mode", mode, "--out", &out]);
        assert_eq!(code(&o), 2, "{mode}: {}", stderr(&o));
    }
    let out = s(&dir.path().join("early"));
    let o = revkit(&["search", &m, &r, "--mode", "oacal", "--early-exit", "--out", &out]);
    assert_eq!(code(&o), 2);
}

/// Non-redundant and generated counts per subset size by brute force over
/// the same subset visiting order.
fn coverage_oracle(n: usize) -> Vec<(u64, u64)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for k in 1..=n / 2 {
        let (mut nr, mut gen) = (0, 0);
        for mask in subsets_in_order(n, k) {
            if 2 * k == n && !mask.contains(&0) {
                continue;
            }
            let rest: Vec<usize> = (0..n).filter(|i| !mask.contains(i)).collect();
            for p in brute_force_merges(&mask, &rest) {
                gen += 1;
                if seen.insert(p) {
                    nr += 1;
                }
            }
        }
        out.push((nr, gen));
    }
    out
}

fn subsets_in_order(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut all: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m >> i & 1 == 1).collect())
        .collect();
    all.sort();
    all
}

#[test]
fn table1_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    let o = revkit(&["table1", "--n-range", "4..4", "--out", &out, "--assert-paper"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("sum=14/34"));
    let rows = json(dir.path().join("table1.json"));
    assert_eq!(rows.as_array().unwrap().len(), 1);

    let o = revkit(&["table1", "--n-range", "2..3", "--out", &out, "--assert-paper"]);
    assert_eq!(code(&o), 0);
    let rows = json(dir.path().join("table1.json"));
    for row in rows.as_array().unwrap() {
        let n = row["n_modules"].as_u64().unwrap() as usize;
        let cells: Vec<(u64, u64)> = row["cells"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| (c["non_redundant"].as_u64().unwrap(), c["generated"].as_u64().unwrap()))
            .collect();
        assert_eq!(cells, coverage_oracle(n), "N={n}");
    }
    let csv = std::fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert!(csv.starts_with("n_modules,subset_size,generated,non_redundant\n"));

    assert_eq!(code(&revkit(&["table1", "--n-range", "9..4", "--out", &out])), 1);
}

#[test]
fn degrade_from_cached_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let ex = dir.path().join("ex");
    assert_eq!(code(&search(&ex, &["--mode", "exhaustive"])), 0);
    let table = s(&ex.join("verdicts.csv"));
    let reqs = fx("gifting.req");
    let run = |threshold: &str, extra: &[&str]| -> Vec<Value> {
        let out = s(&dir.path().join(format!("d{threshold}")));
        let mut args = vec!["degrade", table.as_str(), reqs.as_str(), "--threshold", threshold, "--out", out.as_str()];
        args.extend_from_slice(extra);
        let o = revkit(&args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        json(dir.path().join(format!("d{threshold}")).join("degrade.json"))["revisions"]
            .as_array()
            .unwrap()
            .clone()
    };
    let perms = |v: &[Value]| -> BTreeSet<String> {
        v.iter().map(|d| d["permutation"].as_str().unwrap().to_owned()).collect()
    };
    let full = run("17", &[]);
    assert_eq!(perms(&full), eligible(&ex));
    let relaxed = run("16", &[]);
    assert!(perms(&relaxed).is_superset(&perms(&full)) && relaxed.len() > full.len());
    for d in &relaxed {
        let waived = d["waived"].as_array().unwrap();
        assert!(waived.is_empty() || waived == &[Value::from("FR3")]);
    }
    assert_eq!(run("0", &[]).len(), 5040);
    // FR3 is the only waivable requirement, so payoff 13 adds nothing beyond 16
    assert_eq!(perms(&run("13", &["--waivable", "FR3"])), perms(&relaxed));
}

#[test]
fn degrade_checks_digests_and_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let (ex, nv) = (dir.path().join("ex"), dir.path().join("nv"));
    assert_eq!(code(&search(&ex, &["--mode", "exhaustive"])), 0);
    search(&nv, &["--mode", "oacal", "--no-verify"]);
    let reqs = fx("gifting.req");
    let out = s(&dir.path().join("d"));

    let stale = revkit(&["degrade", &s(&ex.join("verdicts.csv")), &fx("gifting-printed.req"), "--out", &out]);
    assert_eq!(code(&stale), 1);
    assert!(stderr(&stale).contains("stale verdict file"));
    let wrong_model = revkit(&[
        "degrade", &s(&ex.join("verdicts.csv")), &reqs, "--model", &fx("ticket.mlts"), "--out", &out,
    ]);
    assert_eq!(code(&wrong_model), 1);

    let table = s(&nv.join("verdicts.csv"));
    let refused = revkit(&["degrade", &table, &reqs, "--threshold", "16", "--out", &out]);
    assert_eq!(code(&refused), 1);
    assert!(stderr(&refused).contains("unverified prediction"));

    // verifying on demand gives the exhaustive answer
    let o = revkit(&["degrade", &table, &reqs, "--threshold", "16", "--model", &fx("gifting.mlts"), "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let got = json(dir.path().join("d/degrade.json"));
    let o = revkit(&["degrade", &s(&ex.join("verdicts.csv")), &reqs, "--threshold", "16", "--out", &out]);
    assert_eq!(code(&o), 0);
    let want = json(dir.path().join("d/degrade.json"));
    assert_eq!(got["revisions"], want["revisions"]);

    let o = revkit(&["degrade", &table, &reqs, "--threshold", "16", "--allow-predicted", "--out", &out]);
    assert_eq!(code(&o), 0);
}

#[test]
fn report_lists_lints() {
    let dir = tempfile::tempdir().unwrap();
    let ex = dir.path().join("ex");
    assert_eq!(code(&search(&ex, &["--mode", "exhaustive"])), 0);
    let out = s(&dir.path().join("r"));
    let o = revkit(&[
        "report",
        &s(&ex.join("verdicts.csv")),
        &fx("gifting.req"),
        &fx("gifting.mlts"),
        "--lints",
        &fx("gifting.lints"),
        "--out",
        &out,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let doc = json(dir.path().join("r/report.json"));
    let entries = doc["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 46);
    assert!(entries.iter().all(|e| e["specification"].as_str().unwrap().starts_with("system Gifting")));
    let text = std::fs::read_to_string(dir.path().join("r/report.txt")).unwrap();
    assert!(text.starts_with("# payoff is the sum of the weights"));
}

#[test]
fn runs_reproduce_from_their_config() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert_eq!(code(&search(&a, &["--mode", "oacal", "--seed", "3", "--trees", "40"])), 0);
    let config = s(&a.join("config.txt"));
    assert!(std::fs::read_to_string(&config).unwrap().contains("seed=3\n"));
    assert_eq!(code(&search(&b, &["--config", &config])), 0);
    assert_eq!(code(&search(&c, &["--config", &config, "--jobs", "3"])), 0);
    for f in ["verdicts.csv", "selection.json"] {
        let want = std::fs::read(a.join(f)).unwrap();
        assert_eq!(want, std::fs::read(b.join(f)).unwrap(), "{f}");
        assert_eq!(want, std::fs::read(c.join(f)).unwrap(), "{f} with jobs");
    }
    let strip = |dir: &Path| {
        let mut m = json(dir.join("manifest.json"));
        m["config"]["out"] = Value::Null;
        m["config"]["jobs"] = Value::Null;
        m
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(strip(&a), strip(&c));
    let m = json(a.join("manifest.json"));
    assert_eq!(m["timing"], Value::Null);
    assert_eq!(m["seeds"]["shuffle"], 3);
    assert_eq!(m["config"]["trees"], 40);
    assert_eq!(m["inputs"].as_object().unwrap().len(), 2);
    for f in ["verdicts.csv", "selection.json", "config.txt", "manifest.json"] {
        assert!(m["outputs"].as_array().unwrap().contains(&Value::from(f)));
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# settings\ntau=1.0\nseed = 5\nno-timing=true\n").unwrap();
    let out = dir.path().join("o");
    assert_eq!(code(&search(&out, &["--mode", "exhaustive", "--config", &s(&cfg), "--seed", "9"])), 0);
    let m = json(out.join("manifest.json"));
    assert_eq!(m["config"]["tau"], 1.0);
    assert_eq!(m["config"]["seed"], 9);

    std::fs::write(&cfg, "speed=3\n").unwrap();
    let o = search(&out, &["--config", &s(&cfg)]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("unknown setting `speed`"));
    let o = search(&out, &["--tau", "0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn timing_is_recorded_unless_disabled() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    let o = revkit(&["search", &fx("ticket4.mlts"), &fx("gifting.req"), "--mode", "exhaustive", "--out", &out]);
    // gifting requirements name actions ticket4 lacks; they are vacuous there
    assert!(matches!(code(&o), 0 | 2), "{}", stderr(&o));
    let m = json(dir.path().join("manifest.json"));
    assert!(m["timing"]["total_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bench_writes_trials_and_cost_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    let o = revkit(&["bench", &fx("ticket4.mlts"), "--requirements", "5", "--trees", "10", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let trials = std::fs::read_to_string(dir.path().join("bench_trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 6);
    assert!(trials.starts_with("requirement,template,formula,oasis_position"));
    let b = json(dir.path().join("bench.json"));
    assert_eq!(b["logical"]["trials"], 5);
    assert!(b["measured"]["machine_constant"].as_f64().unwrap() > 0.0);
    assert!(b["measured"]["t_mc_ms"].as_f64().unwrap() > 0.0);
    assert!(b["measured"]["cost_model"]["ratio_avg"].is_number());
    assert!(json(dir.path().join("manifest.json"))["timing"]["machine_constant"].as_f64().unwrap() > 0.0);
}

#[test]
fn small_commands() {
    let o = revkit(&["enumerate", "-n", "3"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "1,2,3\n1,3,2\n2,1,3\n2,3,1\n3,1,2\n3,2,1\n");
    let o = revkit(&["enumerate", "-n", "4", "--coverage", "common"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 14);

    let o = revkit(&["check", &fx("gifting.mlts"), &fx("gifting.req")]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("SR1 violated: ") && text.contains("FR1 satisfied"));
    let o = revkit(&["check", &fx("gifting.mlts"), &fx("gifting.req"), "--revision", "2,1,4,6,3,7,5"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.ends_with(" satisfied")).count(), 6, "{text}");
    assert_eq!(code(&revkit(&["check", &fx("gifting.mlts"), &fx("gifting.req"), "--revision", "1,2"])), 1);

    let o = revkit(&["weaken", &fx("ticket4.mlts")]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("lts TicketBooking4_weakened\n"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&revkit(&["search"])), 1);
    assert_eq!(code(&revkit(&["search", "a.mlts", "b.req", "--mode", "fastest"])), 1);
    assert_eq!(code(&revkit(&["--version"])), 0);
}
