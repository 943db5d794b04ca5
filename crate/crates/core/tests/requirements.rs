use revkit::ltl::progress::FALSE;
use revkit::ltl::{check, parse_ltl, Progressor};
use revkit::lts::Lts;
use revkit::mlts::parse_mlts;
use revkit::requirement::{check_requirement, parse_requirements, Requirement};
use revkit::weaken::{weaken, OccupancyAutomaton};
use revkit_testkit::fixture;
use revkit_testkit::lasso::completed_adjacency;

fn gifting_reqs() -> Vec<Requirement> {
    parse_requirements(&fixture("gifting.req")).unwrap()
}

fn req<'a>(reqs: &'a [Requirement], id: &str) -> &'a Requirement {
    reqs.iter().find(|r| r.id == id).unwrap()
}

fn is_path(m: &Lts, word: &[String]) -> bool {
    let adj = completed_adjacency(m);
    let mut cur = vec![m.initial()];
    for a in word {
        cur = cur
            .iter()
            .flat_map(|&s| adj[s].iter().filter(|(b, _)| b == a).map(|&(_, t)| t))
            .collect();
        cur.sort_unstable();
        cur.dedup();
    }
    !cur.is_empty()
}

#[test]
fn fixture_requirements_are_safety() {
    let reqs = gifting_reqs();
    assert_eq!(reqs.iter().map(|r| r.weight).collect::<Vec<_>>(), [4, 4, 3, 3, 2, 1]);
    assert!(reqs.iter().all(|r| r.formula.is_safety()));
    let printed = parse_requirements(&fixture("gifting-printed.req")).unwrap();
    assert!(req(&printed, "SR2").formula.is_safety());
    assert_eq!(
        parse_ltl("□(u.charge → □(¬mu.back → ◯mu.charge))").unwrap(),
        req(&printed, "SR2").formula
    );
    assert!(!parse_ltl("F done").unwrap().is_safety());
}

#[test]
fn original_gifting_chain() {
    let base = parse_mlts(&fixture("gifting.mlts")).unwrap();
    let reqs = gifting_reqs();
    let occ = OccupancyAutomaton::default();
    let w = weaken(&base.to_lts(), &occ).unwrap();
    assert!(w.num_states() <= 30);

    let sr1 = req(&reqs, "SR1");
    let v = check(&w, &sr1.formula).unwrap();
    assert!(!v.satisfied);
    let cex = v.counterexample.unwrap();
    let first = cex.iter().position(|a| a == "u.select").unwrap();
    assert!(cex[first..].iter().any(|a| a == "mu.select"));
    assert!(is_path(&w, &cex));
    let mut p = Progressor::new(&sr1.formula).unwrap();
    assert_eq!(*p.replay(cex.iter().map(String::as_str)).last().unwrap(), FALSE);

    assert!(check_requirement(&base, req(&reqs, "FR1"), &occ).unwrap().satisfied);
    assert!(!check_requirement(&base, req(&reqs, "SR3"), &occ).unwrap().satisfied);
}

#[test]
fn single_use_action_on_a_chain() {
    let m = parse_mlts("system One\nmodule m0:\n  forward go\n").unwrap();
    let occ = OccupancyAutomaton::default();
    let r = parse_requirements("req F kind=functional weight=1: G(go -> X G(!go))\n").unwrap();
    assert!(check_requirement(&m, &r[0], &occ).unwrap().satisfied);
    // G covers the current step, so `go` itself violates the inner G
    let r = parse_requirements("req F kind=functional weight=1: G(go -> G(!go))\n").unwrap();
    let v = check_requirement(&m, &r[0], &occ).unwrap();
    assert_eq!(v.counterexample, Some(vec!["go".to_owned()]));
}

#[test]
fn requirement_file_errors() {
    assert!(parse_requirements("req A kind=security weight=1: F a\n").is_err());
    assert!(parse_requirements("req A kind=other weight=1: G a\n").is_err());
    assert!(parse_requirements("req A kind=security weight=1: G a\nreq A kind=security weight=1: G b\n").is_err());
}
