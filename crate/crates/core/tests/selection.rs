use std::collections::BTreeSet;

use revkit::mlts::{parse_mlts, Mlts};
use revkit::pipeline::{exhaustive, run_pipeline, Coverage, PipelineConfig, RevisionVerdicts};
use revkit::requirement::{parse_requirements, total_weight, CheckPolicy, Requirement};
use revkit::selection::{
    candidate_rows, degrade, eligible, parse_lints, payoff, report, DegradationQuery,
};
use revkit::weaken::OccupancyAutomaton;
use revkit::Error;
use revkit_testkit::fixture;

fn gifting() -> (Mlts, Vec<Requirement>, RevisionVerdicts) {
    let base = parse_mlts(&fixture("gifting.mlts")).unwrap();
    let reqs = parse_requirements(&fixture("gifting.req")).unwrap();
    let v = exhaustive(&base, &reqs, &OccupancyAutomaton::default(), Coverage::Full, CheckPolicy::default(), 1)
        .unwrap();
    (base, reqs, v)
}

fn indices(d: &[revkit::selection::Degraded]) -> BTreeSet<usize> {
    d.iter().map(|x| x.index).collect()
}

#[test]
fn degradation_on_gifting() {
    let (_, reqs, v) = gifting();
    assert_eq!(total_weight(&reqs), 17);
    let elig: BTreeSet<usize> = eligible(&v, &reqs, false).unwrap().into_iter().collect();
    let at = |t| indices(&degrade(&v, &reqs, &DegradationQuery::threshold(t), false).unwrap());
    assert_eq!(elig.len(), 46);
    assert_eq!(at(17), elig);
    let relaxed = at(16);
    assert!(relaxed.is_superset(&elig) && relaxed.len() > elig.len());
    for &i in relaxed.difference(&elig) {
        let waived: Vec<&str> = reqs.iter().zip(&v.verdicts[i]).filter(|(_, t)| !t.is_true()).map(|(r, _)| r.id.as_str()).collect();
        assert_eq!(waived, ["FR3"]);
    }
    let mut prev = BTreeSet::new();
    for t in [17, 16, 13, 0] {
        let s = at(t);
        assert!(s.is_superset(&prev));
        prev = s;
    }
    assert_eq!(prev.len(), 5040);
}

#[test]
fn payoffs_and_order() {
    let (_, reqs, v) = gifting();
    let all = degrade(&v, &reqs, &DegradationQuery::threshold(0), false).unwrap();
    for d in &all {
        let brute: u32 = reqs
            .iter()
            .zip(&v.verdicts[d.index])
            .map(|(r, t)| if t.is_true() { r.weight } else { 0 })
            .sum();
        assert_eq!(d.payoff, brute);
        assert_eq!(payoff(&v, &reqs, d.index), brute);
        assert_eq!(d.satisfied.len() + d.waived.len(), reqs.len());
    }
    for w in all.windows(2) {
        let key = |d: &revkit::selection::Degraded| (std::cmp::Reverse(d.payoff), d.waived.len(), d.index);
        assert!(key(&w[0]) < key(&w[1]));
    }
}

#[test]
fn waivable_and_max_waived_filters() {
    let (_, reqs, v) = gifting();
    let q = DegradationQuery {
        payoff_threshold: 0,
        waivable: Some(vec!["FR3".into(), "FR2".into()]),
        max_waived: Some(1),
    };
    for d in degrade(&v, &reqs, &q, false).unwrap() {
        assert!(d.waived.len() <= 1);
        assert!(d.waived.iter().all(|w| w == "FR3" || w == "FR2"));
    }
    assert!(DegradationQuery::threshold(18).validate(&reqs).is_err());
    let bad = DegradationQuery { waivable: Some(vec!["XX".into()]), ..Default::default() };
    assert!(degrade(&v, &reqs, &bad, false).is_err());
}

#[test]
fn unverified_predictions_are_refused() {
    let (base, reqs, _) = gifting();
    let occ = OccupancyAutomaton::default();
    let cfg = PipelineConfig { verify: false, coverage: Coverage::Common, ..Default::default() };
    let mut v = run_pipeline(&base, &reqs, &occ, &cfg).unwrap();
    assert!(v.has_predictions());
    assert!(eligible(&v, &reqs, false).is_err());
    assert!(eligible(&v, &reqs, true).is_ok());
    let q = DegradationQuery::threshold(16);
    let rows = candidate_rows(&v, &reqs, &q);
    if rows.iter().any(|&i| v.verdicts[i].iter().any(|t| t.is_predicted())) {
        assert!(matches!(degrade(&v, &reqs, &q, false), Err(Error::Unverified { .. })));
    }
    // on-demand verification of exactly the relied-upon rows
    v.verify_rows(&rows, &base, &reqs, &occ, CheckPolicy::default(), 1).unwrap();
    let d = degrade(&v, &reqs, &q, false).unwrap();
    let oracle = exhaustive(&base, &reqs, &occ, Coverage::Common, CheckPolicy::default(), 1).unwrap();
    for x in &d {
        assert!(payoff(&oracle, &reqs, x.index) >= 16);
    }
}

#[test]
fn report_flags_lints() {
    let (base, reqs, v) = gifting();
    let lints = parse_lints(&fixture("gifting.lints")).unwrap();
    let d = degrade(&v, &reqs, &DegradationQuery::threshold(17), false).unwrap();
    let r = report(&d, &base, &lints, Some(17)).unwrap();
    assert_eq!(r.entries.len(), d.len());
    for e in &r.entries {
        let rev = revkit::recompose::apply(&base, &e.permutation.parse().unwrap());
        let logout_first = rev.position_of_forward("logout") < rev.position_of_forward("pay");
        assert_eq!(e.lints.contains(&"pay-after-logout".to_owned()), logout_first);
        assert_eq!(e.lints.contains(&"backward-at-head".to_owned()), rev.modules[0].has_backward());
    }
    let text = r.to_text();
    assert!(text.starts_with("# payoff is the sum"));
    assert!(text.contains("revisions listed have payoff >= 17"));
}

#[test]
fn verdict_csv_round_trip() {
    let (base, reqs, _) = gifting();
    let cfg = PipelineConfig { coverage: Coverage::Common, seed: 3, ..Default::default() };
    let v = run_pipeline(&base, &reqs, &OccupancyAutomaton::default(), &cfg).unwrap();
    let mut buf = Vec::new();
    v.write_csv(&mut buf, &["note".into()]).unwrap();
    let back = RevisionVerdicts::read_csv(buf.as_slice()).unwrap();
    assert!(back.same_verdicts(&v));
}
