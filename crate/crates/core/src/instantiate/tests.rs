use std::collections::BTreeMap;

use super::*;
use crate::benchmarks::{build_alarm_system, build_concurrent_machines, build_robots, AsVariant};
use crate::dsl::parse;
use crate::eval::ParamEnv;
use crate::model::HighLevelGame;
use crate::semantics::explore;

fn inst_of(g: &HighLevelGame) -> Instance<'_> {
    Instance::new(g, ParamEnv::new(g, []).unwrap(), Limits::default()).unwrap()
}

fn ll_of(g: &HighLevelGame) -> LowLevelGame {
    instantiate(&inst_of(g)).unwrap()
}

fn per_origin(g: &LowLevelGame) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for t in g.transitions() {
        *m.entry(t.name.clone()).or_insert(0) += 1;
    }
    m
}

/// Counts AS transition instances by looping over every assignment of the
/// free variables and applying the guard by hand.
fn as_transition_oracle(n: i64, seq: bool) -> BTreeMap<&'static str, usize> {
    let r = || 1..=n;
    let mut c = BTreeMap::new();
    let one = r().count();
    for name in ["i", "t", "fr", "fa", "g"] {
        c.insert(name, one);
    }
    c.insert(
        "info",
        if seq {
            r().flat_map(|x| r().map(move |y| (x, y)))
                .filter(|(x, y)| x != y)
                .count()
        } else {
            one
        },
    );
    c.insert("a", r().flat_map(|z| r().map(move |v| (z, v))).count());
    let triples: Vec<(i64, i64, i64)> = r()
        .flat_map(|a| r().flat_map(move |b| r().map(move |x| (a, b, x))))
        .collect();
    c.insert("bot1", triples.len());
    c.insert("bot2", triples.iter().filter(|(_, b, x)| b != x).count());
    c
}

/// Sum of the element counts of the AS place types, spelled out by hand.
fn as_place_oracle(n: i64) -> usize {
    let n = n as usize;
    let sizes = [n, n, n, n, n, n * n, 1, 1, 1];
    sizes.iter().sum()
}

#[test]
fn alarm_system_counts() {
    for n in 1..=3 {
        let g = build_alarm_system(AsVariant::Sync, n).unwrap();
        let ll = ll_of(&g);
        let oracle = as_transition_oracle(n, false);
        let got = per_origin(&ll);
        for (name, count) in &oracle {
            assert_eq!(got.get(*name).copied().unwrap_or(0), *count, "n={n} {name}");
        }
        let total: usize = oracle.values().sum();
        assert_eq!(ll.place_count(), as_place_oracle(n));
        assert_eq!(ll.transition_count(), total);
        // closed forms, asserted only after matching the enumeration
        let nu = n as usize;
        assert_eq!(ll.place_count(), nu * nu + 5 * nu + 3);
        assert_eq!(ll.transition_count(), 2 * nu.pow(3) + 6 * nu);
        assert_eq!(got["a"], nu * nu);
        assert_eq!(got["bot1"], nu.pow(3));
        assert_eq!(got.get("bot2").copied().unwrap_or(0), nu * nu * (nu - 1));
    }
    let ll = ll_of(&build_alarm_system(AsVariant::Sync, 2).unwrap());
    assert_eq!((ll.place_count(), ll.transition_count()), (17, 28));
    let ll = ll_of(&build_alarm_system(AsVariant::Sync, 3).unwrap());
    assert_eq!(ll.place_count(), 27);
}

#[test]
fn sequential_info_block() {
    for n in 2..=5 {
        let sync = ll_of(&build_alarm_system(AsVariant::Sync, n).unwrap());
        let seq = ll_of(&build_alarm_system(AsVariant::Sequential, n).unwrap());
        assert_eq!(
            per_origin(&sync)["info"],
            as_transition_oracle(n, false)["info"]
        );
        assert_eq!(
            per_origin(&seq)["info"],
            as_transition_oracle(n, true)["info"]
        );
        assert_eq!(per_origin(&seq)["info"], (n * (n - 1)) as usize);

        // everything outside the info block coincides under the naming scheme
        let ids = |g: &LowLevelGame| -> Vec<String> {
            (0..g.place_count()).map(|i| g.place_id(i)).collect()
        };
        assert_eq!(ids(&sync), ids(&seq));
        let others = |g: &LowLevelGame| -> Vec<(String, Vec<String>, Vec<String>)> {
            (0..g.transition_count())
                .filter(|&i| g.transitions()[i].name != "info")
                .map(|i| {
                    let t = &g.transitions()[i];
                    (
                        g.transition_id(i),
                        t.pre.iter().map(|&p| g.place_id(p)).collect(),
                        t.post.iter().map(|&p| g.place_id(p)).collect(),
                    )
                })
                .collect()
        };
        assert_eq!(others(&sync), others(&seq));
    }
}

#[test]
fn machines_split_places() {
    let g = build_concurrent_machines(3, 2).unwrap();
    let ll = ll_of(&g);
    let mut places = BTreeMap::new();
    for p in ll.places() {
        *places.entry(p.name.as_str()).or_insert(0) += 1;
    }
    assert_eq!((places["M"], places["G"], places["B"]), (6, 6, 6));
    assert_eq!((ll.place_count(), ll.transition_count()), (27, 24));
}

#[test]
fn robots_counts() {
    let ll = ll_of(&build_robots(2, 2).unwrap());
    assert_eq!((ll.place_count(), ll.transition_count()), (47, 49));
    let ll = ll_of(&build_robots(1, 1).unwrap());
    let t = per_origin(&ll);
    assert_eq!(t.get("i1"), None);
    assert_eq!(t["i2"], 1);
}

fn ids(g: &LowLevelGame, ps: &[usize]) -> Vec<String> {
    ps.iter().map(|&p| g.place_id(p)).collect()
}

#[test]
fn arcs_follow_membership() {
    let ll = ll_of(&build_alarm_system(AsVariant::Sync, 2).unwrap());
    let v1 = Valuation::new().bind("x", Token::Num(1));
    let info = &ll.transitions()[ll.find_transition("info", &v1).unwrap()];
    assert_eq!(ids(&ll, &info.pre), ["Sys[2]", "D[1]"]);
    assert_eq!(ids(&ll, &info.post), ["P[1]", "P[2]"]);
    let g = &ll.transitions()[ll.find_transition("g", &v1).unwrap()];
    assert_eq!(ids(&ll, &g.pre), ["I[1]", "Alarm[(1,1)]", "Alarm[(2,1)]"]);
    assert_eq!(ids(&ll, &g.post), ["Good[.]"]);
    assert_eq!(ll.transition_id(0), "i[x=1]");

    let sr = ll_of(&build_robots(2, 2).unwrap());
    let i2 = sr.find_transition("i2", &Valuation::new()).unwrap();
    assert_eq!(sr.transition_id(i2), "i2[]");
    assert_eq!(ids(&sr, &sr.transitions()[i2].pre), ["Phases[2]", "Env[.]"]);
}

#[test]
fn init_and_bad_sets() {
    let ll = ll_of(&build_robots(2, 2).unwrap());
    let init: Vec<String> = (0..ll.place_count())
        .filter(|&i| ll.places()[i].init)
        .map(|i| ll.place_id(i))
        .collect();
    assert_eq!(
        init,
        [
            "Phases[1]",
            "Env[.]",
            "work[.]",
            "RT[(1,1)]",
            "RT[(2,2)]",
            "Tools[1]",
            "Tools[2]"
        ]
    );
    let bad: Vec<String> = ll.bad_places().map(|i| ll.place_id(i)).collect();
    assert_eq!(bad.len(), 4 + 2);
    assert!(bad
        .iter()
        .all(|b| b.starts_with("Bad1[") || b.starts_with("Bad2[")));
    assert_eq!(
        ll.system_places().count() + ll.environment_places().count(),
        ll.place_count()
    );
}

#[test]
fn safety_checks() {
    for g in [
        build_alarm_system(AsVariant::Sync, 2).unwrap(),
        build_robots(2, 2).unwrap(),
    ] {
        assert_eq!(
            check_one_safe(&ll_of(&g), &Limits::default()).unwrap(),
            Verdict::Holds
        );
    }
    let unsafe_net = LowLevelGame::from_parts(
        "twice",
        vec![
            LlPlace {
                name: "A".into(),
                token: Token::Black,
                kind: PlaceKind::System,
                bad: false,
                init: true,
            },
            LlPlace {
                name: "B".into(),
                token: Token::Black,
                kind: PlaceKind::System,
                bad: false,
                init: true,
            },
        ],
        vec![LlTransition {
            name: "t".into(),
            valuation: Valuation::new(),
            pre: vec![0],
            post: vec![1],
        }],
    );
    match check_one_safe(&unsafe_net, &Limits::default()).unwrap() {
        Verdict::Violated { witness } => {
            assert_eq!(witness.path, vec!["t[]"]);
            assert!(witness.detail.contains("B[.]"));
        }
        Verdict::Holds => panic!("expected a violation"),
    }
}

#[test]
fn reachability() {
    let one = parse("game one; place A : black kind sys init {.};").unwrap();
    assert_eq!(
        lowlevel_reach(&ll_of(&one), &Limits::default())
            .unwrap()
            .node_count(),
        1
    );

    let g = build_alarm_system(AsVariant::Sync, 2).unwrap();
    let hl = explore(&inst_of(&g)).unwrap();
    let ll = lowlevel_reach(&ll_of(&g), &Limits::default()).unwrap();
    assert_eq!(hl.node_count(), ll.node_count());
    assert_eq!(hl.edge_count(), ll.edge_count());
}

#[test]
fn at_most_two_finished_orders() {
    let g = build_concurrent_machines(3, 2).unwrap();
    let ll = ll_of(&g);
    let gs: Vec<usize> = (0..ll.place_count())
        .filter(|&i| ll.places()[i].name == "G")
        .collect();
    let r = lowlevel_reach(&ll, &Limits::default()).unwrap();
    let most = r
        .nodes()
        .iter()
        .map(|m| gs.iter().filter(|&&p| m.contains(p)).count())
        .max()
        .unwrap();
    assert_eq!(most, 2);
}

#[test]
fn deterministic_output() {
    let g = build_robots(2, 2).unwrap();
    assert_eq!(ll_of(&g), ll_of(&g));
}

#[test]
fn dedup_and_prune_are_opt_in() {
    // with one location, fr[x=1] and info[x=1] have the same flow
    let mut ll = ll_of(&build_alarm_system(AsVariant::Sync, 1).unwrap());
    let before = ll.transition_count();
    assert_eq!(ll.dedup_transitions(), 1);
    assert_eq!(ll.transition_count(), before - 1);
    assert!(ll
        .find_transition("info", &Valuation::new().bind("x", Token::Num(1)))
        .is_none());

    let g = parse(
        "game iso; place A : black kind sys init {.}; place B : {1..2} kind sys; place C : black kind env;
         trans t { in A; out B : 1; }",
    )
    .unwrap();
    let mut ll = ll_of(&g);
    assert_eq!(ll.place_count(), 4);
    assert_eq!(ll.prune_isolated_places(), 2);
    let left: Vec<String> = (0..ll.place_count()).map(|i| ll.place_id(i)).collect();
    assert_eq!(left, ["A[.]", "B[1]"]);
    assert_eq!(ids(&ll, &ll.transitions()[0].post), ["B[1]"]);
}

#[test]
fn arc_removal() {
    let mut ll = ll_of(&build_alarm_system(AsVariant::Sync, 2).unwrap());
    let arcs = ll.arc_count();
    let arc = ll.flow()[0];
    assert!(ll.remove_arc(arc));
    assert!(!ll.remove_arc(arc));
    assert_eq!(ll.arc_count(), arcs - 1);
}
