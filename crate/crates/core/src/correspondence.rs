//! Empirical check that a high-level game and its instantiation have the
//! same behaviour under `rho`, which maps a high-level marking `M` to the
//! low-level places `{(p, d) | d ∈ M(p)}`.
//!
//! The high-level side is executed by [`crate::semantics::TokenGame`], the
//! low-level side by plain P/T firing on [`LowLevelGame`]. Since `rho` is an
//! explicit candidate map, isomorphism of the reachable parts is verified
//! node by node and edge by edge without search.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::export::StatsReport;
use crate::instantiate::{instantiate, lowlevel_reach, FlowArc, LowLevelGame, LowLevelMarking};
use crate::semantics::{Marking, Step, TokenGame};
use crate::{par, Instance};

/// `rho` for a fixed high-level/low-level pair.
pub struct Rho<'a> {
    /// Low-level index of `(p, d)` for every place `p` and `d` in `ty(p)`.
    table: Vec<Vec<(crate::Token, usize)>>,
    ll: &'a LowLevelGame,
}

impl<'a> Rho<'a> {
    pub fn new(inst: &Instance<'_>, ll: &'a LowLevelGame) -> Self {
        let game = inst.game();
        let table = game
            .places
            .iter()
            .enumerate()
            .map(|(i, p)| {
                inst.place_type(i)
                    .iter()
                    .filter_map(|d| ll.find_place(&p.name, d).map(|li| (d.clone(), li)))
                    .collect()
            })
            .collect();
        Rho { table, ll }
    }

    /// Image of `m`, or `None` if some token has no low-level place.
    pub fn apply(&self, m: &Marking) -> Option<LowLevelMarking> {
        let mut out = LowLevelMarking::empty(self.ll.place_count());
        for (p, row) in self.table.iter().enumerate() {
            for d in m.tokens(p) {
                let i = row.binary_search_by(|(t, _)| t.cmp(d)).ok()?;
                out.insert(row[i].1);
            }
        }
        Some(out)
    }
}

/// `rho(M)` for a one-off marking.
pub fn rho(inst: &Instance<'_>, ll: &LowLevelGame, m: &Marking) -> Option<LowLevelMarking> {
    Rho::new(inst, ll).apply(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CorrespondenceOptions {
    /// Random well-typed markings probed in addition to the reachable ones.
    pub samples: usize,
    pub seed: u64,
}

impl Default for CorrespondenceOptions {
    fn default() -> Self {
        CorrespondenceOptions {
            samples: 1000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: String,
    pub marking: String,
    pub step: Option<String>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}", self.kind, self.marking)?;
        if let Some(s) = &self.step {
            write!(f, " step {s}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

const KEPT_VIOLATIONS: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub game: String,
    pub params: String,
    pub passed: bool,
    pub hl_nodes: usize,
    pub hl_edges: usize,
    pub ll_nodes: usize,
    pub ll_edges: usize,
    /// `(M, t, v)` triples compared, reachable and sampled.
    pub checks: usize,
    pub samples: usize,
    pub seed: u64,
    pub violation_count: usize,
    /// First few violations.
    pub violations: Vec<Violation>,
    pub stats: StatsReport,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "correspondence {} ({}): {}",
            self.game,
            self.params,
            if self.passed { "PASS" } else { "FAIL" }
        )?;
        writeln!(
            f,
            "  high-level reachable: {} markings, {} edges",
            self.hl_nodes, self.hl_edges
        )?;
        writeln!(
            f,
            "  low-level reachable:  {} markings, {} edges",
            self.ll_nodes, self.ll_edges
        )?;
        writeln!(
            f,
            "  checked {} (marking, step) pairs incl. {} sampled markings (seed {})",
            self.checks, self.samples, self.seed
        )?;
        if !self.passed {
            writeln!(f, "  {} violations, first:", self.violation_count)?;
            for v in &self.violations {
                writeln!(f, "    {v}")?;
            }
        }
        Ok(())
    }
}

struct Collector {
    count: usize,
    kept: Vec<Violation>,
}

impl Collector {
    fn push(&mut self, v: Violation) {
        self.count += 1;
        if self.kept.len() < KEPT_VIOLATIONS {
            self.kept.push(v);
        }
    }

    fn extend(&mut self, vs: Vec<Violation>) {
        for v in vs {
            self.push(v);
        }
    }
}

/// Instantiates `inst` and checks the correspondence.
pub fn check_correspondence(
    inst: &Instance<'_>,
    opts: CorrespondenceOptions,
) -> crate::Result<Report> {
    let ll = instantiate(inst)?;
    check_correspondence_with(inst, &ll, opts)
}

/// Checks the correspondence against a given low-level game, which is
/// normally `instantiate(inst)`.
pub fn check_correspondence_with(
    inst: &Instance<'_>,
    ll: &LowLevelGame,
    opts: CorrespondenceOptions,
) -> crate::Result<Report> {
    let game = inst.game();
    let limits = inst.limits();
    let tg = TokenGame::new(inst)?;
    let hl_graph = tg.explore()?;
    let ll_graph = lowlevel_reach(ll, limits)?;
    let rho = Rho::new(inst, ll);
    let mut found = Collector {
        count: 0,
        kept: Vec::new(),
    };

    // transitions: (t, v) exists in the instantiation iff the guard holds
    let steps: Vec<Step> = tg.steps().collect();
    let mut step_map = Vec::with_capacity(steps.len());
    let mut hit = vec![false; ll.transition_count()];
    for &s in &steps {
        let b = tg.binding(s);
        let lt = ll.find_transition(&game.transitions[s.transition].name, &b.valuation);
        if lt.is_some() != b.guard {
            found.push(Violation {
                kind: "transition set".into(),
                marking: "-".into(),
                step: Some(tg.render(s)),
                detail: format!(
                    "guard is {} but low-level transition {}",
                    b.guard,
                    if lt.is_some() { "exists" } else { "is missing" }
                ),
            });
        }
        if let Some(i) = lt {
            hit[i] = true;
        }
        step_map.push(lt);
    }
    for (i, _) in hit.iter().enumerate().filter(|(_, h)| !**h) {
        found.push(Violation {
            kind: "transition set".into(),
            marking: "-".into(),
            step: Some(ll.transition_id(i)),
            detail: "low-level transition has no high-level counterpart".into(),
        });
    }

    // nodes: rho is a bijection between the reachable parts
    let mut image = Vec::with_capacity(hl_graph.node_count());
    let mut taken = vec![false; ll_graph.node_count()];
    for m in hl_graph.nodes() {
        let idx = rho.apply(m).and_then(|lm| ll_graph.index_of(&lm));
        match idx {
            None => found.push(Violation {
                kind: "unreachable image".into(),
                marking: m.display(game).to_string(),
                step: None,
                detail: "rho(M) is not reachable in the low-level game".into(),
            }),
            Some(i) if taken[i] => found.push(Violation {
                kind: "not injective".into(),
                marking: m.display(game).to_string(),
                step: None,
                detail: format!(
                    "rho(M) coincides with another image: {}",
                    ll.marking_display(&ll_graph.nodes()[i])
                ),
            }),
            Some(i) => taken[i] = true,
        }
        image.push(idx);
    }
    if hl_graph.node_count() != ll_graph.node_count() {
        found.push(Violation {
            kind: "node count".into(),
            marking: "-".into(),
            step: None,
            detail: format!(
                "{} high-level vs {} low-level reachable markings",
                hl_graph.node_count(),
                ll_graph.node_count()
            ),
        });
    }

    // enabledness and firing at every reachable marking
    let check_marking = |m: &Marking| -> Vec<Violation> {
        let mut out = Vec::new();
        let Some(lm) = rho.apply(m) else {
            out.push(Violation {
                kind: "ill-typed marking".into(),
                marking: m.display(game).to_string(),
                step: None,
                detail: "a token lies outside its place type".into(),
            });
            return out;
        };
        for (&s, lt) in steps.iter().zip(&step_map) {
            let hl_en = tg.enabled(m, s);
            let ll_en = lt.is_some_and(|t| ll.enabled(&lm, t));
            if hl_en != ll_en {
                out.push(Violation {
                    kind: "enabledness".into(),
                    marking: m.display(game).to_string(),
                    step: Some(tg.render(s)),
                    detail: format!("enabled in high-level: {hl_en}, in low-level: {ll_en}"),
                });
                continue;
            }
            if let (true, Some(t)) = (hl_en, lt) {
                let after_hl = rho.apply(&tg.fire_unchecked(m, s));
                let after_ll = ll.fire_unchecked(&lm, *t);
                if after_hl.as_ref() != Some(&after_ll) {
                    out.push(Violation {
                        kind: "firing".into(),
                        marking: m.display(game).to_string(),
                        step: Some(tg.render(s)),
                        detail: format!(
                            "rho(M') = {} but low-level successor is {}",
                            after_hl
                                .map(|x| ll.marking_display(&x).to_string())
                                .unwrap_or_else(|| "undefined".into()),
                            ll.marking_display(&after_ll)
                        ),
                    });
                }
            }
        }
        out
    };
    for vs in par::map_ordered(hl_graph.nodes(), limits.parallel, |m| check_marking(m)) {
        found.extend(vs);
    }

    // edges: the labelled edge sets coincide under rho
    let hl_edges: BTreeSet<(usize, usize, usize)> = hl_graph
        .edges()
        .iter()
        .filter_map(|e| {
            Some((
                image[e.source]?,
                step_map[steps_index(&steps, e.label)]?,
                image[e.target]?,
            ))
        })
        .collect();
    let ll_edges: BTreeSet<(usize, usize, usize)> = ll_graph
        .edges()
        .iter()
        .map(|e| (e.source, e.label, e.target))
        .collect();
    for &(s, t, d) in ll_edges.symmetric_difference(&hl_edges) {
        let side = if hl_edges.contains(&(s, t, d)) {
            "high-level only"
        } else {
            "low-level only"
        };
        found.push(Violation {
            kind: "edge".into(),
            marking: ll.marking_display(&ll_graph.nodes()[s]).to_string(),
            step: Some(ll.transition_id(t)),
            detail: format!(
                "{side} edge to {}",
                ll.marking_display(&ll_graph.nodes()[d])
            ),
        });
    }

    // random well-typed markings, reachable or not
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let samples: Vec<Marking> = (0..opts.samples)
        .map(|_| {
            Marking::from_sets(
                inst.place_types()
                    .iter()
                    .map(|ty| ty.iter().filter(|_| rng.gen_bool(0.5)).cloned().collect())
                    .collect(),
            )
        })
        .collect();
    for vs in par::map_ordered(&samples, limits.parallel, |m| check_marking(m)) {
        found.extend(vs);
    }

    let stats = StatsReport {
        reach_nodes: Some(ll_graph.node_count()),
        reach_edges: Some(ll_graph.edge_count()),
        contact_free: Some(true),
        ..StatsReport::of_instance(inst, ll)
    };
    Ok(Report {
        game: game.name.clone(),
        params: inst.env().to_string(),
        passed: found.count == 0,
        hl_nodes: hl_graph.node_count(),
        hl_edges: hl_graph.edge_count(),
        ll_nodes: ll_graph.node_count(),
        ll_edges: ll_graph.edge_count(),
        checks: (hl_graph.node_count() + samples.len()) * steps.len(),
        samples: samples.len(),
        seed: opts.seed,
        violation_count: found.count,
        violations: found.kept,
        stats,
    })
}

fn steps_index(steps: &[Step], s: Step) -> usize {
    steps.binary_search(&s).expect("step of this game")
}

/// Deletes the first arc of the first low-level transition enabled at the
/// initial marking. Returns a description of the removed arc.
pub fn inject_fault(ll: &mut LowLevelGame) -> Option<String> {
    let init = ll.initial_marking();
    let t = (0..ll.transition_count()).find(|&t| ll.enabled(&init, t))?;
    let tr = &ll.transitions()[t];
    let (arc, desc) = if let Some(&p) = tr.pre.first() {
        (
            FlowArc::PlaceToTransition {
                place: p,
                transition: t,
            },
            format!("{} -> {}", ll.place_id(p), ll.transition_id(t)),
        )
    } else {
        let &p = tr.post.first()?;
        (
            FlowArc::TransitionToPlace {
                transition: t,
                place: p,
            },
            format!("{} -> {}", ll.transition_id(t), ll.place_id(p)),
        )
    };
    ll.remove_arc(arc);
    Some(desc)
}
