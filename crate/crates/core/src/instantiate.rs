//! Compilation of a high-level game under fixed parameters into a safe
//! low-level Petri game, and the plain 1-bounded token game on the result.
//!
//! Places are pairs `(p, d)` with `d` in the type of `p`; transitions are
//! pairs `(t, v)` with `v` a valuation of `t` satisfying its guard. An arc
//! `(p, d) -> (t, v)` exists iff `d` belongs to the token set denoted by the
//! arc expression of `(p, t)` under `v`, and symmetrically for output arcs.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use fixedbitset::FixedBitSet;

use crate::eval::{
    enumerate_valuations, eval_arc, eval_guard, EvalResult, Instance, Token, Valuation,
};
use crate::model::PlaceKind;
use crate::semantics::{bfs, ReachGraph, StepError};
use crate::{Limits, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LlPlace {
    /// Name of the originating high-level place.
    pub name: String,
    pub token: Token,
    pub kind: PlaceKind,
    pub bad: bool,
    pub init: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LlTransition {
    /// Name of the originating high-level transition.
    pub name: String,
    pub valuation: Valuation,
    /// Input place indices, ascending and without duplicates.
    pub pre: Vec<usize>,
    pub post: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowArc {
    PlaceToTransition { place: usize, transition: usize },
    TransitionToPlace { transition: usize, place: usize },
}

/// A safe Petri game whose places and transitions remember their
/// high-level origin.
#[derive(Clone, Debug)]
pub struct LowLevelGame {
    pub name: String,
    places: Vec<LlPlace>,
    transitions: Vec<LlTransition>,
    place_index: HashMap<(String, Token), usize>,
    transition_index: HashMap<(String, Valuation), usize>,
}

impl PartialEq for LowLevelGame {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.places == other.places
            && self.transitions == other.transitions
    }
}

impl Eq for LowLevelGame {}

impl LowLevelGame {
    pub fn from_parts(
        name: impl Into<String>,
        places: Vec<LlPlace>,
        transitions: Vec<LlTransition>,
    ) -> Self {
        let place_index = places
            .iter()
            .enumerate()
            .map(|(i, p)| ((p.name.clone(), p.token.clone()), i))
            .collect();
        let transition_index = transitions
            .iter()
            .enumerate()
            .map(|(i, t)| ((t.name.clone(), t.valuation.clone()), i))
            .collect();
        LowLevelGame {
            name: name.into(),
            places,
            transitions,
            place_index,
            transition_index,
        }
    }

    pub fn places(&self) -> &[LlPlace] {
        &self.places
    }

    pub fn transitions(&self) -> &[LlTransition] {
        &self.transitions
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn arc_count(&self) -> usize {
        self.transitions
            .iter()
            .map(|t| t.pre.len() + t.post.len())
            .sum()
    }

    pub fn find_place(&self, name: &str, token: &Token) -> Option<usize> {
        self.place_index
            .get(&(name.to_string(), token.clone()))
            .copied()
    }

    pub fn find_transition(&self, name: &str, valuation: &Valuation) -> Option<usize> {
        self.transition_index
            .get(&(name.to_string(), valuation.clone()))
            .copied()
    }

    /// `p[d]`
    pub fn place_id(&self, i: usize) -> String {
        let p = &self.places[i];
        format!("{}[{}]", p.name, p.token)
    }

    /// `t[x=1,y=2]`, variables in sorted order.
    pub fn transition_id(&self, i: usize) -> String {
        let t = &self.transitions[i];
        format!("{}[{}]", t.name, t.valuation)
    }

    pub fn system_places(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.places.len()).filter(|&i| self.places[i].kind == PlaceKind::System)
    }

    pub fn environment_places(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.places.len()).filter(|&i| self.places[i].kind == PlaceKind::Environment)
    }

    pub fn bad_places(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.places.len()).filter(|&i| self.places[i].bad)
    }

    pub fn flow(&self) -> Vec<FlowArc> {
        let mut out = Vec::with_capacity(self.arc_count());
        for (ti, t) in self.transitions.iter().enumerate() {
            out.extend(t.pre.iter().map(|&p| FlowArc::PlaceToTransition {
                place: p,
                transition: ti,
            }));
            out.extend(t.post.iter().map(|&p| FlowArc::TransitionToPlace {
                transition: ti,
                place: p,
            }));
        }
        out
    }

    pub fn initial_marking(&self) -> LowLevelMarking {
        let mut m = LowLevelMarking::empty(self.places.len());
        for (i, p) in self.places.iter().enumerate() {
            if p.init {
                m.0.insert(i);
            }
        }
        m
    }

    /// Removes one arc; used to check that the correspondence check notices
    /// a broken instantiation.
    pub fn remove_arc(&mut self, arc: FlowArc) -> bool {
        let (list, place) = match arc {
            FlowArc::PlaceToTransition { place, transition } => {
                (&mut self.transitions[transition].pre, place)
            }
            FlowArc::TransitionToPlace { transition, place } => {
                (&mut self.transitions[transition].post, place)
            }
        };
        let before = list.len();
        list.retain(|&p| p != place);
        list.len() != before
    }

    /// Drops transitions whose pre- and postset equal those of an earlier
    /// transition. Not applied by default.
    pub fn dedup_transitions(&mut self) -> usize {
        let mut seen = BTreeSet::new();
        let before = self.transitions.len();
        self.transitions
            .retain(|t| seen.insert((t.pre.clone(), t.post.clone())));
        *self = LowLevelGame::from_parts(
            std::mem::take(&mut self.name),
            std::mem::take(&mut self.places),
            std::mem::take(&mut self.transitions),
        );
        before - self.transitions.len()
    }

    /// Drops places that are neither initially marked nor adjacent to any
    /// transition. Not applied by default.
    pub fn prune_isolated_places(&mut self) -> usize {
        let mut used = vec![false; self.places.len()];
        for t in &self.transitions {
            for &p in t.pre.iter().chain(&t.post) {
                used[p] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.places.len()];
        let mut kept = Vec::new();
        for (i, p) in std::mem::take(&mut self.places).into_iter().enumerate() {
            if used[i] || p.init {
                remap[i] = kept.len();
                kept.push(p);
            }
        }
        let removed = remap.iter().filter(|&&r| r == usize::MAX).count();
        let mut transitions = std::mem::take(&mut self.transitions);
        for t in &mut transitions {
            for p in t.pre.iter_mut().chain(t.post.iter_mut()) {
                *p = remap[*p];
            }
        }
        *self = LowLevelGame::from_parts(std::mem::take(&mut self.name), kept, transitions);
        removed
    }

    pub fn enabled(&self, m: &LowLevelMarking, t: usize) -> bool {
        self.transitions[t].pre.iter().all(|&p| m.0.contains(p))
    }

    /// `(M - pre) ∪ post` as plain sets.
    pub fn fire_unchecked(&self, m: &LowLevelMarking, t: usize) -> LowLevelMarking {
        let tr = &self.transitions[t];
        let mut next = m.clone();
        for &p in &tr.pre {
            next.0.set(p, false);
        }
        for &p in &tr.post {
            next.0.insert(p);
        }
        next
    }

    /// Fires `t`; fails with the offending place if a token would land on
    /// an already marked place outside the preset.
    pub fn fire(&self, m: &LowLevelMarking, t: usize) -> Result<LowLevelMarking, usize> {
        let tr = &self.transitions[t];
        if let Some(&p) = tr
            .post
            .iter()
            .find(|&&p| m.0.contains(p) && tr.pre.binary_search(&p).is_err())
        {
            return Err(p);
        }
        Ok(self.fire_unchecked(m, t))
    }

    pub fn marking_display<'a>(&'a self, m: &'a LowLevelMarking) -> impl fmt::Display + 'a {
        struct D<'a>(&'a LowLevelGame, &'a LowLevelMarking);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let ids: Vec<String> = self.1.places().map(|p| self.0.place_id(p)).collect();
                write!(f, "{{{}}}", ids.join(", "))
            }
        }
        D(self, m)
    }
}

/// Set of marked low-level places.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LowLevelMarking(FixedBitSet);

impl LowLevelMarking {
    pub fn empty(places: usize) -> Self {
        LowLevelMarking(FixedBitSet::with_capacity(places))
    }

    pub fn insert(&mut self, place: usize) {
        self.0.insert(place);
    }

    pub fn contains(&self, place: usize) -> bool {
        self.0.contains(place)
    }

    pub fn places(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.ones()
    }

    pub fn len(&self) -> usize {
        self.0.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Builds the low-level game of `inst`.
pub fn instantiate(inst: &Instance<'_>) -> EvalResult<LowLevelGame> {
    let game = inst.game();
    let mut places = Vec::new();
    for (i, p) in game.places.iter().enumerate() {
        let init = inst.initial_tokens(i)?.unwrap_or_default();
        for d in inst.place_type(i).iter() {
            places.push(LlPlace {
                name: p.name.clone(),
                token: d.clone(),
                kind: p.kind,
                bad: p.bad,
                init: init.contains(d),
            });
        }
    }
    let skeleton = LowLevelGame::from_parts(game.name.clone(), places, Vec::new());

    let mut transitions = Vec::new();
    for t in &game.transitions {
        for v in enumerate_valuations(t, inst)? {
            if !eval_guard(&t.guard, &v, inst)? {
                continue;
            }
            let arcs = |list: &[crate::model::Arc]| -> EvalResult<Vec<usize>> {
                let mut out = BTreeSet::new();
                for arc in list {
                    let pi = game.place_index(&arc.place).expect("validated");
                    for d in eval_arc(&arc.expr, &v, inst, inst.place_type(pi))? {
                        out.insert(
                            skeleton
                                .find_place(&arc.place, &d)
                                .expect("token within place type"),
                        );
                    }
                }
                Ok(out.into_iter().collect())
            };
            let pre = arcs(&t.pre)?;
            let post = arcs(&t.post)?;
            transitions.push(LlTransition {
                name: t.name.clone(),
                valuation: v,
                pre,
                post,
            });
        }
    }
    Ok(LowLevelGame::from_parts(
        skeleton.name,
        skeleton.places,
        transitions,
    ))
}

fn ll_successors(
    g: &LowLevelGame,
    m: &LowLevelMarking,
    checked: bool,
) -> Result<Vec<(usize, LowLevelMarking)>, StepError<usize>> {
    let mut out = Vec::new();
    for t in 0..g.transitions.len() {
        if !g.enabled(m, t) {
            continue;
        }
        if checked {
            match g.fire(m, t) {
                Ok(next) => out.push((t, next)),
                Err(p) => {
                    return Err(StepError::Contact {
                        label: t,
                        detail: format!(
                            "{} puts a second token on {}",
                            g.transition_id(t),
                            g.place_id(p)
                        ),
                    })
                }
            }
        } else {
            out.push((t, g.fire_unchecked(m, t)));
        }
    }
    Ok(out)
}

/// Reachability graph of the low-level game under set semantics; edges are
/// labelled by transition index.
pub fn lowlevel_reach(
    g: &LowLevelGame,
    limits: &Limits,
) -> crate::Result<ReachGraph<LowLevelMarking, usize>> {
    bfs(
        g.initial_marking(),
        limits,
        |m| ll_successors(g, m, false),
        |t| g.transition_id(*t),
    )
}

/// Confirms that no reachable firing puts a token on a marked place outside
/// its own preset.
pub fn check_one_safe(g: &LowLevelGame, limits: &Limits) -> crate::Result<Verdict> {
    let res = bfs(
        g.initial_marking(),
        limits,
        |m| ll_successors(g, m, true),
        |t| g.transition_id(*t),
    );
    match res {
        Ok(_) => Ok(Verdict::Holds),
        Err(crate::Error::ContactViolation(w)) => Ok(Verdict::Violated { witness: *w }),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests;
