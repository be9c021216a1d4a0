//! Token game of a high-level Petri game: enabledness, firing and the
//! reachable-marking graph.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::hash::Hash;

use crate::eval::{
    enumerate_valuations, eval_arc, eval_guard, EvalError, EvalResult, Instance, Token, Valuation,
};
use crate::model::{HighLevelGame, Transition};
use crate::{par, Error, Limits, Verdict, Witness};

/// Token sets per place, indexed in place declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(Vec<BTreeSet<Token>>);

impl Marking {
    pub fn empty(places: usize) -> Self {
        Marking(vec![BTreeSet::new(); places])
    }

    pub fn from_sets(sets: Vec<BTreeSet<Token>>) -> Self {
        Marking(sets)
    }

    pub fn tokens(&self, place: usize) -> &BTreeSet<Token> {
        &self.0[place]
    }

    pub fn tokens_mut(&mut self, place: usize) -> &mut BTreeSet<Token> {
        &mut self.0[place]
    }

    pub fn place_count(&self) -> usize {
        self.0.len()
    }

    /// Tokens on the place called `name`, or `None` for an unknown place.
    pub fn get<'m>(&'m self, game: &HighLevelGame, name: &str) -> Option<&'m BTreeSet<Token>> {
        game.place_index(name).map(|i| &self.0[i])
    }

    /// `pl(M)`: indices of places carrying at least one token.
    pub fn marked_places(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_empty())
            .map(|(i, _)| i)
    }

    pub fn display<'a>(&'a self, game: &'a HighLevelGame) -> impl fmt::Display + 'a {
        DisplayMarking { m: self, game }
    }
}

struct DisplayMarking<'a> {
    m: &'a Marking,
    game: &'a HighLevelGame,
}

impl fmt::Display for DisplayMarking<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for i in self.m.marked_places() {
            if !first {
                f.write_str(", ")?;
            }
            first = false;
            let toks: Vec<String> = self.m.0[i].iter().map(|t| t.to_string()).collect();
            write!(f, "{}: {{{}}}", self.game.places[i].name, toks.join(","))?;
        }
        f.write_str("}")
    }
}

/// A firing step `(t, v)`: transition index and index into `Val(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step {
    pub transition: usize,
    pub valuation: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge<L> {
    pub source: usize,
    pub target: usize,
    pub label: L,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ExploreStats {
    pub nodes: usize,
    pub edges: usize,
    pub depth: usize,
}

/// Reachability graph; node 0 is the initial marking. Nodes appear in
/// breadth-first discovery order, edges grouped by source in that order.
#[derive(Clone, Debug)]
pub struct ReachGraph<S, L> {
    nodes: Vec<S>,
    edges: Vec<Edge<L>>,
    index: HashMap<S, usize>,
    parent: Vec<Option<(usize, L)>>,
    depth: usize,
}

impl<S: Eq + Hash, L: Clone> ReachGraph<S, L> {
    pub fn root(&self) -> &S {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge<L>] {
        &self.edges
    }

    pub fn index_of(&self, s: &S) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn stats(&self) -> ExploreStats {
        ExploreStats {
            nodes: self.nodes.len(),
            edges: self.edges.len(),
            depth: self.depth,
        }
    }

    /// Labels along the breadth-first tree path from the root to `node`.
    pub fn path_to(&self, mut node: usize) -> Vec<L> {
        let mut path = Vec::new();
        while let Some((prev, label)) = &self.parent[node] {
            path.push(label.clone());
            node = *prev;
        }
        path.reverse();
        path
    }

    /// Nodes without outgoing edges.
    pub fn deadlocks(&self) -> Vec<usize> {
        let mut has_succ = vec![false; self.nodes.len()];
        for e in &self.edges {
            has_succ[e.source] = true;
        }
        (0..self.nodes.len()).filter(|&i| !has_succ[i]).collect()
    }

    /// Largest total edge weight along any path from the root. Cycles of
    /// weight zero are collapsed; `None` if an edge of positive weight lies
    /// on a cycle, so that the weight is unbounded.
    pub fn max_path_weight(&self, weight: impl Fn(&L) -> usize) -> Option<usize> {
        let n = self.nodes.len();
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.source].push(i);
        }
        let comp = self.components(&out);
        let comps = comp.iter().map(|c| c + 1).max().unwrap_or(0);
        let mut indeg = vec![0usize; comps];
        let mut cout: Vec<Vec<(usize, usize)>> = vec![Vec::new(); comps];
        for e in &self.edges {
            let (a, b, w) = (comp[e.source], comp[e.target], weight(&e.label));
            if a == b {
                if w > 0 {
                    return None;
                }
                continue;
            }
            indeg[b] += 1;
            cout[a].push((b, w));
        }
        let mut best = vec![0usize; comps];
        let mut queue: Vec<usize> = (0..comps).filter(|&c| indeg[c] == 0).collect();
        while let Some(u) = queue.pop() {
            for &(v, w) in &cout[u] {
                best[v] = best[v].max(best[u] + w);
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push(v);
                }
            }
        }
        Some(best.into_iter().max().unwrap_or(0))
    }

    /// Strongly connected component of every node (iterative Tarjan).
    fn components(&self, out: &[Vec<usize>]) -> Vec<usize> {
        const UNSEEN: usize = usize::MAX;
        let n = self.nodes.len();
        let mut index = vec![UNSEEN; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut comp = vec![UNSEEN; n];
        let mut stack = Vec::new();
        let mut next = 0;
        let mut comps = 0;
        for root in 0..n {
            if index[root] != UNSEEN {
                continue;
            }
            let mut work = vec![(root, 0usize)];
            while let Some(&mut (v, ref mut k)) = work.last_mut() {
                if *k == 0 && index[v] == UNSEEN {
                    index[v] = next;
                    low[v] = next;
                    next += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                if let Some(&ei) = out[v].get(*k) {
                    *k += 1;
                    let w = self.edges[ei].target;
                    if index[w] == UNSEEN {
                        work.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                work.pop();
                if let Some(&(parent, _)) = work.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp[w] = comps;
                        if w == v {
                            break;
                        }
                    }
                    comps += 1;
                }
            }
        }
        comp
    }
}

pub(crate) enum StepError<L> {
    Contact { label: L, detail: String },
}

/// Level-synchronous breadth-first exploration. Successor lists of one level
/// may be computed in parallel; they are merged in frontier order so the
/// result does not depend on scheduling.
pub(crate) fn bfs<S, L, F, R>(
    root: S,
    limits: &Limits,
    succ: F,
    render: R,
) -> crate::Result<ReachGraph<S, L>>
where
    S: Clone + Eq + Hash + Send + Sync,
    L: Clone + Send + Sync,
    F: Fn(&S) -> Result<Vec<(L, S)>, StepError<L>> + Sync + Send,
    R: Fn(&L) -> String,
{
    if limits.max_states == 0 {
        return Err(Error::StateLimitExceeded { limit: 0 });
    }
    let mut g = ReachGraph {
        nodes: vec![root.clone()],
        edges: Vec::new(),
        index: HashMap::from([(root, 0)]),
        parent: vec![None],
        depth: 0,
    };
    let mut frontier = vec![0usize];
    let mut level = 0;
    while !frontier.is_empty() {
        let results = {
            let nodes = &g.nodes;
            par::map_ordered(&frontier, limits.parallel, |&i| succ(&nodes[i]))
        };
        let mut next = Vec::new();
        for (&src, res) in frontier.iter().zip(results) {
            let succs = match res {
                Ok(s) => s,
                Err(StepError::Contact { label, detail }) => {
                    let mut path: Vec<String> = g.path_to(src).iter().map(&render).collect();
                    path.push(render(&label));
                    return Err(Error::ContactViolation(Box::new(Witness { path, detail })));
                }
            };
            for (label, state) in succs {
                let target = match g.index.get(&state) {
                    Some(&t) => t,
                    None => {
                        if g.nodes.len() >= limits.max_states {
                            return Err(Error::StateLimitExceeded {
                                limit: limits.max_states,
                            });
                        }
                        let t = g.nodes.len();
                        g.nodes.push(state.clone());
                        g.index.insert(state, t);
                        g.parent.push(Some((src, label.clone())));
                        next.push(t);
                        t
                    }
                };
                g.edges.push(Edge {
                    source: src,
                    target,
                    label,
                });
            }
        }
        if !next.is_empty() {
            level += 1;
        }
        frontier = next;
    }
    g.depth = level;
    Ok(g)
}

/// One valuation of a transition with its guard and arc token sets
/// evaluated. Arcs are only evaluated when the guard holds.
#[derive(Clone, Debug)]
pub struct Binding {
    pub valuation: Valuation,
    pub guard: bool,
    pub pre: Vec<(usize, BTreeSet<Token>)>,
    pub post: Vec<(usize, BTreeSet<Token>)>,
}

/// A contact: tokens produced on a place that already holds them outside
/// the consumed set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Contact {
    pub place: usize,
    pub tokens: BTreeSet<Token>,
}

/// The high-level token game with every `(t, v)` evaluated up front.
pub struct TokenGame<'i, 'g> {
    inst: &'i Instance<'g>,
    bindings: Vec<Vec<Binding>>,
}

impl<'i, 'g> TokenGame<'i, 'g> {
    pub fn new(inst: &'i Instance<'g>) -> EvalResult<Self> {
        let game = inst.game();
        let mut bindings = Vec::with_capacity(game.transitions.len());
        for (ti, t) in game.transitions.iter().enumerate() {
            let (pre_modes, post_modes) = inst.arc_modes(ti);
            let mut list = Vec::new();
            for v in enumerate_valuations(t, inst)? {
                let guard = eval_guard(&t.guard, &v, inst)?;
                let mut b = Binding {
                    valuation: v,
                    guard,
                    pre: Vec::new(),
                    post: Vec::new(),
                };
                if guard {
                    for (arcs, modes, out) in [
                        (&t.pre, pre_modes, &mut b.pre),
                        (&t.post, post_modes, &mut b.post),
                    ] {
                        for (arc, &mode) in arcs.iter().zip(modes) {
                            let pi = game.place_index(&arc.place).expect("validated");
                            let toks = inst.arc_tokens(
                                &arc.expr,
                                mode,
                                &b.valuation,
                                inst.place_type(pi),
                            )?;
                            out.push((pi, toks));
                        }
                    }
                }
                list.push(b);
            }
            bindings.push(list);
        }
        Ok(TokenGame { inst, bindings })
    }

    pub fn instance(&self) -> &'i Instance<'g> {
        self.inst
    }

    pub fn bindings(&self, transition: usize) -> &[Binding] {
        &self.bindings[transition]
    }

    pub fn binding(&self, step: Step) -> &Binding {
        &self.bindings[step.transition][step.valuation]
    }

    pub fn steps(&self) -> impl Iterator<Item = Step> + '_ {
        self.bindings.iter().enumerate().flat_map(|(t, bs)| {
            (0..bs.len()).map(move |v| Step {
                transition: t,
                valuation: v,
            })
        })
    }

    pub fn render(&self, step: Step) -> String {
        format!(
            "{}[{}]",
            self.inst.game().transitions[step.transition].name,
            self.binding(step).valuation
        )
    }

    pub fn enabled(&self, m: &Marking, step: Step) -> bool {
        let b = self.binding(step);
        b.guard && b.pre.iter().all(|(p, toks)| toks.is_subset(m.tokens(*p)))
    }

    /// Applies `(M(p) - v(p,t)) ∪ v(t,p)` without checking disjointness.
    pub fn fire_unchecked(&self, m: &Marking, step: Step) -> Marking {
        let b = self.binding(step);
        let mut next = m.clone();
        for (p, toks) in &b.pre {
            let set = next.tokens_mut(*p);
            for t in toks {
                set.remove(t);
            }
        }
        for (p, toks) in &b.post {
            next.tokens_mut(*p).extend(toks.iter().cloned());
        }
        next
    }

    /// Fires an enabled step; fails if the union is not disjoint.
    pub fn fire(&self, m: &Marking, step: Step) -> Result<Marking, Contact> {
        let b = self.binding(step);
        for (p, toks) in &b.post {
            let consumed = b.pre.iter().find(|(q, _)| q == p).map(|(_, s)| s);
            let clash: BTreeSet<Token> = toks
                .iter()
                .filter(|t| m.tokens(*p).contains(*t) && !consumed.is_some_and(|c| c.contains(*t)))
                .cloned()
                .collect();
            if !clash.is_empty() {
                return Err(Contact {
                    place: *p,
                    tokens: clash,
                });
            }
        }
        Ok(self.fire_unchecked(m, step))
    }

    pub(crate) fn successors(&self, m: &Marking) -> Result<Vec<(Step, Marking)>, StepError<Step>> {
        let mut out = Vec::new();
        for step in self.steps() {
            if !self.enabled(m, step) {
                continue;
            }
            match self.fire(m, step) {
                Ok(next) => out.push((step, next)),
                Err(c) => {
                    let toks: Vec<String> = c.tokens.iter().map(|t| t.to_string()).collect();
                    return Err(StepError::Contact {
                        label: step,
                        detail: format!(
                            "{} puts {{{}}} on `{}` which already holds it",
                            self.render(step),
                            toks.join(","),
                            self.inst.game().places[c.place].name
                        ),
                    });
                }
            }
        }
        Ok(out)
    }

    pub fn initial_marking(&self) -> EvalResult<Marking> {
        initial_marking(self.inst)
    }

    pub fn explore(&self) -> crate::Result<ReachGraph<Marking, Step>> {
        let root = self.initial_marking()?;
        bfs(
            root,
            self.inst.limits(),
            |m| self.successors(m),
            |s| self.render(*s),
        )
    }
}

/// `M0`: `in(p)` on initially marked places, empty elsewhere.
pub fn initial_marking(inst: &Instance<'_>) -> EvalResult<Marking> {
    let game = inst.game();
    let mut m = Marking::empty(game.places.len());
    for i in 0..game.places.len() {
        if let Some(toks) = inst.initial_tokens(i)? {
            *m.tokens_mut(i) = toks;
        }
    }
    Ok(m)
}

fn arc_sets(
    inst: &Instance<'_>,
    arcs: &[crate::model::Arc],
    v: &Valuation,
) -> EvalResult<Vec<(usize, BTreeSet<Token>)>> {
    let game = inst.game();
    arcs.iter()
        .map(|a| {
            let pi = game
                .place_index(&a.place)
                .ok_or_else(|| EvalError::Mismatch(format!("unknown place `{}`", a.place)))?;
            Ok((pi, eval_arc(&a.expr, v, inst, inst.place_type(pi))?))
        })
        .collect()
}

/// Whether `t` is enabled at `m` under `v`: the guard holds and every input
/// arc's tokens are present. Evaluates expressions directly.
pub fn enabled(
    inst: &Instance<'_>,
    m: &Marking,
    t: &Transition,
    v: &Valuation,
) -> EvalResult<bool> {
    if !eval_guard(&t.guard, v, inst)? {
        return Ok(false);
    }
    Ok(arc_sets(inst, &t.pre, v)?
        .iter()
        .all(|(p, toks)| toks.is_subset(m.tokens(*p))))
}

/// Fires `t` under `v` at `m`.
pub fn fire(
    inst: &Instance<'_>,
    m: &Marking,
    t: &Transition,
    v: &Valuation,
) -> crate::Result<Marking> {
    if !enabled(inst, m, t, v)? {
        return Err(Error::Eval(EvalError::Mismatch(format!(
            "{}[{v}] is not enabled",
            t.name
        ))));
    }
    let pre = arc_sets(inst, &t.pre, v)?;
    let post = arc_sets(inst, &t.post, v)?;
    let mut next = m.clone();
    for (p, toks) in &pre {
        let set = next.tokens_mut(*p);
        for tok in toks {
            set.remove(tok);
        }
    }
    for (p, toks) in &post {
        let set = next.tokens_mut(*p);
        if let Some(tok) = toks.iter().find(|tok| set.contains(*tok)) {
            return Err(Error::ContactViolation(Box::new(Witness {
                path: Vec::new(),
                detail: format!(
                    "{}[{v}] puts {tok} on `{}` which already holds it",
                    t.name,
                    inst.game().places[*p].name
                ),
            })));
        }
        set.extend(toks.iter().cloned());
    }
    Ok(next)
}

/// Breadth-first reachability graph from `M0`.
pub fn explore(inst: &Instance<'_>) -> crate::Result<ReachGraph<Marking, Step>> {
    TokenGame::new(inst)?.explore()
}

/// Checks over all reachable markings that no enabled `(t, v)` produces a
/// token already present outside what it consumes.
pub fn check_contact_free(inst: &Instance<'_>) -> crate::Result<Verdict> {
    match explore(inst) {
        Ok(_) => Ok(Verdict::Holds),
        Err(Error::ContactViolation(w)) => Ok(Verdict::Violated { witness: *w }),
        Err(e) => Err(e),
    }
}

/// Whether some reachable marking puts a token on a bad place.
pub fn bad_reachable(game: &HighLevelGame, graph: &ReachGraph<Marking, Step>) -> bool {
    let bad: Vec<usize> = (0..game.places.len())
        .filter(|&i| game.places[i].bad)
        .collect();
    graph
        .nodes()
        .iter()
        .any(|m| bad.iter().any(|&p| !m.tokens(p).is_empty()))
}
