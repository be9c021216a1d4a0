//! Serializations of low-level games, a DOT view of high-level games, and
//! size statistics.
//!
//! All writers are deterministic: equal games produce identical bytes.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::eval::{Instance, Token, Valuation};
use crate::instantiate::{LlPlace, LlTransition, LowLevelGame};
use crate::model::{Expr, HighLevelGame, PlaceKind};
use crate::Limits;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportFormat {
    /// Line-based `petrigame` format, readable by [`read_native`].
    Native,
    /// Place/transition net in PNML with game annotations in a
    /// `toolspecific` element.
    Pnml,
    Dot,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "native" => Ok(ExportFormat::Native),
            "pnml" => Ok(ExportFormat::Pnml),
            "dot" => Ok(ExportFormat::Dot),
            _ => Err(format!(
                "unknown format `{s}` (expected native, pnml or dot)"
            )),
        }
    }
}

pub fn export_lowlevel(g: &LowLevelGame, format: ExportFormat) -> String {
    match format {
        ExportFormat::Native => to_native(g),
        ExportFormat::Pnml => to_pnml(g),
        ExportFormat::Dot => to_dot(g),
    }
}

pub fn to_native(g: &LowLevelGame) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "petrigame {}", g.name);
    for (i, p) in g.places().iter().enumerate() {
        let _ = write!(out, "place {} kind {}", g.place_id(i), p.kind.keyword());
        if p.bad {
            out.push_str(" bad");
        }
        if p.init {
            out.push_str(" init");
        }
        out.push('\n');
    }
    for i in 0..g.transition_count() {
        let _ = writeln!(out, "trans {}", g.transition_id(i));
    }
    for (i, t) in g.transitions().iter().enumerate() {
        for &p in &t.pre {
            let _ = writeln!(out, "arc {} -> {}", g.place_id(p), g.transition_id(i));
        }
        for &p in &t.post {
            let _ = writeln!(out, "arc {} -> {}", g.transition_id(i), g.place_id(p));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct NativeError {
    pub line: usize,
    pub message: String,
}

fn split_id(id: &str) -> Option<(&str, &str)> {
    let open = id.find('[')?;
    let inner = id[open + 1..].strip_suffix(']')?;
    Some((&id[..open], inner))
}

/// Reads the output of [`to_native`].
pub fn read_native(src: &str) -> Result<LowLevelGame, NativeError> {
    let mut name = None;
    let mut places: Vec<LlPlace> = Vec::new();
    let mut transitions: Vec<LlTransition> = Vec::new();
    let mut place_ids: HashMap<String, usize> = HashMap::new();
    let mut trans_ids: HashMap<String, usize> = HashMap::new();
    for (ln, line) in src.lines().enumerate() {
        let err = |m: String| NativeError {
            line: ln + 1,
            message: m,
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            [] => {}
            ["petrigame", n] => name = Some(n.to_string()),
            ["place", id, "kind", kind, flags @ ..] => {
                let (pname, tok) =
                    split_id(id).ok_or_else(|| err(format!("malformed place id `{id}`")))?;
                let token: Token = tok.parse().map_err(|e| err(format!("{e}")))?;
                let kind = match *kind {
                    "sys" => PlaceKind::System,
                    "env" => PlaceKind::Environment,
                    k => return Err(err(format!("unknown place kind `{k}`"))),
                };
                if let Some(f) = flags.iter().find(|f| !matches!(**f, "bad" | "init")) {
                    return Err(err(format!("unknown place flag `{f}`")));
                }
                if place_ids.insert(id.to_string(), places.len()).is_some() {
                    return Err(err(format!("duplicate place `{id}`")));
                }
                places.push(LlPlace {
                    name: pname.to_string(),
                    token,
                    kind,
                    bad: flags.contains(&"bad"),
                    init: flags.contains(&"init"),
                });
            }
            ["trans", id] => {
                let (tname, val) =
                    split_id(id).ok_or_else(|| err(format!("malformed transition id `{id}`")))?;
                let valuation: Valuation = val.parse().map_err(|e| err(format!("{e}")))?;
                if trans_ids
                    .insert(id.to_string(), transitions.len())
                    .is_some()
                {
                    return Err(err(format!("duplicate transition `{id}`")));
                }
                transitions.push(LlTransition {
                    name: tname.to_string(),
                    valuation,
                    pre: Vec::new(),
                    post: Vec::new(),
                });
            }
            ["arc", src, "->", dst] => {
                if let (Some(&p), Some(&t)) = (place_ids.get(*src), trans_ids.get(*dst)) {
                    transitions[t].pre.push(p);
                } else if let (Some(&t), Some(&p)) = (trans_ids.get(*src), place_ids.get(*dst)) {
                    transitions[t].post.push(p);
                } else {
                    return Err(err(format!(
                        "arc `{src} -> {dst}` does not join a declared place and transition"
                    )));
                }
            }
            _ => return Err(err(format!("unrecognised line `{line}`"))),
        }
    }
    for t in &mut transitions {
        t.pre.sort_unstable();
        t.pre.dedup();
        t.post.sort_unstable();
        t.post.dedup();
    }
    let name = name.ok_or(NativeError {
        line: 1,
        message: "missing `petrigame` header".into(),
    })?;
    Ok(LowLevelGame::from_parts(name, places, transitions))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn to_pnml(g: &LowLevelGame) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n");
    let _ = writeln!(
        out,
        "  <net id=\"{}\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">",
        xml_escape(&g.name)
    );
    out.push_str("    <page id=\"page0\">\n");
    for (i, p) in g.places().iter().enumerate() {
        let _ = write!(
            out,
            "      <place id=\"p{i}\"><name><text>{}</text></name>",
            xml_escape(&g.place_id(i))
        );
        if p.init {
            out.push_str("<initialMarking><text>1</text></initialMarking>");
        }
        let _ = write!(
            out,
            "<toolspecific tool=\"hlpg\" version=\"1\"><kind>{}</kind>{}</toolspecific>",
            p.kind.keyword(),
            if p.bad { "<bad/>" } else { "" }
        );
        out.push_str("</place>\n");
    }
    for i in 0..g.transition_count() {
        let _ = writeln!(
            out,
            "      <transition id=\"t{i}\"><name><text>{}</text></name></transition>",
            xml_escape(&g.transition_id(i))
        );
    }
    let mut a = 0;
    for (i, t) in g.transitions().iter().enumerate() {
        for &p in &t.pre {
            let _ = writeln!(
                out,
                "      <arc id=\"a{a}\" source=\"p{p}\" target=\"t{i}\"/>"
            );
            a += 1;
        }
        for &p in &t.post {
            let _ = writeln!(
                out,
                "      <arc id=\"a{a}\" source=\"t{i}\" target=\"p{p}\"/>"
            );
            a += 1;
        }
    }
    out.push_str("    </page>\n  </net>\n</pnml>\n");
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn dot_place_node(g: &LowLevelGame, i: usize) -> String {
    let p = &g.places()[i];
    format!("p{i}_{}_{}", alnum(&p.name), p.token.flat_id())
}

fn dot_transition_node(g: &LowLevelGame, i: usize) -> String {
    let t = &g.transitions()[i];
    let mut id = format!("t{i}_{}", alnum(&t.name));
    for (_, tok) in t.valuation.iter() {
        id.push('_');
        id.push_str(&tok.flat_id());
    }
    id
}

fn alnum(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

pub fn to_dot(g: &LowLevelGame) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(&g.name));
    out.push_str("  rankdir=LR;\n");
    for (i, p) in g.places().iter().enumerate() {
        let shape = if p.bad { "doublecircle" } else { "circle" };
        let fill = match p.kind {
            PlaceKind::System => "white",
            PlaceKind::Environment => "lightgray",
        };
        let style = if p.init { "filled,bold" } else { "filled" };
        let _ = writeln!(
            out,
            "  {} [label=\"{}\", shape={shape}, style=\"{style}\", fillcolor={fill}];",
            dot_place_node(g, i),
            dot_escape(&g.place_id(i))
        );
    }
    for i in 0..g.transition_count() {
        let _ = writeln!(
            out,
            "  {} [label=\"{}\", shape=box];",
            dot_transition_node(g, i),
            dot_escape(&g.transition_id(i))
        );
    }
    for (i, t) in g.transitions().iter().enumerate() {
        let tn = dot_transition_node(g, i);
        for &p in &t.pre {
            let _ = writeln!(out, "  {} -> {tn};", dot_place_node(g, p));
        }
        for &p in &t.post {
            let _ = writeln!(out, "  {tn} -> {};", dot_place_node(g, p));
        }
    }
    out.push_str("}\n");
    out
}

/// DOT view of the high-level game: places labelled with their types, arcs
/// with their expressions, and non-trivial guards as dashed boxes.
pub fn export_hl_dot(game: &HighLevelGame) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", dot_escape(&game.name));
    out.push_str("  rankdir=LR;\n");
    for (i, p) in game.places.iter().enumerate() {
        let shape = if p.bad { "doublecircle" } else { "circle" };
        let fill = match p.kind {
            PlaceKind::System => "white",
            PlaceKind::Environment => "lightgray",
        };
        let style = if p.init.is_some() {
            "filled,bold"
        } else {
            "filled"
        };
        let _ = writeln!(
            out,
            "  p{i} [label=\"{}\\n{}\", shape={shape}, style=\"{style}\", fillcolor={fill}];",
            dot_escape(&p.name),
            dot_escape(&p.ty.to_string())
        );
    }
    for (i, t) in game.transitions.iter().enumerate() {
        let _ = writeln!(
            out,
            "  t{i} [label=\"{}\", shape=box];",
            dot_escape(&t.name)
        );
        if !t.guard.is_true() {
            let _ = writeln!(
                out,
                "  g{i} [label=\"{}\", shape=box, style=dashed];",
                dot_escape(&t.guard.to_string())
            );
            let _ = writeln!(out, "  g{i} -> t{i} [style=dashed, arrowhead=none];");
        }
    }
    let label = |e: &Expr| {
        if *e == Expr::Black {
            String::new()
        } else {
            format!(" [label=\"{}\"]", dot_escape(&e.to_string()))
        }
    };
    for (i, t) in game.transitions.iter().enumerate() {
        for a in &t.pre {
            if let Some(p) = game.place_index(&a.place) {
                let _ = writeln!(out, "  p{p} -> t{i}{};", label(&a.expr));
            }
        }
        for a in &t.post {
            if let Some(p) = game.place_index(&a.place) {
                let _ = writeln!(out, "  t{i} -> p{p}{};", label(&a.expr));
            }
        }
    }
    out.push_str("}\n");
    out
}

/// Size figures of a game; fields that were not computed are omitted from
/// the JSON form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct StatsReport {
    pub game: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hl_places: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hl_transitions: Option<usize>,
    pub place_count: usize,
    pub transition_count: usize,
    pub arc_count: usize,
    pub system_places: usize,
    pub environment_places: usize,
    pub bad_count: usize,
    pub init_size: usize,
    /// Low-level places per high-level place.
    pub places_per_origin: BTreeMap<String, usize>,
    /// Low-level transitions per high-level transition.
    pub transitions_per_origin: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reach_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reach_edges: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contact_free: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub one_safe: Option<bool>,
}

/// Analyses [`stats`] runs on top of the size counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StatsFlags {
    /// Explore the low-level reachability graph.
    pub reach: bool,
    /// Explore the high-level token game checking contact-freeness.
    pub contact_free: bool,
    pub one_safe: bool,
}

impl StatsFlags {
    pub fn all() -> Self {
        StatsFlags {
            reach: true,
            contact_free: true,
            one_safe: true,
        }
    }
}

impl StatsReport {
    pub fn of_lowlevel(g: &LowLevelGame) -> Self {
        let mut places_per_origin = BTreeMap::new();
        for p in g.places() {
            *places_per_origin.entry(p.name.clone()).or_insert(0) += 1;
        }
        let mut transitions_per_origin = BTreeMap::new();
        for t in g.transitions() {
            *transitions_per_origin.entry(t.name.clone()).or_insert(0) += 1;
        }
        StatsReport {
            game: g.name.clone(),
            place_count: g.place_count(),
            transition_count: g.transition_count(),
            arc_count: g.arc_count(),
            system_places: g.system_places().count(),
            environment_places: g.environment_places().count(),
            bad_count: g.bad_places().count(),
            init_size: g.places().iter().filter(|p| p.init).count(),
            places_per_origin,
            transitions_per_origin,
            ..Default::default()
        }
    }

    /// Statistics of `instantiate(inst)` together with the high-level sizes.
    /// High-level elements without any instance appear with count 0.
    pub fn of_instance(inst: &Instance<'_>, g: &LowLevelGame) -> Self {
        let game = inst.game();
        let mut s = StatsReport::of_lowlevel(g);
        for p in &game.places {
            s.places_per_origin.entry(p.name.clone()).or_insert(0);
        }
        for t in &game.transitions {
            s.transitions_per_origin.entry(t.name.clone()).or_insert(0);
        }
        s.params = Some(inst.env().to_string());
        s.hl_places = Some(game.places.len());
        s.hl_transitions = Some(game.transitions.len());
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = write!(out, "game {}", self.game);
        if let Some(p) = &self.params {
            let _ = write!(out, " ({p})");
        }
        out.push('\n');
        if let (Some(p), Some(t)) = (self.hl_places, self.hl_transitions) {
            let _ = writeln!(out, "  high-level: {p} places, {t} transitions");
        }
        let _ = writeln!(
            out,
            "  low-level:  {} places ({} sys, {} env, {} bad, {} initially marked), {} transitions, {} arcs",
            self.place_count,
            self.system_places,
            self.environment_places,
            self.bad_count,
            self.init_size,
            self.transition_count,
            self.arc_count
        );
        if let (Some(n), Some(e)) = (self.reach_nodes, self.reach_edges) {
            let _ = writeln!(out, "  reachable:  {n} markings, {e} edges");
        }
        if let Some(c) = self.contact_free {
            let _ = writeln!(out, "  contact-free: {c}");
        }
        if let Some(c) = self.one_safe {
            let _ = writeln!(out, "  1-safe: {c}");
        }
        for (name, n) in &self.places_per_origin {
            let _ = writeln!(out, "  place {name}: {n}");
        }
        for (name, n) in &self.transitions_per_origin {
            let _ = writeln!(out, "  trans {name}: {n}");
        }
        out
    }
}

/// Instantiates `inst` and reports its sizes plus the analyses in `flags`.
pub fn stats(inst: &Instance<'_>, flags: StatsFlags) -> crate::Result<StatsReport> {
    let g = crate::instantiate::instantiate(inst)?;
    let mut s = StatsReport::of_instance(inst, &g);
    if flags.contact_free {
        s.contact_free = Some(crate::semantics::check_contact_free(inst)?.holds());
    }
    add_lowlevel_analyses(&mut s, &g, inst.limits(), flags)?;
    Ok(s)
}

/// Sizes of a low-level game plus the low-level analyses in `flags`;
/// `contact_free` is a high-level notion and is ignored here.
pub fn stats_lowlevel(
    g: &LowLevelGame,
    limits: &Limits,
    flags: StatsFlags,
) -> crate::Result<StatsReport> {
    let mut s = StatsReport::of_lowlevel(g);
    add_lowlevel_analyses(&mut s, g, limits, flags)?;
    Ok(s)
}

fn add_lowlevel_analyses(
    s: &mut StatsReport,
    g: &LowLevelGame,
    limits: &Limits,
    flags: StatsFlags,
) -> crate::Result<()> {
    if flags.reach {
        let r = crate::instantiate::lowlevel_reach(g, limits)?;
        s.reach_nodes = Some(r.node_count());
        s.reach_edges = Some(r.edge_count());
    }
    if flags.one_safe {
        s.one_safe = Some(crate::instantiate::check_one_safe(g, limits)?.holds());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::Valuation;
    use crate::instantiate::{LlPlace, LlTransition};

    fn tiny() -> LowLevelGame {
        let places = vec![
            LlPlace {
                name: "A".into(),
                token: Token::Num(1),
                kind: PlaceKind::Environment,
                bad: false,
                init: true,
            },
            LlPlace {
                name: "B".into(),
                token: Token::tuple([Token::Num(1), Token::Num(2)]),
                kind: PlaceKind::System,
                bad: true,
                init: false,
            },
        ];
        let transitions = vec![LlTransition {
            name: "t".into(),
            valuation: Valuation::new().bind("x", Token::Num(1)),
            pre: vec![0],
            post: vec![1],
        }];
        LowLevelGame::from_parts("tiny", places, transitions)
    }

    #[test]
    fn native_text() {
        assert_eq!(
            to_native(&tiny()),
            "petrigame tiny\n\
             place A[1] kind env init\n\
             place B[(1,2)] kind sys bad\n\
             trans t[x=1]\n\
             arc A[1] -> t[x=1]\n\
             arc t[x=1] -> B[(1,2)]\n"
        );
    }

    #[test]
    fn native_round_trip() {
        let g = tiny();
        assert_eq!(read_native(&to_native(&g)).unwrap(), g);
    }

    #[test]
    fn native_rejects_garbage() {
        let e = read_native("petrigame x\nplace A[1] kind foo\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(read_native("place A[1] kind sys\n").is_err());
        assert!(read_native("petrigame x\narc A[1] -> t[]\n").is_err());
    }

    #[test]
    fn pnml_marks_game_data() {
        let x = to_pnml(&tiny());
        assert!(x.contains("<kind>env</kind>"));
        assert!(x.contains("<bad/>"));
        assert!(x.contains("<initialMarking><text>1</text></initialMarking>"));
        assert_eq!(x.matches("<arc ").count(), 2);
    }

    #[test]
    fn dot_styles() {
        let d = to_dot(&tiny());
        assert!(d.contains("shape=doublecircle"));
        assert!(d.contains("fillcolor=lightgray"));
        assert!(d.contains("p0_A_1 -> t0_t_1;"));
        assert!(d.contains("t0_t_1 -> p1_B_1_2;"));
    }

    #[test]
    fn format_names() {
        assert_eq!("pnml".parse::<ExportFormat>(), Ok(ExportFormat::Pnml));
        assert!("xml".parse::<ExportFormat>().is_err());
    }
}
