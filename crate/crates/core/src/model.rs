//! Declarations and the structure of a parameterized high-level Petri game.
//!
//! Everything here is plain data. Evaluation lives in [`crate::eval`], the
//! token game in [`crate::semantics`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use crate::eval::typecheck::Checker;

/// Upper bound of a range `{1..b}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Bound {
    Lit(i64),
    /// A parameter shifted by a constant, e.g. `n`, `n+1`, `n-1`.
    Param {
        name: String,
        offset: i64,
    },
}

/// Parametric type expression.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SetExpr {
    Range(Bound),
    Black,
    Product(Vec<SetExpr>),
    PowerSet(Box<SetExpr>),
    Const(String),
    /// `{ e | x in S where g }`, used for constants such as the identity
    /// assignment `{ (i,i) | i in R }`.
    Comprehension(Box<Comprehension>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Comprehension {
    pub var: String,
    pub source: SetExpr,
    pub element: Expr,
    pub filter: Option<Guard>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
}

/// Right operand of `+`/`-`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Num(i64),
    Param(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Num(i64),
    Black,
    Var(String),
    /// A parameter used as a number token, e.g. the `k` on an arc.
    Param(String),
    Tuple(Vec<Expr>),
    Arith {
        op: ArithOp,
        lhs: Box<Expr>,
        rhs: Operand,
    },
    /// All elements of a set: a constant name or an inline set expression.
    Set(SetExpr),
    SetLit(Vec<Expr>),
    Difference(Box<Expr>, Box<Expr>),
    App {
        fun: String,
        arg: Box<Expr>,
    },
    Comprehension(Box<Comprehension>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn is_order(self) -> bool {
        !matches!(self, CmpOp::Eq | CmpOp::Ne)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Guard {
    True,
    Compare { op: CmpOp, lhs: Expr, rhs: Expr },
    And(Box<Guard>, Box<Guard>),
    Or(Box<Guard>, Box<Guard>),
    Not(Box<Guard>),
}

impl Guard {
    pub fn cmp(op: CmpOp, lhs: Expr, rhs: Expr) -> Self {
        Guard::Compare { op, lhs, rhs }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Guard::True)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub constraint: Option<Guard>,
    /// Binding used when an instantiation does not name this parameter.
    pub default: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstDecl {
    pub name: String,
    pub body: SetExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub ty: SetExpr,
}

/// `fun F : D -> C = x -> body`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: String,
    pub domain: SetExpr,
    pub codomain: SetExpr,
    pub param: String,
    pub body: Expr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaceKind {
    System,
    Environment,
}

impl PlaceKind {
    pub fn keyword(self) -> &'static str {
        match self {
            PlaceKind::System => "sys",
            PlaceKind::Environment => "env",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitSpec {
    /// Every element of the place type.
    All,
    /// Union of the listed ground expressions; each is element- or set-typed.
    Tokens(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    pub name: String,
    pub kind: PlaceKind,
    pub ty: SetExpr,
    pub bad: bool,
    pub init: Option<InitSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub place: String,
    pub expr: Expr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub name: String,
    pub guard: Guard,
    pub pre: Vec<Arc>,
    pub post: Vec<Arc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HighLevelGame {
    pub name: String,
    pub params: Vec<ParamDecl>,
    pub consts: Vec<ConstDecl>,
    pub vars: Vec<VarDecl>,
    pub funs: Vec<FunDecl>,
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
}

impl HighLevelGame {
    pub fn new(name: impl Into<String>) -> Self {
        HighLevelGame {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn param(&self, name: &str) -> Option<&ParamDecl> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn constant(&self, name: &str) -> Option<&ConstDecl> {
        self.consts.iter().find(|c| c.name == name)
    }

    pub fn var(&self, name: &str) -> Option<&VarDecl> {
        self.vars.iter().find(|v| v.name == name)
    }

    pub fn fun(&self, name: &str) -> Option<&FunDecl> {
        self.funs.iter().find(|f| f.name == name)
    }

    pub fn place_index(&self, name: &str) -> Option<usize> {
        self.places.iter().position(|p| p.name == name)
    }

    pub fn place(&self, name: &str) -> Option<&Place> {
        self.places.iter().find(|p| p.name == name)
    }

    pub fn transition(&self, name: &str) -> Option<&Transition> {
        self.transitions.iter().find(|t| t.name == name)
    }

    pub fn system_places(&self) -> impl Iterator<Item = &Place> {
        self.places.iter().filter(|p| p.kind == PlaceKind::System)
    }

    pub fn environment_places(&self) -> impl Iterator<Item = &Place> {
        self.places
            .iter()
            .filter(|p| p.kind == PlaceKind::Environment)
    }

    pub fn bad_places(&self) -> impl Iterator<Item = &Place> {
        self.places.iter().filter(|p| p.bad)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Declaration, place or transition the problem belongs to.
    pub location: String,
    pub message: String,
}

impl Diagnostic {
    pub fn error(location: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: {}: {}", self.location, self.message)
    }
}

/// Free variables of an expression, excluding comprehension-bound ones.
pub fn expr_free_vars(e: &Expr, out: &mut BTreeSet<String>) {
    collect_expr(e, &mut Vec::new(), out);
}

pub fn guard_free_vars(g: &Guard, out: &mut BTreeSet<String>) {
    collect_guard(g, &mut Vec::new(), out);
}

fn collect_expr<'a>(e: &'a Expr, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
    match e {
        Expr::Num(_) | Expr::Black | Expr::Param(_) | Expr::Set(_) => {}
        Expr::Var(x) => {
            if !bound.contains(&x.as_str()) {
                out.insert(x.clone());
            }
        }
        Expr::Tuple(items) | Expr::SetLit(items) => {
            for it in items {
                collect_expr(it, bound, out);
            }
        }
        Expr::Arith { lhs, .. } => collect_expr(lhs, bound, out),
        Expr::Difference(a, b) => {
            collect_expr(a, bound, out);
            collect_expr(b, bound, out);
        }
        Expr::App { arg, .. } => collect_expr(arg, bound, out),
        Expr::Comprehension(c) => {
            bound.push(&c.var);
            collect_expr(&c.element, bound, out);
            if let Some(g) = &c.filter {
                collect_guard(g, bound, out);
            }
            bound.pop();
        }
    }
}

fn collect_guard<'a>(g: &'a Guard, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
    match g {
        Guard::True => {}
        Guard::Compare { lhs, rhs, .. } => {
            collect_expr(lhs, bound, out);
            collect_expr(rhs, bound, out);
        }
        Guard::And(a, b) | Guard::Or(a, b) => {
            collect_guard(a, bound, out);
            collect_guard(b, bound, out);
        }
        Guard::Not(a) => collect_guard(a, bound, out),
    }
}

/// Variables free in the guard or any arc expression of `t`.
pub fn free_vars(t: &Transition) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    guard_free_vars(&t.guard, &mut out);
    for arc in t.pre.iter().chain(&t.post) {
        expr_free_vars(&arc.expr, &mut out);
    }
    out
}

/// Checks every well-formedness rule of a game. An empty result means the
/// game can be instantiated (subject to parameter constraints).
pub fn validate(game: &HighLevelGame) -> Vec<Diagnostic> {
    let mut diags = Vec::new();

    // one namespace for params, constants, variables and functions
    let mut seen: HashMap<&str, &str> = HashMap::new();
    let decls = game
        .params
        .iter()
        .map(|p| (p.name.as_str(), "parameter"))
        .chain(game.consts.iter().map(|c| (c.name.as_str(), "constant")))
        .chain(game.vars.iter().map(|v| (v.name.as_str(), "variable")))
        .chain(game.funs.iter().map(|f| (f.name.as_str(), "function")));
    for (name, what) in decls {
        if let Some(prev) = seen.insert(name, what) {
            diags.push(Diagnostic::error(
                name,
                format!("{what} `{name}` clashes with an earlier {prev} of the same name"),
            ));
        }
    }

    for p in &game.params {
        if let Some(d) = p.default {
            if d < 1 {
                diags.push(Diagnostic::error(
                    &p.name,
                    format!("default value {d} is not a positive natural number"),
                ));
            }
        }
        if let Some(c) = &p.constraint {
            check_param_guard(game, &p.name, c, &mut diags);
        }
    }

    let checker = Checker::new(game);
    check_const_cycles(game, &mut diags);
    for c in &game.consts {
        checker.set_type_wellformed(&c.name, &c.body, &mut diags);
    }
    for v in &game.vars {
        checker.set_type_wellformed(&v.name, &v.ty, &mut diags);
    }
    for f in &game.funs {
        checker.check_fun(f, &mut diags);
    }

    let mut place_names = HashSet::new();
    for p in &game.places {
        if !place_names.insert(p.name.as_str()) {
            diags.push(Diagnostic::error(&p.name, "duplicate place name"));
        }
        checker.set_type_wellformed(&p.name, &p.ty, &mut diags);
        if let Some(InitSpec::Tokens(items)) = &p.init {
            if items.is_empty() {
                diags.push(Diagnostic::error(&p.name, "initial marking is empty"));
            }
            for (i, e) in items.iter().enumerate() {
                if items[..i].contains(e) {
                    diags.push(Diagnostic::error(
                        &p.name,
                        "initial marking lists the same token twice",
                    ));
                }
                checker.check_init(p, e, &mut diags);
            }
        }
    }
    if !game.places.iter().any(|p| p.init.is_some()) {
        diags.push(Diagnostic::error(
            game.name.as_str(),
            "no place is initially marked",
        ));
    }

    let mut trans_names = HashSet::new();
    for t in &game.transitions {
        if !trans_names.insert(t.name.as_str()) {
            diags.push(Diagnostic::error(&t.name, "duplicate transition name"));
        }
        for (side, arcs) in [("input", &t.pre), ("output", &t.post)] {
            let mut targets = HashSet::new();
            for arc in arcs {
                if !targets.insert(arc.place.as_str()) {
                    diags.push(Diagnostic::error(
                        &t.name,
                        format!("two {side} arcs on place `{}`", arc.place),
                    ));
                }
                match game.place(&arc.place) {
                    None => diags.push(Diagnostic::error(
                        &t.name,
                        format!("{side} arc references undeclared place `{}`", arc.place),
                    )),
                    Some(place) => checker.check_arc(&t.name, place, &arc.expr, &mut diags),
                }
            }
        }
        checker.check_guard(&t.name, &t.guard, &[], &mut diags);
    }
    diags
}

fn check_param_guard(game: &HighLevelGame, owner: &str, g: &Guard, diags: &mut Vec<Diagnostic>) {
    fn exprs<'a>(g: &'a Guard, out: &mut Vec<&'a Expr>) {
        match g {
            Guard::True => {}
            Guard::Compare { lhs, rhs, .. } => {
                out.push(lhs);
                out.push(rhs);
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                exprs(a, out);
                exprs(b, out);
            }
            Guard::Not(a) => exprs(a, out),
        }
    }
    let mut es = Vec::new();
    exprs(g, &mut es);
    for e in es {
        match e {
            Expr::Num(_) => {}
            Expr::Param(name) if game.param(name).is_some() => {}
            Expr::Arith { lhs, rhs, .. } => {
                let ok_lhs = matches!(&**lhs, Expr::Num(_))
                    || matches!(&**lhs, Expr::Param(n) if game.param(n).is_some());
                let ok_rhs = match rhs {
                    Operand::Num(_) => true,
                    Operand::Param(n) => game.param(n).is_some(),
                };
                if !(ok_lhs && ok_rhs) {
                    diags.push(Diagnostic::error(
                        owner,
                        "parameter constraint may only mention parameters and literals",
                    ));
                }
            }
            other => diags.push(Diagnostic::error(
                owner,
                format!("parameter constraint may only mention parameters and literals, found `{other:?}`"),
            )),
        }
    }
}

fn check_const_cycles(game: &HighLevelGame, diags: &mut Vec<Diagnostic>) {
    fn refs(s: &SetExpr, out: &mut Vec<String>) {
        match s {
            SetExpr::Range(_) | SetExpr::Black => {}
            SetExpr::Product(items) => items.iter().for_each(|i| refs(i, out)),
            SetExpr::PowerSet(inner) => refs(inner, out),
            SetExpr::Const(n) => out.push(n.clone()),
            SetExpr::Comprehension(c) => {
                refs(&c.source, out);
                expr_refs(&c.element, out);
            }
        }
    }
    fn expr_refs(e: &Expr, out: &mut Vec<String>) {
        match e {
            Expr::Set(s) => refs(s, out),
            Expr::Tuple(items) | Expr::SetLit(items) => {
                items.iter().for_each(|i| expr_refs(i, out))
            }
            Expr::Arith { lhs, .. } => expr_refs(lhs, out),
            Expr::Difference(a, b) => {
                expr_refs(a, out);
                expr_refs(b, out);
            }
            Expr::App { arg, .. } => expr_refs(arg, out),
            Expr::Comprehension(c) => {
                refs(&c.source, out);
                expr_refs(&c.element, out);
            }
            _ => {}
        }
    }
    // depth-first search with colours
    let names: Vec<&str> = game.consts.iter().map(|c| c.name.as_str()).collect();
    let mut state = vec![0u8; names.len()];
    fn visit(
        i: usize,
        game: &HighLevelGame,
        names: &[&str],
        state: &mut [u8],
        diags: &mut Vec<Diagnostic>,
    ) {
        state[i] = 1;
        let mut out = Vec::new();
        refs(&game.consts[i].body, &mut out);
        for r in out {
            if let Some(j) = names.iter().position(|n| *n == r) {
                match state[j] {
                    0 => visit(j, game, names, state, diags),
                    1 => diags.push(Diagnostic::error(
                        names[i],
                        format!("constant definition is cyclic through `{r}`"),
                    )),
                    _ => {}
                }
            }
        }
        state[i] = 2;
    }
    for i in 0..names.len() {
        if state[i] == 0 {
            visit(i, game, &names, &mut state, diags);
        }
    }
}
