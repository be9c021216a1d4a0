//! Static shape discipline for expressions and guards.
//!
//! Shapes ignore range sizes: `{1..n}` and `{1..k}` both have shape `num`.
//! Whether a concrete value lies inside its range is checked once parameters
//! are bound.

use std::fmt;

use crate::model::{
    Bound, Diagnostic, Expr, FunDecl, Guard, HighLevelGame, Operand, Place, SetExpr,
};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ty {
    Num,
    Black,
    Tuple(Vec<Ty>),
    Set(Box<Ty>),
}

impl Ty {
    pub fn set_of(inner: Ty) -> Ty {
        Ty::Set(Box::new(inner))
    }
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Num => f.write_str("num"),
            Ty::Black => f.write_str("black"),
            Ty::Tuple(items) => {
                f.write_str("(")?;
                for (i, it) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" * ")?;
                    }
                    write!(f, "{it}")?;
                }
                f.write_str(")")
            }
            Ty::Set(inner) => write!(f, "pow({inner})"),
        }
    }
}

/// How an arc expression relates to its place type.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArcMode {
    /// Denotes a single token.
    Element,
    /// Denotes a set of tokens.
    Set,
}

pub(crate) struct Checker<'g> {
    game: &'g HighLevelGame,
}

type Locals<'a> = [(&'a str, Ty)];

impl<'g> Checker<'g> {
    pub(crate) fn new(game: &'g HighLevelGame) -> Self {
        Checker { game }
    }

    /// Element shape of a set expression; reports malformed parts.
    pub(crate) fn set_shape(
        &self,
        loc: &str,
        s: &SetExpr,
        diags: &mut Vec<Diagnostic>,
    ) -> Option<Ty> {
        self.set_shape_depth(loc, s, diags, 0)
    }

    fn set_shape_depth(
        &self,
        loc: &str,
        s: &SetExpr,
        diags: &mut Vec<Diagnostic>,
        depth: usize,
    ) -> Option<Ty> {
        // cycles are reported by validate; just stop here
        if depth > self.game.consts.len() + 1 {
            return None;
        }
        match s {
            SetExpr::Range(b) => {
                match b {
                    Bound::Lit(n) if *n < 1 => diags.push(Diagnostic::error(
                        loc,
                        format!("range upper bound {n} must be at least 1"),
                    )),
                    Bound::Param { name, .. } if self.game.param(name).is_none() => {
                        diags.push(Diagnostic::error(
                            loc,
                            format!("range bound uses undeclared parameter `{name}`"),
                        ))
                    }
                    _ => {}
                }
                Some(Ty::Num)
            }
            SetExpr::Black => Some(Ty::Black),
            SetExpr::Product(items) => {
                if items.len() < 2 {
                    diags.push(Diagnostic::error(loc, "product needs at least two factors"));
                }
                let tys: Vec<_> = items
                    .iter()
                    .map(|i| self.set_shape_depth(loc, i, diags, depth))
                    .collect();
                tys.into_iter().collect::<Option<Vec<_>>>().map(Ty::Tuple)
            }
            SetExpr::PowerSet(inner) => self
                .set_shape_depth(loc, inner, diags, depth)
                .map(Ty::set_of),
            SetExpr::Const(name) => match self.game.constant(name) {
                None => {
                    diags.push(Diagnostic::error(
                        loc,
                        format!("undeclared constant `{name}`"),
                    ));
                    None
                }
                Some(c) => {
                    // errors inside the constant body are reported at the constant
                    let mut sink = Vec::new();
                    self.set_shape_depth(&c.name, &c.body, &mut sink, depth + 1)
                }
            },
            SetExpr::Comprehension(c) => {
                let src = self.set_shape_depth(loc, &c.source, diags, depth)?;
                let locals = [(c.var.as_str(), src)];
                if let Some(g) = &c.filter {
                    self.check_guard(loc, g, &locals, diags);
                }
                let elem = self.expr_ty(loc, &c.element, &locals, diags)?;
                let mut free = std::collections::BTreeSet::new();
                crate::model::expr_free_vars(&c.element, &mut free);
                free.remove(&c.var);
                if !free.is_empty() {
                    diags.push(Diagnostic::error(
                        loc,
                        format!("set comprehension mentions free variables {free:?}"),
                    ));
                }
                Some(elem)
            }
        }
    }

    pub(crate) fn set_type_wellformed(&self, loc: &str, s: &SetExpr, diags: &mut Vec<Diagnostic>) {
        self.set_shape(loc, s, diags);
    }

    pub(crate) fn expr_ty(
        &self,
        loc: &str,
        e: &Expr,
        locals: &Locals<'_>,
        diags: &mut Vec<Diagnostic>,
    ) -> Option<Ty> {
        match e {
            Expr::Num(_) => Some(Ty::Num),
            Expr::Black => Some(Ty::Black),
            Expr::Var(x) => {
                if let Some((_, t)) = locals.iter().rev().find(|(n, _)| *n == x) {
                    return Some(t.clone());
                }
                match self.game.var(x) {
                    Some(v) => self.set_shape(loc, &v.ty, diags),
                    None => {
                        diags.push(Diagnostic::error(loc, format!("undeclared variable `{x}`")));
                        None
                    }
                }
            }
            Expr::Param(p) => {
                if self.game.param(p).is_none() {
                    diags.push(Diagnostic::error(
                        loc,
                        format!("undeclared parameter `{p}`"),
                    ));
                }
                Some(Ty::Num)
            }
            Expr::Tuple(items) => {
                if items.len() < 2 {
                    diags.push(Diagnostic::error(
                        loc,
                        "tuple needs at least two components",
                    ));
                }
                let tys: Vec<_> = items
                    .iter()
                    .map(|i| self.expr_ty(loc, i, locals, diags))
                    .collect();
                tys.into_iter().collect::<Option<Vec<_>>>().map(Ty::Tuple)
            }
            Expr::Arith { lhs, rhs, .. } => {
                let l = self.expr_ty(loc, lhs, locals, diags)?;
                if l != Ty::Num {
                    diags.push(Diagnostic::error(
                        loc,
                        format!("arithmetic on a value of type {l}"),
                    ));
                }
                if let Operand::Param(p) = rhs {
                    if self.game.param(p).is_none() {
                        diags.push(Diagnostic::error(
                            loc,
                            format!("undeclared parameter `{p}`"),
                        ));
                    }
                }
                Some(Ty::Num)
            }
            Expr::Set(s) => self.set_shape(loc, s, diags).map(Ty::set_of),
            Expr::SetLit(items) => {
                let mut elem: Option<Ty> = None;
                for it in items {
                    let t = self.expr_ty(loc, it, locals, diags)?;
                    match &elem {
                        None => elem = Some(t),
                        Some(prev) if *prev != t => {
                            diags.push(Diagnostic::error(
                                loc,
                                format!("set literal mixes {prev} and {t}"),
                            ));
                            return None;
                        }
                        _ => {}
                    }
                }
                match elem {
                    Some(t) => Some(Ty::set_of(t)),
                    None => {
                        diags.push(Diagnostic::error(loc, "empty set literal has no type"));
                        None
                    }
                }
            }
            Expr::Difference(a, b) => {
                let ta = self.expr_ty(loc, a, locals, diags)?;
                let tb = self.expr_ty(loc, b, locals, diags)?;
                if !matches!(ta, Ty::Set(_)) || ta != tb {
                    diags.push(Diagnostic::error(
                        loc,
                        format!("set difference between {ta} and {tb}"),
                    ));
                    return None;
                }
                Some(ta)
            }
            Expr::App { fun, arg } => {
                let Some(f) = self.game.fun(fun) else {
                    diags.push(Diagnostic::error(
                        loc,
                        format!("undeclared function `{fun}`"),
                    ));
                    return None;
                };
                let targ = self.expr_ty(loc, arg, locals, diags);
                let dom = self.set_shape(&f.name, &f.domain, &mut Vec::new());
                if let (Some(a), Some(d)) = (&targ, &dom) {
                    if a != d {
                        diags.push(Diagnostic::error(
                            loc,
                            format!("`{fun}` expects an argument of type {d}, got {a}"),
                        ));
                    }
                }
                self.set_shape(&f.name, &f.codomain, &mut Vec::new())
            }
            Expr::Comprehension(c) => {
                let src = self.set_shape(loc, &c.source, diags)?;
                let mut inner: Vec<(&str, Ty)> = locals.to_vec();
                inner.push((c.var.as_str(), src));
                if let Some(g) = &c.filter {
                    self.check_guard(loc, g, &inner, diags);
                }
                self.expr_ty(loc, &c.element, &inner, diags).map(Ty::set_of)
            }
        }
    }

    pub(crate) fn check_guard(
        &self,
        loc: &str,
        g: &Guard,
        locals: &Locals<'_>,
        diags: &mut Vec<Diagnostic>,
    ) {
        match g {
            Guard::True => {}
            Guard::Compare { op, lhs, rhs } => {
                let l = self.expr_ty(loc, lhs, locals, diags);
                let r = self.expr_ty(loc, rhs, locals, diags);
                if let (Some(l), Some(r)) = (l, r) {
                    if l != r {
                        diags.push(Diagnostic::error(
                            loc,
                            format!("comparison `{}` between {l} and {r}", op.symbol()),
                        ));
                    } else if op.is_order() && l != Ty::Num {
                        diags.push(Diagnostic::error(
                            loc,
                            format!("order comparison `{}` on non-numbers ({l})", op.symbol()),
                        ));
                    }
                }
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                self.check_guard(loc, a, locals, diags);
                self.check_guard(loc, b, locals, diags);
            }
            Guard::Not(a) => self.check_guard(loc, a, locals, diags),
        }
    }

    pub(crate) fn check_fun(&self, f: &FunDecl, diags: &mut Vec<Diagnostic>) {
        let dom = self.set_shape(&f.name, &f.domain, diags);
        let cod = self.set_shape(&f.name, &f.codomain, diags);
        let Some(dom) = dom else { return };
        let mut free = std::collections::BTreeSet::new();
        crate::model::expr_free_vars(&f.body, &mut free);
        free.remove(&f.param);
        if !free.is_empty() {
            diags.push(Diagnostic::error(
                &f.name,
                format!(
                    "function body mentions variables other than `{}`: {free:?}",
                    f.param
                ),
            ));
            return;
        }
        let locals = [(f.param.as_str(), dom)];
        if let (Some(body), Some(cod)) = (self.expr_ty(&f.name, &f.body, &locals, diags), cod) {
            if body != cod {
                diags.push(Diagnostic::error(
                    &f.name,
                    format!("function body has type {body}, declared codomain is {cod}"),
                ));
            }
        }
    }

    pub(crate) fn check_init(&self, place: &Place, e: &Expr, diags: &mut Vec<Diagnostic>) {
        let mut free = std::collections::BTreeSet::new();
        crate::model::expr_free_vars(e, &mut free);
        if !free.is_empty() {
            diags.push(Diagnostic::error(
                &place.name,
                format!("initial token mentions variables {free:?}"),
            ));
            return;
        }
        self.check_arc(&place.name, place, e, diags);
    }

    pub(crate) fn arc_mode(
        &self,
        loc: &str,
        place: &Place,
        e: &Expr,
        diags: &mut Vec<Diagnostic>,
    ) -> Option<ArcMode> {
        let pt = self.set_shape(&place.name, &place.ty, &mut Vec::new())?;
        let et = self.expr_ty(loc, e, &[], diags)?;
        if et == pt {
            Some(ArcMode::Element)
        } else if et == Ty::set_of(pt.clone()) {
            Some(ArcMode::Set)
        } else {
            diags.push(Diagnostic::error(
                loc,
                format!(
                    "expression on place `{}` has type {et}, expected {pt} or pow({pt})",
                    place.name
                ),
            ));
            None
        }
    }

    pub(crate) fn check_arc(
        &self,
        loc: &str,
        place: &Place,
        e: &Expr,
        diags: &mut Vec<Diagnostic>,
    ) {
        self.arc_mode(loc, place, e, diags);
    }
}

/// Shape of a closed-over-declarations expression. Free variables must be
/// declared in the game.
pub fn typecheck_expr(game: &HighLevelGame, e: &Expr) -> Result<Ty, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let t = Checker::new(game).expr_ty("expression", e, &[], &mut diags);
    match t {
        Some(t) if diags.is_empty() => Ok(t),
        _ => Err(diags),
    }
}

pub fn typecheck_guard(game: &HighLevelGame, g: &Guard) -> Result<(), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    Checker::new(game).check_guard("guard", g, &[], &mut diags);
    if diags.is_empty() {
        Ok(())
    } else {
        Err(diags)
    }
}

/// Element shape of a set expression.
pub fn set_shape(game: &HighLevelGame, s: &SetExpr) -> Result<Ty, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let t = Checker::new(game).set_shape("type", s, &mut diags);
    match t {
        Some(t) if diags.is_empty() => Ok(t),
        _ => Err(diags),
    }
}

/// Whether `e` denotes one token of `place` or a set of them.
pub fn arc_mode(game: &HighLevelGame, place: &Place, e: &Expr) -> Result<ArcMode, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    match Checker::new(game).arc_mode(&place.name, place, e, &mut diags) {
        Some(m) if diags.is_empty() => Ok(m),
        _ => Err(diags),
    }
}
