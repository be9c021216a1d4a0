use std::collections::{HashMap, HashSet};

use super::lexer::{lex, Spanned, Tok};
use super::ParseDiagnostic;
use crate::model::*;

const KEYWORDS: [&str; 20] = [
    "game", "kind", "par", "set", "var", "fun", "place", "trans", "in", "out", "sys", "env", "bad",
    "init", "all", "where", "pow", "black", "true", "nat",
];

const ITEMS: [&str; 6] = ["par", "set", "var", "fun", "place", "trans"];

type PResult<T> = Result<T, ParseDiagnostic>;

/// Parse output before validation, with the source position of every named
/// declaration so later diagnostics can point at it.
pub(crate) struct Parsed {
    pub game: HighLevelGame,
    pub positions: HashMap<String, (usize, usize)>,
    pub errors: Vec<ParseDiagnostic>,
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (l, c) = self.here();
        Err(ParseDiagnostic::error(l, c, msg))
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        if self.is_kw(k) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", self.describe()))
        }
    }

    fn expect_kw(&mut self, k: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            self.err(format!("expected `{k}`, found {}", self.describe()))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            Tok::Ident(s) => self.err(format!("`{s}` is a reserved word")),
            _ => self.err(format!("expected a name, found {}", self.describe())),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(if neg { -i } else { i })
            }
            _ => self.err(format!("expected an integer, found {}", self.describe())),
        }
    }

    // ---- sets ----

    fn set_expr(&mut self) -> PResult<SetExpr> {
        let mut items = vec![self.set_factor()?];
        while self.eat_sym("*") {
            items.push(self.set_factor()?);
        }
        Ok(if items.len() == 1 {
            items.pop().unwrap()
        } else {
            SetExpr::Product(items)
        })
    }

    fn set_factor(&mut self) -> PResult<SetExpr> {
        if self.eat_kw("black") {
            return Ok(SetExpr::Black);
        }
        if self.eat_kw("pow") {
            self.expect_sym("(")?;
            let s = self.set_expr()?;
            self.expect_sym(")")?;
            return Ok(SetExpr::PowerSet(Box::new(s)));
        }
        if self.eat_sym("(") {
            let s = self.set_expr()?;
            self.expect_sym(")")?;
            return Ok(s);
        }
        if self.is_sym("{") {
            if let Some(b) = self.try_range()? {
                return Ok(SetExpr::Range(b));
            }
            self.bump();
            let element = self.expr()?;
            return Ok(SetExpr::Comprehension(Box::new(
                self.comprehension_tail(element)?,
            )));
        }
        Ok(SetExpr::Const(self.ident()?))
    }

    /// `{1..b}` if the input starts with one.
    fn try_range(&mut self) -> PResult<Option<Bound>> {
        let one = matches!(self.peek_at(1), Tok::Int(1));
        let dots = matches!(self.peek_at(2), Tok::Sym(".."));
        if !(one && dots) {
            return Ok(None);
        }
        self.pos += 3;
        let b = if let Tok::Ident(_) = self.peek() {
            let name = self.ident()?;
            let offset = if self.eat_sym("+") {
                self.int()?
            } else if self.eat_sym("-") {
                -self.int()?
            } else {
                0
            };
            Bound::Param { name, offset }
        } else {
            Bound::Lit(self.int()?)
        };
        self.expect_sym("}")?;
        Ok(Some(b))
    }

    /// After `{ element`: `| x in S [where g] }`.
    fn comprehension_tail(&mut self, element: Expr) -> PResult<Comprehension> {
        self.expect_sym("|")?;
        let var = self.ident()?;
        self.expect_kw("in")?;
        let source = self.set_expr()?;
        let filter = if self.eat_kw("where") {
            Some(self.guard()?)
        } else {
            None
        };
        self.expect_sym("}")?;
        Ok(Comprehension {
            var,
            source,
            element,
            filter,
        })
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let mut e = self.arith()?;
        while self.eat_sym("\\") {
            let rhs = self.arith()?;
            e = Expr::Difference(Box::new(e), Box::new(rhs));
        }
        Ok(e)
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(e);
            };
            let rhs = match self.peek() {
                Tok::Ident(_) => Operand::Param(self.ident()?),
                _ => Operand::Num(self.int()?),
            };
            e = Expr::Arith {
                op,
                lhs: Box::new(e),
                rhs,
            };
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(_) => Ok(Expr::Num(self.int()?)),
            Tok::Sym("-") if matches!(self.peek_at(1), Tok::Int(_)) => Ok(Expr::Num(self.int()?)),
            Tok::Sym(".") => {
                self.bump();
                Ok(Expr::Black)
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.expr()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym(")")?;
                Ok(Expr::Tuple(items))
            }
            Tok::Sym("{") => {
                if let Some(b) = self.try_range()? {
                    return Ok(Expr::Set(SetExpr::Range(b)));
                }
                self.bump();
                let first = self.expr()?;
                if self.is_sym("|") {
                    return Ok(Expr::Comprehension(Box::new(
                        self.comprehension_tail(first)?,
                    )));
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym("}")?;
                Ok(Expr::SetLit(items))
            }
            Tok::Ident(k) if k == "all" => {
                self.bump();
                self.expect_sym("(")?;
                let s = self.set_expr()?;
                self.expect_sym(")")?;
                Ok(Expr::Set(s))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.eat_sym("(") {
                    let arg = self.expr()?;
                    self.expect_sym(")")?;
                    Ok(Expr::App {
                        fun: name,
                        arg: Box::new(arg),
                    })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            _ => self.err(format!("expected an expression, found {}", self.describe())),
        }
    }

    // ---- guards ----

    fn guard(&mut self) -> PResult<Guard> {
        let mut g = self.conj()?;
        while self.eat_sym("||") {
            let rhs = self.conj()?;
            g = Guard::Or(Box::new(g), Box::new(rhs));
        }
        Ok(g)
    }

    fn conj(&mut self) -> PResult<Guard> {
        let mut g = self.neg()?;
        while self.eat_sym("&&") {
            let rhs = self.neg()?;
            g = Guard::And(Box::new(g), Box::new(rhs));
        }
        Ok(g)
    }

    fn neg(&mut self) -> PResult<Guard> {
        if self.eat_sym("!") {
            return Ok(Guard::Not(Box::new(self.neg()?)));
        }
        if self.eat_kw("true") {
            return Ok(Guard::True);
        }
        if self.is_sym("(") {
            let save = self.pos;
            self.bump();
            if let Ok(g) = self.guard() {
                if self.eat_sym(")") && self.cmp_op().is_none() {
                    return Ok(g);
                }
            }
            self.pos = save;
        }
        let lhs = self.expr()?;
        let Some(op) = self.cmp_op() else {
            return self.err(format!("expected a comparison, found {}", self.describe()));
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(Guard::cmp(op, lhs, rhs))
    }

    fn cmp_op(&self) -> Option<CmpOp> {
        Some(match self.peek() {
            Tok::Sym("=") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            _ => return None,
        })
    }

    // ---- items ----

    fn item(
        &mut self,
        game: &mut HighLevelGame,
        pos: &mut HashMap<String, (usize, usize)>,
    ) -> PResult<()> {
        let kw = match self.peek() {
            Tok::Ident(k) if ITEMS.contains(&k.as_str()) => k.clone(),
            _ => return self.err(format!("expected a declaration, found {}", self.describe())),
        };
        self.bump();
        match kw.as_str() {
            "par" => loop {
                let at = self.here();
                let name = self.ident()?;
                if self.eat_sym(":") {
                    self.expect_kw("nat")?;
                }
                let default = if self.eat_sym("=") {
                    Some(self.int()?)
                } else {
                    None
                };
                let constraint = if self.eat_kw("where") {
                    Some(self.guard()?)
                } else {
                    None
                };
                pos.entry(name.clone()).or_insert(at);
                game.params.push(ParamDecl {
                    name,
                    constraint,
                    default,
                });
                if !self.eat_sym(",") {
                    break self.expect_sym(";");
                }
            },
            "set" => {
                let at = self.here();
                let name = self.ident()?;
                self.expect_sym("=")?;
                let body = self.set_expr()?;
                self.expect_sym(";")?;
                pos.entry(name.clone()).or_insert(at);
                game.consts.push(ConstDecl { name, body });
                Ok(())
            }
            "var" => {
                let mut names = vec![(self.here(), self.ident()?)];
                while self.eat_sym(",") {
                    names.push((self.here(), self.ident()?));
                }
                self.expect_sym(":")?;
                let ty = self.set_expr()?;
                self.expect_sym(";")?;
                for (at, name) in names {
                    pos.entry(name.clone()).or_insert(at);
                    game.vars.push(VarDecl {
                        name,
                        ty: ty.clone(),
                    });
                }
                Ok(())
            }
            "fun" => {
                let at = self.here();
                let name = self.ident()?;
                self.expect_sym(":")?;
                let domain = self.set_expr()?;
                self.expect_sym("->")?;
                let codomain = self.set_expr()?;
                self.expect_sym("=")?;
                let param = self.ident()?;
                self.expect_sym("->")?;
                let body = self.expr()?;
                self.expect_sym(";")?;
                pos.entry(name.clone()).or_insert(at);
                game.funs.push(FunDecl {
                    name,
                    domain,
                    codomain,
                    param,
                    body,
                });
                Ok(())
            }
            "place" => {
                let at = self.here();
                let name = self.ident()?;
                let ty = if self.eat_sym(":") {
                    self.set_expr()?
                } else {
                    SetExpr::Black
                };
                let mut kind = None;
                let mut bad = false;
                let mut init = None;
                while !self.eat_sym(";") {
                    if self.eat_kw("kind") {
                        let k = if self.eat_kw("sys") {
                            PlaceKind::System
                        } else if self.eat_kw("env") {
                            PlaceKind::Environment
                        } else {
                            return self.err(format!(
                                "expected `sys` or `env`, found {}",
                                self.describe()
                            ));
                        };
                        if kind.replace(k).is_some() {
                            return self.err("place kind given twice");
                        }
                    } else if self.eat_kw("bad") {
                        bad = true;
                    } else if self.eat_kw("init") {
                        if self.eat_kw("all") {
                            init = Some(InitSpec::All);
                        } else {
                            self.expect_sym("{")?;
                            let mut items = vec![self.expr()?];
                            while self.eat_sym(",") {
                                items.push(self.expr()?);
                            }
                            self.expect_sym("}")?;
                            init = Some(InitSpec::Tokens(items));
                        }
                    } else {
                        return self.err(format!(
                            "expected `kind`, `bad`, `init` or `;`, found {}",
                            self.describe()
                        ));
                    }
                }
                let Some(kind) = kind else {
                    let (l, c) = at;
                    return Err(ParseDiagnostic::error(
                        l,
                        c,
                        format!("place `{name}` needs `kind sys` or `kind env`"),
                    ));
                };
                pos.entry(name.clone()).or_insert(at);
                game.places.push(Place {
                    name,
                    kind,
                    ty,
                    bad,
                    init,
                });
                Ok(())
            }
            _ => {
                let at = self.here();
                let name = self.ident()?;
                let guard = if self.eat_sym("[") {
                    let g = self.guard()?;
                    self.expect_sym("]")?;
                    g
                } else {
                    Guard::True
                };
                self.expect_sym("{")?;
                let mut pre = Vec::new();
                let mut post = Vec::new();
                while !self.eat_sym("}") {
                    let side = if self.eat_kw("in") {
                        &mut pre
                    } else if self.eat_kw("out") {
                        &mut post
                    } else {
                        return self.err(format!(
                            "expected `in`, `out` or `}}`, found {}",
                            self.describe()
                        ));
                    };
                    let place = self.ident()?;
                    let expr = if self.eat_sym(":") {
                        self.expr()?
                    } else {
                        Expr::Black
                    };
                    self.expect_sym(";")?;
                    side.push(Arc { place, expr });
                }
                self.eat_sym(";");
                pos.entry(name.clone()).or_insert(at);
                game.transitions.push(Transition {
                    name,
                    guard,
                    pre,
                    post,
                });
                Ok(())
            }
        }
    }

    fn recover(&mut self) {
        while !matches!(self.peek(), Tok::Eof) {
            if matches!(self.peek(), Tok::Ident(k) if ITEMS.contains(&k.as_str())) {
                return;
            }
            self.bump();
        }
    }
}

pub(crate) fn parse_source(src: &str) -> Parsed {
    let mut game = HighLevelGame::default();
    let mut positions = HashMap::new();
    let toks = match lex(src) {
        Ok(t) => t,
        Err(e) => {
            return Parsed {
                game,
                positions,
                errors: vec![e],
            }
        }
    };
    let mut p = Parser { toks, pos: 0 };
    let mut errors = Vec::new();
    if matches!(p.peek(), Tok::Eof) {
        errors.push(ParseDiagnostic::error(1, 1, "no game declared"));
        return Parsed {
            game,
            positions,
            errors,
        };
    }
    let header = p.expect_kw("game").and_then(|_| p.ident());
    match header {
        Ok(name) => {
            game.name = name;
            p.eat_sym(";");
        }
        Err(e) => {
            errors.push(e);
            p.recover();
        }
    }
    while !matches!(p.peek(), Tok::Eof) {
        if let Err(e) = p.item(&mut game, &mut positions) {
            errors.push(e);
            p.recover();
        }
    }
    resolve(&mut game);
    Parsed {
        game,
        positions,
        errors,
    }
}

/// Turns identifiers parsed as `Expr::Var` into parameters or constants
/// according to the declarations; bound and declared variables win.
fn resolve(game: &mut HighLevelGame) {
    let vars: HashSet<String> = game.vars.iter().map(|v| v.name.clone()).collect();
    let params: HashSet<String> = game.params.iter().map(|p| p.name.clone()).collect();
    let consts: HashSet<String> = game.consts.iter().map(|c| c.name.clone()).collect();
    let r = Resolver {
        vars,
        params,
        consts,
    };
    let mut scope = Vec::new();
    for p in &mut game.params {
        if let Some(g) = &mut p.constraint {
            r.guard(g, &mut scope);
        }
    }
    for c in &mut game.consts {
        r.set(&mut c.body, &mut scope);
    }
    for v in &mut game.vars {
        r.set(&mut v.ty, &mut scope);
    }
    for f in &mut game.funs {
        r.set(&mut f.domain, &mut scope);
        r.set(&mut f.codomain, &mut scope);
        scope.push(f.param.clone());
        r.expr(&mut f.body, &mut scope);
        scope.pop();
    }
    for p in &mut game.places {
        r.set(&mut p.ty, &mut scope);
        if let Some(InitSpec::Tokens(items)) = &mut p.init {
            for e in items {
                r.expr(e, &mut scope);
            }
        }
    }
    for t in &mut game.transitions {
        r.guard(&mut t.guard, &mut scope);
        for a in t.pre.iter_mut().chain(t.post.iter_mut()) {
            r.expr(&mut a.expr, &mut scope);
        }
    }
}

struct Resolver {
    vars: HashSet<String>,
    params: HashSet<String>,
    consts: HashSet<String>,
}

impl Resolver {
    fn set(&self, s: &mut SetExpr, scope: &mut Vec<String>) {
        match s {
            SetExpr::Range(_) | SetExpr::Black | SetExpr::Const(_) => {}
            SetExpr::Product(items) => items.iter_mut().for_each(|i| self.set(i, scope)),
            SetExpr::PowerSet(inner) => self.set(inner, scope),
            SetExpr::Comprehension(c) => self.comprehension(c, scope),
        }
    }

    fn comprehension(&self, c: &mut Comprehension, scope: &mut Vec<String>) {
        self.set(&mut c.source, scope);
        scope.push(c.var.clone());
        self.expr(&mut c.element, scope);
        if let Some(g) = &mut c.filter {
            self.guard(g, scope);
        }
        scope.pop();
    }

    fn expr(&self, e: &mut Expr, scope: &mut Vec<String>) {
        match e {
            Expr::Var(x) => {
                if scope.contains(x) || self.vars.contains(x) {
                    return;
                }
                if self.params.contains(x) {
                    *e = Expr::Param(std::mem::take(x));
                } else if self.consts.contains(x) {
                    *e = Expr::Set(SetExpr::Const(std::mem::take(x)));
                }
            }
            Expr::Num(_) | Expr::Black | Expr::Param(_) => {}
            Expr::Set(s) => self.set(s, scope),
            Expr::Tuple(items) | Expr::SetLit(items) => {
                items.iter_mut().for_each(|i| self.expr(i, scope))
            }
            Expr::Arith { lhs, .. } => self.expr(lhs, scope),
            Expr::Difference(a, b) => {
                self.expr(a, scope);
                self.expr(b, scope);
            }
            Expr::App { arg, .. } => self.expr(arg, scope),
            Expr::Comprehension(c) => self.comprehension(c, scope),
        }
    }

    fn guard(&self, g: &mut Guard, scope: &mut Vec<String>) {
        match g {
            Guard::True => {}
            Guard::Compare { lhs, rhs, .. } => {
                self.expr(lhs, scope);
                self.expr(rhs, scope);
            }
            Guard::And(a, b) | Guard::Or(a, b) => {
                self.guard(a, scope);
                self.guard(b, scope);
            }
            Guard::Not(a) => self.guard(a, scope),
        }
    }
}
