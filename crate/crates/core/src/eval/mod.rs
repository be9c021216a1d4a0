//! Parameter binding, elaboration of set expressions and evaluation of
//! expressions and guards under valuations.

pub mod token;
pub mod typecheck;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

pub use token::Token;
pub use typecheck::{arc_mode, set_shape, typecheck_expr, typecheck_guard, ArcMode, Ty};

use crate::model::{
    free_vars, validate, ArithOp, Bound, CmpOp, Comprehension, Diagnostic, Expr, Guard,
    HighLevelGame, InitSpec, Operand, Place, SetExpr, Severity, Transition,
};
use crate::Limits;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("game is not well-formed ({} diagnostics)", .0.len())]
    Invalid(Vec<Diagnostic>),
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("parameter `{0}` is not bound")]
    UnboundParam(String),
    #[error("parameter `{name}` = {value} is not a positive natural number")]
    NonPositiveParam { name: String, value: i64 },
    #[error("parameter constraint `{0}` does not hold")]
    ConstraintViolated(String),
    #[error("type `{0}` denotes the empty set")]
    EmptyType(String),
    #[error("power set of a {size}-element set exceeds the limit of {limit} elements")]
    PowerSetTooLarge { size: usize, limit: usize },
    #[error("type with {size} elements exceeds the limit of {limit}")]
    TypeTooLarge { size: usize, limit: usize },
    #[error("transition `{transition}` has {count} valuations, limit is {limit}")]
    TooManyValuations {
        transition: String,
        count: u128,
        limit: usize,
    },
    #[error("value {token} lies outside type `{ty}`")]
    NotInType { token: Token, ty: String },
    #[error("variable `{0}` is not bound")]
    UnboundVariable(String),
    #[error("ill-typed value: {0}")]
    Mismatch(String),
    #[error("initial marking of `{place}` lists {token} twice")]
    DuplicateInit { place: String, token: Token },
    #[error("initial marking of `{0}` is empty")]
    EmptyInit(String),
}

impl EvalError {
    /// Errors caused by configured size limits rather than by the model.
    pub fn is_limit(&self) -> bool {
        matches!(
            self,
            EvalError::PowerSetTooLarge { .. }
                | EvalError::TypeTooLarge { .. }
                | EvalError::TooManyValuations { .. }
        )
    }
}

pub type EvalResult<T> = Result<T, EvalError>;

/// Binding of every declared parameter to a natural number `>= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ParamEnv {
    bindings: BTreeMap<String, i64>,
}

impl ParamEnv {
    /// Binds the parameters of `game`. Parameters missing from `bindings`
    /// fall back to their declared default.
    pub fn new<'a>(
        game: &HighLevelGame,
        bindings: impl IntoIterator<Item = (&'a str, i64)>,
    ) -> EvalResult<Self> {
        let mut map = BTreeMap::new();
        for (name, value) in bindings {
            if game.param(name).is_none() {
                return Err(EvalError::UnknownParam(name.to_string()));
            }
            map.insert(name.to_string(), value);
        }
        for p in &game.params {
            if !map.contains_key(&p.name) {
                match p.default {
                    Some(d) => {
                        map.insert(p.name.clone(), d);
                    }
                    None => return Err(EvalError::UnboundParam(p.name.clone())),
                }
            }
        }
        for (name, &value) in &map {
            if value < 1 {
                return Err(EvalError::NonPositiveParam {
                    name: name.clone(),
                    value,
                });
            }
        }
        let env = ParamEnv { bindings: map };
        for p in &game.params {
            if let Some(c) = &p.constraint {
                if !env.eval_constraint(c)? {
                    return Err(EvalError::ConstraintViolated(c.to_string()));
                }
            }
        }
        Ok(env)
    }

    pub fn get(&self, name: &str) -> EvalResult<i64> {
        self.bindings
            .get(name)
            .copied()
            .ok_or_else(|| EvalError::UnboundParam(name.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn operand(&self, o: &Operand) -> EvalResult<i64> {
        match o {
            Operand::Num(n) => Ok(*n),
            Operand::Param(p) => self.get(p),
        }
    }

    fn constraint_value(&self, e: &Expr) -> EvalResult<i64> {
        match e {
            Expr::Num(n) => Ok(*n),
            Expr::Param(p) => self.get(p),
            Expr::Arith { op, lhs, rhs } => {
                let l = self.constraint_value(lhs)?;
                Ok(apply_arith(*op, l, self.operand(rhs)?))
            }
            other => Err(EvalError::Mismatch(format!(
                "`{other}` is not allowed in a parameter constraint"
            ))),
        }
    }

    fn eval_constraint(&self, g: &Guard) -> EvalResult<bool> {
        Ok(match g {
            Guard::True => true,
            Guard::Compare { op, lhs, rhs } => compare(
                *op,
                &Token::Num(self.constraint_value(lhs)?),
                &Token::Num(self.constraint_value(rhs)?),
            ),
            Guard::And(a, b) => self.eval_constraint(a)? && self.eval_constraint(b)?,
            Guard::Or(a, b) => self.eval_constraint(a)? || self.eval_constraint(b)?,
            Guard::Not(a) => !self.eval_constraint(a)?,
        })
    }
}

impl fmt::Display for ParamEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

/// A set expression after parameter binding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConcreteType {
    pub elements: BTreeSet<Token>,
    pub origin: SetExpr,
}

impl ConcreteType {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, t: &Token) -> bool {
        self.elements.contains(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Token> {
        self.elements.iter()
    }
}

/// Assignment of tokens to the free variables of a transition.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Valuation(BTreeMap<String, Token>);

impl Valuation {
    pub fn new() -> Self {
        Valuation::default()
    }

    pub fn get(&self, var: &str) -> Option<&Token> {
        self.0.get(var)
    }

    pub fn bind(mut self, var: impl Into<String>, t: Token) -> Self {
        self.0.insert(var.into(), t);
        self
    }

    pub fn insert(&mut self, var: impl Into<String>, t: Token) {
        self.0.insert(var.into(), t);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Token)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl FromStr for Valuation {
    type Err = token::TokenParseError;

    /// Parses the `x=1,y=(1,2)` rendering produced by `Display`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut v = Valuation::new();
        if s.is_empty() {
            return Ok(v);
        }
        let mut depth = 0i32;
        let mut start = 0;
        let mut parts = Vec::new();
        for (i, c) in s.char_indices() {
            match c {
                '(' | '{' => depth += 1,
                ')' | '}' => depth -= 1,
                ',' if depth == 0 => {
                    parts.push(&s[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        parts.push(&s[start..]);
        for part in parts {
            let (name, tok) = part
                .split_once('=')
                .ok_or_else(|| token::TokenParseError(part.to_string()))?;
            v.insert(name, tok.parse()?);
        }
        Ok(v)
    }
}

/// A game together with a parameter binding: constants, variable types and
/// place types are elaborated once.
#[derive(Debug, Clone)]
pub struct Instance<'g> {
    game: &'g HighLevelGame,
    env: ParamEnv,
    limits: Limits,
    consts: HashMap<String, ConcreteType>,
    var_types: HashMap<String, ConcreteType>,
    place_types: Vec<ConcreteType>,
    arc_modes: Vec<(Vec<ArcMode>, Vec<ArcMode>)>,
}

impl<'g> Instance<'g> {
    pub fn new(game: &'g HighLevelGame, env: ParamEnv, limits: Limits) -> EvalResult<Self> {
        let diags: Vec<_> = validate(game)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if !diags.is_empty() {
            return Err(EvalError::Invalid(diags));
        }
        let mut inst = Instance {
            game,
            env,
            limits,
            consts: HashMap::new(),
            var_types: HashMap::new(),
            place_types: Vec::new(),
            arc_modes: Vec::new(),
        };
        for c in &game.consts {
            let ty = inst.elaborate(&c.body)?;
            inst.consts.insert(c.name.clone(), ty);
        }
        for v in &game.vars {
            let ty = inst.elaborate(&v.ty)?;
            inst.var_types.insert(v.name.clone(), ty);
        }
        for p in &game.places {
            let ty = inst.elaborate(&p.ty)?;
            inst.place_types.push(ty);
        }
        for t in &game.transitions {
            let modes = |arcs: &[crate::model::Arc]| -> EvalResult<Vec<ArcMode>> {
                arcs.iter()
                    .map(|a| {
                        let place = game.place(&a.place).expect("validated");
                        arc_mode(game, place, &a.expr).map_err(EvalError::Invalid)
                    })
                    .collect()
            };
            inst.arc_modes.push((modes(&t.pre)?, modes(&t.post)?));
        }
        Ok(inst)
    }

    pub fn game(&self) -> &'g HighLevelGame {
        self.game
    }

    pub fn env(&self) -> &ParamEnv {
        &self.env
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn place_type(&self, index: usize) -> &ConcreteType {
        &self.place_types[index]
    }

    pub fn place_types(&self) -> &[ConcreteType] {
        &self.place_types
    }

    pub fn var_type(&self, name: &str) -> EvalResult<&ConcreteType> {
        self.var_types
            .get(name)
            .ok_or_else(|| EvalError::UnboundVariable(name.to_string()))
    }

    pub(crate) fn arc_modes(&self, transition: usize) -> &(Vec<ArcMode>, Vec<ArcMode>) {
        &self.arc_modes[transition]
    }

    pub fn elaborate(&self, s: &SetExpr) -> EvalResult<ConcreteType> {
        let elements = self.elements(s)?;
        if elements.is_empty() {
            return Err(EvalError::EmptyType(s.to_string()));
        }
        Ok(ConcreteType {
            elements,
            origin: s.clone(),
        })
    }

    fn bound(&self, b: &Bound) -> EvalResult<i64> {
        match b {
            Bound::Lit(n) => Ok(*n),
            Bound::Param { name, offset } => Ok(self.env.get(name)? + offset),
        }
    }

    fn elements(&self, s: &SetExpr) -> EvalResult<BTreeSet<Token>> {
        match s {
            SetExpr::Range(b) => Ok((1..=self.bound(b)?).map(Token::Num).collect()),
            SetExpr::Black => Ok(BTreeSet::from([Token::Black])),
            SetExpr::Product(items) => {
                let factors = items
                    .iter()
                    .map(|i| self.elements(i).map(|s| s.into_iter().collect::<Vec<_>>()))
                    .collect::<EvalResult<Vec<_>>>()?;
                let size: u128 = factors.iter().map(|f| f.len() as u128).product();
                if size > self.limits.max_valuations as u128 {
                    return Err(EvalError::TypeTooLarge {
                        size: size.min(usize::MAX as u128) as usize,
                        limit: self.limits.max_valuations,
                    });
                }
                Ok(cartesian(&factors).into_iter().map(Token::Tup).collect())
            }
            SetExpr::PowerSet(inner) => {
                let base: Vec<Token> = self.elements(inner)?.into_iter().collect();
                if base.len() > self.limits.max_powerset {
                    return Err(EvalError::PowerSetTooLarge {
                        size: base.len(),
                        limit: self.limits.max_powerset,
                    });
                }
                Ok((0u64..(1u64 << base.len()))
                    .map(|mask| {
                        Token::Set(
                            base.iter()
                                .enumerate()
                                .filter(|(i, _)| mask & (1 << i) != 0)
                                .map(|(_, t)| t.clone())
                                .collect(),
                        )
                    })
                    .collect())
            }
            SetExpr::Const(name) => match self.consts.get(name) {
                Some(c) => Ok(c.elements.clone()),
                None => {
                    // still elaborating constants in declaration order
                    let decl = self.game.constant(name).ok_or_else(|| {
                        EvalError::Mismatch(format!("undeclared constant `{name}`"))
                    })?;
                    self.elements(&decl.body)
                }
            },
            SetExpr::Comprehension(c) => {
                match self.comprehension(c, &Valuation::new(), &mut Vec::new())? {
                    Token::Set(s) => Ok(s),
                    _ => unreachable!("comprehension yields a set"),
                }
            }
        }
    }

    fn comprehension<'e>(
        &self,
        c: &'e Comprehension,
        val: &Valuation,
        locals: &mut Vec<(&'e str, Token)>,
    ) -> EvalResult<Token> {
        let mut out = BTreeSet::new();
        for d in self.elements(&c.source)? {
            locals.push((c.var.as_str(), d));
            let keep = match &c.filter {
                Some(g) => self.guard(g, val, locals)?,
                None => true,
            };
            let r = if keep {
                self.expr(&c.element, val, locals).map(Some)
            } else {
                Ok(None)
            };
            locals.pop();
            if let Some(t) = r? {
                out.insert(t);
            }
        }
        Ok(Token::Set(out))
    }

    fn expr<'e>(
        &self,
        e: &'e Expr,
        val: &Valuation,
        locals: &mut Vec<(&'e str, Token)>,
    ) -> EvalResult<Token> {
        match e {
            Expr::Num(n) => Ok(Token::Num(*n)),
            Expr::Black => Ok(Token::Black),
            Expr::Var(x) => {
                if let Some((_, t)) = locals.iter().rev().find(|(n, _)| n == x) {
                    return Ok(t.clone());
                }
                val.get(x)
                    .cloned()
                    .ok_or_else(|| EvalError::UnboundVariable(x.clone()))
            }
            Expr::Param(p) => Ok(Token::Num(self.env.get(p)?)),
            Expr::Tuple(items) => Ok(Token::Tup(
                items
                    .iter()
                    .map(|i| self.expr(i, val, locals))
                    .collect::<EvalResult<_>>()?,
            )),
            Expr::Arith { op, lhs, rhs } => {
                let l = self.expr(lhs, val, locals)?;
                let l = l
                    .as_num()
                    .ok_or_else(|| EvalError::Mismatch(format!("arithmetic on {l}")))?;
                Ok(Token::Num(apply_arith(*op, l, self.env.operand(rhs)?)))
            }
            Expr::Set(s) => Ok(Token::Set(self.elements(s)?)),
            Expr::SetLit(items) => Ok(Token::Set(
                items
                    .iter()
                    .map(|i| self.expr(i, val, locals))
                    .collect::<EvalResult<_>>()?,
            )),
            Expr::Difference(a, b) => {
                match (self.expr(a, val, locals)?, self.expr(b, val, locals)?) {
                    (Token::Set(a), Token::Set(b)) => {
                        Ok(Token::Set(a.difference(&b).cloned().collect()))
                    }
                    (a, b) => Err(EvalError::Mismatch(format!(
                        "set difference of {a} and {b}"
                    ))),
                }
            }
            Expr::App { fun, arg } => {
                let f = self
                    .game
                    .fun(fun)
                    .ok_or_else(|| EvalError::Mismatch(format!("undeclared function `{fun}`")))?;
                let a = self.expr(arg, val, locals)?;
                let dom = self.elaborate(&f.domain)?;
                if !dom.contains(&a) {
                    return Err(EvalError::NotInType {
                        token: a,
                        ty: f.domain.to_string(),
                    });
                }
                let mut inner = vec![(f.param.as_str(), a)];
                self.expr(&f.body, &Valuation::new(), &mut inner)
            }
            Expr::Comprehension(c) => self.comprehension(c, val, locals),
        }
    }

    fn guard<'e>(
        &self,
        g: &'e Guard,
        val: &Valuation,
        locals: &mut Vec<(&'e str, Token)>,
    ) -> EvalResult<bool> {
        Ok(match g {
            Guard::True => true,
            Guard::Compare { op, lhs, rhs } => {
                let l = self.expr(lhs, val, locals)?;
                let r = self.expr(rhs, val, locals)?;
                compare(*op, &l, &r)
            }
            Guard::And(a, b) => self.guard(a, val, locals)? && self.guard(b, val, locals)?,
            Guard::Or(a, b) => self.guard(a, val, locals)? || self.guard(b, val, locals)?,
            Guard::Not(a) => !self.guard(a, val, locals)?,
        })
    }

    pub(crate) fn arc_tokens(
        &self,
        e: &Expr,
        mode: ArcMode,
        v: &Valuation,
        place_type: &ConcreteType,
    ) -> EvalResult<BTreeSet<Token>> {
        let value = self.expr(e, v, &mut Vec::new())?;
        let set = match (mode, value) {
            (ArcMode::Element, t) => BTreeSet::from([t]),
            (ArcMode::Set, Token::Set(s)) => s,
            (ArcMode::Set, t) => {
                return Err(EvalError::Mismatch(format!("expected a set, got {t}")));
            }
        };
        if let Some(bad) = set.iter().find(|t| !place_type.contains(t)) {
            return Err(EvalError::NotInType {
                token: bad.clone(),
                ty: place_type.origin.to_string(),
            });
        }
        Ok(set)
    }

    /// Tokens initially on `place`, i.e. `in(p)`, or `None` if unmarked.
    pub fn initial_tokens(&self, place_index: usize) -> EvalResult<Option<BTreeSet<Token>>> {
        let place: &Place = &self.game.places[place_index];
        let ty = &self.place_types[place_index];
        let Some(init) = &place.init else {
            return Ok(None);
        };
        let tokens = match init {
            InitSpec::All => ty.elements.clone(),
            InitSpec::Tokens(items) => {
                let mut out = BTreeSet::new();
                for e in items {
                    let mode = arc_mode(self.game, place, e).map_err(EvalError::Invalid)?;
                    for t in self.arc_tokens(e, mode, &Valuation::new(), ty)? {
                        if mode == ArcMode::Element && out.contains(&t) {
                            return Err(EvalError::DuplicateInit {
                                place: place.name.clone(),
                                token: t,
                            });
                        }
                        out.insert(t);
                    }
                }
                out
            }
        };
        if tokens.is_empty() {
            return Err(EvalError::EmptyInit(place.name.clone()));
        }
        Ok(Some(tokens))
    }
}

fn apply_arith(op: ArithOp, l: i64, r: i64) -> i64 {
    match op {
        ArithOp::Add => l + r,
        ArithOp::Sub => l - r,
    }
}

fn compare(op: CmpOp, l: &Token, r: &Token) -> bool {
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt => l < r,
        CmpOp::Le => l <= r,
        CmpOp::Gt => l > r,
        CmpOp::Ge => l >= r,
    }
}

fn cartesian(factors: &[Vec<Token>]) -> Vec<Vec<Token>> {
    let mut acc: Vec<Vec<Token>> = vec![Vec::new()];
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.len());
        for prefix in &acc {
            for t in f {
                let mut row = prefix.clone();
                row.push(t.clone());
                next.push(row);
            }
        }
        acc = next;
    }
    acc
}

/// Elaborates a set expression into its full enumeration.
pub fn elaborate_type(s: &SetExpr, inst: &Instance<'_>) -> EvalResult<ConcreteType> {
    inst.elaborate(s)
}

pub fn eval_expr(e: &Expr, v: &Valuation, inst: &Instance<'_>) -> EvalResult<Token> {
    inst.expr(e, v, &mut Vec::new())
}

pub fn eval_guard(g: &Guard, v: &Valuation, inst: &Instance<'_>) -> EvalResult<bool> {
    inst.guard(g, v, &mut Vec::new())
}

/// Token set denoted by an arc expression: element-typed expressions are
/// coerced to singletons.
pub fn eval_arc(
    e: &Expr,
    v: &Valuation,
    inst: &Instance<'_>,
    place_type: &ConcreteType,
) -> EvalResult<BTreeSet<Token>> {
    let game = inst.game();
    let place_shape = set_shape(game, &place_type.origin).map_err(EvalError::Invalid)?;
    let expr_shape = typecheck_expr(game, e).map_err(EvalError::Invalid)?;
    let mode = if expr_shape == place_shape {
        ArcMode::Element
    } else if expr_shape == Ty::set_of(place_shape.clone()) {
        ArcMode::Set
    } else {
        return Err(EvalError::Mismatch(format!(
            "`{e}` has type {expr_shape}, place holds {place_shape}"
        )));
    };
    inst.arc_tokens(e, mode, v, place_type)
}

/// All valuations of the free variables of `t`, variables sorted by name
/// and values in canonical order. Guards are not applied.
pub fn enumerate_valuations(t: &Transition, inst: &Instance<'_>) -> EvalResult<Vec<Valuation>> {
    let vars: Vec<String> = free_vars(t).into_iter().collect();
    let domains = vars
        .iter()
        .map(|x| {
            inst.var_type(x)
                .map(|ty| ty.elements.iter().cloned().collect::<Vec<_>>())
        })
        .collect::<EvalResult<Vec<_>>>()?;
    let count: u128 = domains.iter().map(|d| d.len() as u128).product();
    if count > inst.limits().max_valuations as u128 {
        return Err(EvalError::TooManyValuations {
            transition: t.name.clone(),
            count,
            limit: inst.limits().max_valuations,
        });
    }
    Ok(cartesian(&domains)
        .into_iter()
        .map(|row| Valuation(vars.iter().cloned().zip(row).collect()))
        .collect())
}

#[cfg(test)]
mod tests;
