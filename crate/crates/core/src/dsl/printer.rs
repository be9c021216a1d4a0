use std::fmt::{self, Display, Write};

use crate::model::*;

impl Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Lit(i) => write!(f, "{i}"),
            Bound::Param { name, offset: 0 } => f.write_str(name),
            Bound::Param { name, offset } if *offset > 0 => write!(f, "{name}+{offset}"),
            Bound::Param { name, offset } => write!(f, "{name}-{}", -offset),
        }
    }
}

impl Display for SetExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetExpr::Range(b) => write!(f, "{{1..{b}}}"),
            SetExpr::Black => f.write_str("black"),
            SetExpr::Product(items) => {
                for (i, s) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str("*")?;
                    }
                    if matches!(s, SetExpr::Product(_)) {
                        write!(f, "({s})")?;
                    } else {
                        write!(f, "{s}")?;
                    }
                }
                Ok(())
            }
            SetExpr::PowerSet(inner) => write!(f, "pow({inner})"),
            SetExpr::Const(n) => f.write_str(n),
            SetExpr::Comprehension(c) => write!(f, "{c}"),
        }
    }
}

impl Display for Comprehension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{ {} | {} in {}", self.element, self.var, self.source)?;
        if let Some(g) = &self.filter {
            write!(f, " where {g}")?;
        }
        f.write_str(" }")
    }
}

impl Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Num(i) => write!(f, "{i}"),
            Operand::Param(p) => f.write_str(p),
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(i) => write!(f, "{i}"),
            Expr::Black => f.write_str("."),
            Expr::Var(x) | Expr::Param(x) => f.write_str(x),
            Expr::Tuple(items) => {
                f.write_str("(")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str(")")
            }
            Expr::Arith { op, lhs, rhs } => {
                if matches!(**lhs, Expr::Difference(..)) {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                };
                write!(f, "{sym}{rhs}")
            }
            Expr::Set(s @ (SetExpr::Const(_) | SetExpr::Range(_))) => write!(f, "{s}"),
            Expr::Set(s) => write!(f, "all({s})"),
            Expr::SetLit(items) => {
                f.write_str("{")?;
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{e}")?;
                }
                f.write_str("}")
            }
            Expr::Difference(a, b) => {
                write!(f, "{a} \\ ")?;
                if matches!(**b, Expr::Difference(..)) {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
            Expr::App { fun, arg } => write!(f, "{fun}({arg})"),
            Expr::Comprehension(c) => write!(f, "{c}"),
        }
    }
}

impl Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrapped(f: &mut fmt::Formatter<'_>, g: &Guard, paren: bool) -> fmt::Result {
            if paren {
                write!(f, "({g})")
            } else {
                write!(f, "{g}")
            }
        }
        match self {
            Guard::True => f.write_str("true"),
            Guard::Compare { op, lhs, rhs } => write!(f, "{lhs} {} {rhs}", op.symbol()),
            Guard::Or(a, b) => {
                wrapped(f, a, false)?;
                f.write_str(" || ")?;
                wrapped(f, b, matches!(**b, Guard::Or(..)))
            }
            Guard::And(a, b) => {
                wrapped(f, a, matches!(**a, Guard::Or(..)))?;
                f.write_str(" && ")?;
                wrapped(f, b, matches!(**b, Guard::Or(..) | Guard::And(..)))
            }
            Guard::Not(a) => {
                f.write_str("!")?;
                wrapped(f, a, matches!(**a, Guard::Or(..) | Guard::And(..)))
            }
        }
    }
}

/// Renders a game in the textual format; `parse(&print(g))` gives back `g`.
pub fn print(game: &HighLevelGame) -> String {
    let mut out = String::new();
    let _ = print_into(game, &mut out);
    out
}

fn print_into(game: &HighLevelGame, out: &mut String) -> fmt::Result {
    writeln!(out, "game {};", game.name)?;
    if !game.params.is_empty() {
        writeln!(out)?;
    }
    for p in &game.params {
        write!(out, "par {} : nat", p.name)?;
        if let Some(d) = p.default {
            write!(out, " = {d}")?;
        }
        if let Some(c) = &p.constraint {
            write!(out, " where {c}")?;
        }
        writeln!(out, ";")?;
    }
    if !game.consts.is_empty() {
        writeln!(out)?;
    }
    for c in &game.consts {
        writeln!(out, "set {} = {};", c.name, c.body)?;
    }
    if !game.vars.is_empty() {
        writeln!(out)?;
    }
    let mut i = 0;
    while i < game.vars.len() {
        let ty = &game.vars[i].ty;
        let j = i + game.vars[i..].iter().take_while(|v| &v.ty == ty).count();
        let names: Vec<&str> = game.vars[i..j].iter().map(|v| v.name.as_str()).collect();
        writeln!(out, "var {} : {ty};", names.join(", "))?;
        i = j;
    }
    if !game.funs.is_empty() {
        writeln!(out)?;
    }
    for f in &game.funs {
        writeln!(
            out,
            "fun {} : {} -> {} = {} -> {};",
            f.name, f.domain, f.codomain, f.param, f.body
        )?;
    }
    if !game.places.is_empty() {
        writeln!(out)?;
    }
    for p in &game.places {
        write!(out, "place {}", p.name)?;
        write!(out, " : {} kind {}", p.ty, p.kind.keyword())?;
        if p.bad {
            write!(out, " bad")?;
        }
        match &p.init {
            None => {}
            Some(InitSpec::All) => write!(out, " init all")?,
            Some(InitSpec::Tokens(items)) => {
                let items: Vec<String> = items.iter().map(|e| e.to_string()).collect();
                write!(out, " init {{{}}}", items.join(", "))?;
            }
        }
        writeln!(out, ";")?;
    }
    for t in &game.transitions {
        writeln!(out)?;
        write!(out, "trans {}", t.name)?;
        if !t.guard.is_true() {
            write!(out, " [{}]", t.guard)?;
        }
        writeln!(out, " {{")?;
        for (side, arcs) in [("in", &t.pre), ("out", &t.post)] {
            for a in arcs {
                if a.expr == Expr::Black {
                    writeln!(out, "    {side} {};", a.place)?;
                } else {
                    writeln!(out, "    {side} {} : {};", a.place, a.expr)?;
                }
            }
        }
        writeln!(out, "}}")?;
    }
    Ok(())
}
