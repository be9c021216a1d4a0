//! The three benchmark families, built as high-level games whose parameters
//! default to the requested values.
//!
//! * `AS(n)`: a distributed alarm system with `n` locations. An intruder
//!   enters at one location, and every location must raise an alarm naming
//!   the right one. In the synchronous variant the detecting location informs
//!   all others in one step; in the sequential variant it passes the
//!   information on one location at a time.
//! * `CM(n, k)`: `n` machines, one of which the environment breaks, and `k`
//!   orders that must each be processed on a working machine.
//! * `SR(n, k)`: `n` robots with `n` tools working through `k` phases; the
//!   environment destroys tools and the robots must reconfigure without two
//!   robots ending up on the same tool.

use std::str::FromStr;

use crate::eval::{EvalResult, ParamEnv};
use crate::model::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AsVariant {
    #[default]
    Sync,
    Sequential,
}

impl FromStr for AsVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sync" => Ok(AsVariant::Sync),
            "seq" => Ok(AsVariant::Sequential),
            _ => Err(format!("unknown variant `{s}` (expected sync or seq)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    AlarmSystem(AsVariant),
    ConcurrentMachines,
    Robots,
}

impl Family {
    pub fn from_name(name: &str, variant: AsVariant) -> Result<Self, String> {
        match name {
            "as" => Ok(Family::AlarmSystem(variant)),
            "cm" => Ok(Family::ConcurrentMachines),
            "sr" => Ok(Family::Robots),
            _ => Err(format!(
                "unknown benchmark family `{name}` (expected as, cm or sr)"
            )),
        }
    }

    /// Parameter names with their default values.
    pub fn defaults(self) -> &'static [(&'static str, i64)] {
        match self {
            Family::AlarmSystem(_) => &[("n", 2)],
            Family::ConcurrentMachines => &[("n", 3), ("k", 2)],
            Family::Robots => &[("n", 2), ("k", 2)],
        }
    }

    /// Builds the family with `params` overriding the defaults.
    pub fn build<'a>(
        self,
        params: impl IntoIterator<Item = (&'a str, i64)>,
    ) -> EvalResult<HighLevelGame> {
        let mut vals: Vec<(&str, i64)> = self.defaults().to_vec();
        for (k, v) in params {
            match vals.iter_mut().find(|(n, _)| *n == k) {
                Some(slot) => slot.1 = v,
                None => return Err(crate::EvalError::UnknownParam(k.to_string())),
            }
        }
        let get = |n: &str| {
            vals.iter()
                .find(|(k, _)| *k == n)
                .map(|(_, v)| *v)
                .unwrap_or(1)
        };
        match self {
            Family::AlarmSystem(v) => build_alarm_system(v, get("n")),
            Family::ConcurrentMachines => build_concurrent_machines(get("n"), get("k")),
            Family::Robots => build_robots(get("n"), get("k")),
        }
    }
}

fn var(x: &str) -> Expr {
    Expr::Var(x.into())
}

fn tup(xs: &[&str]) -> Expr {
    Expr::Tuple(xs.iter().map(|x| var(x)).collect())
}

fn all(c: &str) -> Expr {
    Expr::Set(SetExpr::Const(c.into()))
}

fn app(f: &str, x: &str) -> Expr {
    Expr::App {
        fun: f.into(),
        arg: Box::new(var(x)),
    }
}

fn set(c: &str) -> SetExpr {
    SetExpr::Const(c.into())
}

fn range(p: &str) -> SetExpr {
    SetExpr::Range(Bound::Param {
        name: p.into(),
        offset: 0,
    })
}

fn product(items: &[&str]) -> SetExpr {
    SetExpr::Product(items.iter().map(|s| set(s)).collect())
}

fn arc(place: &str, expr: Expr) -> Arc {
    Arc {
        place: place.into(),
        expr,
    }
}

fn black(place: &str) -> Arc {
    arc(place, Expr::Black)
}

fn place(name: &str, kind: PlaceKind, ty: SetExpr) -> Place {
    Place {
        name: name.into(),
        kind,
        ty,
        bad: false,
        init: None,
    }
}

fn sys(name: &str, ty: SetExpr) -> Place {
    place(name, PlaceKind::System, ty)
}

fn env(name: &str, ty: SetExpr) -> Place {
    place(name, PlaceKind::Environment, ty)
}

fn bad(mut p: Place) -> Place {
    p.bad = true;
    p
}

fn init(mut p: Place, spec: InitSpec) -> Place {
    p.init = Some(spec);
    p
}

fn black_init(p: Place) -> Place {
    init(p, InitSpec::Tokens(vec![Expr::Black]))
}

fn trans(name: &str, guard: Guard, pre: Vec<Arc>, post: Vec<Arc>) -> Transition {
    Transition {
        name: name.into(),
        guard,
        pre,
        post,
    }
}

fn param(name: &str, default: i64, constraint: Option<Guard>) -> ParamDecl {
    ParamDecl {
        name: name.into(),
        constraint,
        default: Some(default),
    }
}

fn vars(game: &mut HighLevelGame, names: &[&str], ty: &str) {
    for n in names {
        game.vars.push(VarDecl {
            name: n.to_string(),
            ty: set(ty),
        });
    }
}

fn checked(game: HighLevelGame) -> EvalResult<HighLevelGame> {
    ParamEnv::new(&game, [])?;
    Ok(game)
}

pub fn build_alarm_system(variant: AsVariant, n: i64) -> EvalResult<HighLevelGame> {
    let mut g = HighLevelGame::new(match variant {
        AsVariant::Sync => "AS",
        AsVariant::Sequential => "AS_seq",
    });
    g.params.push(param("n", n, None));
    g.consts.push(ConstDecl {
        name: "N".into(),
        body: range("n"),
    });
    vars(&mut g, &["x", "y", "z", "v", "a", "b"], "N");
    g.funs.push(FunDecl {
        name: "F".into(),
        domain: set("N"),
        codomain: SetExpr::PowerSet(Box::new(set("N"))),
        param: "x".into(),
        body: Expr::Difference(Box::new(all("N")), Box::new(Expr::SetLit(vec![var("x")]))),
    });
    g.funs.push(FunDecl {
        name: "G".into(),
        domain: set("N"),
        codomain: SetExpr::PowerSet(Box::new(product(&["N", "N"]))),
        param: "x".into(),
        body: Expr::Comprehension(Box::new(Comprehension {
            var: "z".into(),
            source: set("N"),
            element: tup(&["z", "x"]),
            filter: None,
        })),
    });
    g.places = vec![
        init(sys("Sys", set("N")), InitSpec::All),
        env("C", set("N")),
        env("I", set("N")),
        sys("D", set("N")),
        sys("P", set("N")),
        sys("Alarm", product(&["N", "N"])),
        sys("Good", SetExpr::Black),
        bad(sys("Bad", SetExpr::Black)),
        black_init(env("Env", SetExpr::Black)),
    ];
    let info = match variant {
        AsVariant::Sync => trans(
            "info",
            Guard::True,
            vec![arc("D", var("x")), arc("Sys", app("F", "x"))],
            vec![arc("P", all("N"))],
        ),
        AsVariant::Sequential => trans(
            "info",
            Guard::cmp(CmpOp::Ne, var("x"), var("y")),
            vec![arc("D", var("x")), arc("Sys", var("y"))],
            vec![arc("D", var("y")), arc("P", var("x"))],
        ),
    };
    g.transitions = vec![
        trans(
            "i",
            Guard::True,
            vec![black("Env")],
            vec![arc("C", var("x"))],
        ),
        trans(
            "t",
            Guard::True,
            vec![arc("C", var("x")), arc("Sys", var("x"))],
            vec![arc("I", var("x")), arc("D", var("x"))],
        ),
        trans(
            "fr",
            Guard::True,
            vec![arc("D", var("x"))],
            vec![arc("P", var("x"))],
        ),
        trans(
            "fa",
            Guard::True,
            vec![arc("Sys", var("y"))],
            vec![arc("P", var("y"))],
        ),
        info,
        trans(
            "a",
            Guard::True,
            vec![arc("P", var("z"))],
            vec![arc("Alarm", tup(&["z", "v"]))],
        ),
        trans(
            "g",
            Guard::True,
            vec![arc("I", var("x")), arc("Alarm", app("G", "x"))],
            vec![black("Good")],
        ),
        trans(
            "bot1",
            Guard::True,
            vec![arc("Alarm", tup(&["a", "b"])), arc("C", var("x"))],
            vec![black("Bad")],
        ),
        trans(
            "bot2",
            Guard::cmp(CmpOp::Ne, var("b"), var("x")),
            vec![arc("Alarm", tup(&["a", "b"])), arc("I", var("x"))],
            vec![black("Bad")],
        ),
    ];
    checked(g)
}

pub fn build_concurrent_machines(n: i64, k: i64) -> EvalResult<HighLevelGame> {
    let mut g = HighLevelGame::new("CM");
    g.params.push(param("n", n, None));
    g.params.push(param(
        "k",
        k,
        Some(Guard::cmp(
            CmpOp::Lt,
            Expr::Param("k".into()),
            Expr::Param("n".into()),
        )),
    ));
    g.consts.push(ConstDecl {
        name: "M".into(),
        body: range("n"),
    });
    g.consts.push(ConstDecl {
        name: "O".into(),
        body: range("k"),
    });
    vars(&mut g, &["m"], "M");
    vars(&mut g, &["o"], "O");
    g.funs.push(FunDecl {
        name: "F".into(),
        domain: set("M"),
        codomain: SetExpr::PowerSet(Box::new(set("M"))),
        param: "m".into(),
        body: Expr::Difference(Box::new(all("M")), Box::new(Expr::SetLit(vec![var("m")]))),
    });
    g.places = vec![
        black_init(env("Env", SetExpr::Black)),
        sys("ERR", set("M")),
        sys("OK", set("M")),
        init(sys("Sys", set("O")), InitSpec::All),
        sys("M", product(&["O", "M"])),
        sys("G", product(&["O", "M"])),
        bad(sys("B", product(&["O", "M"]))),
    ];
    let om = || tup(&["o", "m"]);
    g.transitions = vec![
        trans(
            "d",
            Guard::True,
            vec![black("Env")],
            vec![arc("ERR", var("m")), arc("OK", app("F", "m"))],
        ),
        trans(
            "test",
            Guard::True,
            vec![arc("ERR", var("m")), arc("Sys", all("O"))],
            vec![arc("Sys", all("O"))],
        ),
        trans(
            "p",
            Guard::True,
            vec![arc("Sys", var("o"))],
            vec![arc("M", om())],
        ),
        trans(
            "g",
            Guard::True,
            vec![arc("M", om()), arc("OK", var("m"))],
            vec![arc("G", om())],
        ),
        trans("b", Guard::True, vec![arc("M", om())], vec![arc("B", om())]),
    ];
    checked(g)
}

pub fn build_robots(n: i64, k: i64) -> EvalResult<HighLevelGame> {
    let mut g = HighLevelGame::new("SR");
    g.params.push(param("n", n, None));
    g.params.push(param("k", k, None));
    for (c, p) in [("R", "n"), ("T", "n"), ("P", "k")] {
        g.consts.push(ConstDecl {
            name: c.into(),
            body: range(p),
        });
    }
    g.consts.push(ConstDecl {
        name: "I".into(),
        body: SetExpr::Comprehension(Box::new(Comprehension {
            var: "i".into(),
            source: set("R"),
            element: tup(&["i", "i"]),
            filter: None,
        })),
    });
    vars(&mut g, &["r"], "R");
    vars(&mut g, &["t", "t'"], "T");
    vars(&mut g, &["p", "p'"], "P");
    g.funs.push(FunDecl {
        name: "F".into(),
        domain: set("P"),
        codomain: SetExpr::PowerSet(Box::new(product(&["R", "P"]))),
        param: "p".into(),
        body: Expr::Comprehension(Box::new(Comprehension {
            var: "r".into(),
            source: set("R"),
            element: tup(&["r", "p"]),
            filter: None,
        })),
    });
    g.places = vec![
        init(
            sys("Phases", set("P")),
            InitSpec::Tokens(vec![Expr::Num(1)]),
        ),
        black_init(env("Env", SetExpr::Black)),
        env("S", set("P")),
        env("W", set("P")),
        env("C", SetExpr::Black),
        black_init(sys("work", SetExpr::Black)),
        sys("RP", product(&["R", "P"])),
        init(
            sys("RT", product(&["R", "T"])),
            InitSpec::Tokens(vec![all("I")]),
        ),
        sys("RTP", product(&["R", "T", "P"])),
        sys("R'T'P'", product(&["R", "T", "P"])),
        sys("check", product(&["R", "T"])),
        init(sys("Tools", set("T")), InitSpec::All),
        sys("restart", set("R")),
        bad(sys("Bad1", product(&["R", "P"]))),
        bad(sys("Bad2", set("R"))),
    ];
    g.transitions = vec![
        trans(
            "i1",
            Guard::cmp(CmpOp::Lt, var("p"), Expr::Param("k".into())),
            vec![arc("Phases", var("p")), black("Env")],
            vec![
                arc("S", var("p")),
                arc(
                    "Phases",
                    Expr::Arith {
                        op: ArithOp::Add,
                        lhs: Box::new(var("p")),
                        rhs: Operand::Num(1),
                    },
                ),
            ],
        ),
        trans(
            "i2",
            Guard::True,
            vec![arc("Phases", Expr::Param("k".into())), black("Env")],
            vec![arc("S", Expr::Param("k".into()))],
        ),
        trans(
            "des",
            Guard::True,
            vec![arc("S", var("p"))],
            vec![arc("RTP", tup(&["r", "t", "p"])), arc("W", var("p"))],
        ),
        trans(
            "t_w",
            Guard::True,
            vec![arc("W", var("p")), black("work")],
            vec![black("C"), arc("RP", app("F", "p"))],
        ),
        trans(
            "chg",
            Guard::True,
            vec![arc("RP", tup(&["r", "p"])), arc("RT", tup(&["r", "t"]))],
            vec![
                arc("RT", tup(&["r", "t'"])),
                arc("R'T'P'", tup(&["r", "t'", "p"])),
                arc("check", tup(&["r", "t'"])),
            ],
        ),
        trans(
            "c",
            Guard::True,
            vec![arc("check", tup(&["r", "t"])), arc("Tools", var("t"))],
            vec![arc("restart", var("r"))],
        ),
        trans(
            "nxt",
            Guard::True,
            vec![black("C"), arc("restart", all("R"))],
            vec![arc("Tools", all("T")), black("Env"), black("work")],
        ),
        trans(
            "bot1",
            Guard::cmp(CmpOp::Le, var("p"), var("p'")),
            vec![
                arc("RTP", tup(&["r", "t", "p"])),
                arc("R'T'P'", tup(&["r", "t", "p'"])),
            ],
            vec![arc("Bad1", tup(&["r", "p'"]))],
        ),
        trans(
            "bot2",
            Guard::True,
            vec![arc("check", tup(&["r", "t"]))],
            vec![arc("Bad2", var("r"))],
        ),
    ];
    checked(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_families_validate() {
        for g in [
            build_alarm_system(AsVariant::Sync, 2).unwrap(),
            build_alarm_system(AsVariant::Sequential, 3).unwrap(),
            build_concurrent_machines(3, 2).unwrap(),
            build_robots(2, 2).unwrap(),
        ] {
            assert_eq!(validate(&g), vec![], "{}", g.name);
        }
    }

    #[test]
    fn cm_needs_fewer_orders_than_machines() {
        assert!(matches!(
            build_concurrent_machines(2, 2),
            Err(crate::EvalError::ConstraintViolated(_))
        ));
        assert!(build_alarm_system(AsVariant::Sync, 0).is_err());
    }

    #[test]
    fn family_overrides() {
        let g = Family::from_name("cm", AsVariant::Sync)
            .unwrap()
            .build([("n", 5)])
            .unwrap();
        assert_eq!(g.param("n").unwrap().default, Some(5));
        assert_eq!(g.param("k").unwrap().default, Some(2));
        assert!(Family::ConcurrentMachines.build([("q", 1)]).is_err());
        assert!(Family::from_name("xx", AsVariant::Sync).is_err());
    }
}
