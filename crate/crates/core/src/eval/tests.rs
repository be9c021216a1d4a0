use proptest::prelude::*;

use super::*;
use crate::benchmarks::{build_alarm_system, build_concurrent_machines, build_robots, AsVariant};
use crate::dsl::parse;

fn num(n: i64) -> Token {
    Token::Num(n)
}

fn tup(a: i64, b: i64) -> Token {
    Token::tuple([num(a), num(b)])
}

fn inst_of<'g>(g: &'g HighLevelGame, params: &[(&str, i64)]) -> Instance<'g> {
    let env = ParamEnv::new(g, params.iter().copied()).unwrap();
    Instance::new(g, env, Limits::default()).unwrap()
}

fn val(pairs: &[(&str, Token)]) -> Valuation {
    pairs
        .iter()
        .fold(Valuation::new(), |v, (k, t)| v.bind(*k, t.clone()))
}

fn var(x: &str) -> Expr {
    Expr::Var(x.into())
}

fn app(f: &str, x: &str) -> Expr {
    Expr::App {
        fun: f.into(),
        arg: Box::new(var(x)),
    }
}

fn range_n() -> SetExpr {
    SetExpr::Range(Bound::Param {
        name: "n".into(),
        offset: 0,
    })
}

#[test]
fn range_enumerates() {
    let g = build_alarm_system(AsVariant::Sync, 3).unwrap();
    let inst = inst_of(&g, &[]);
    let t = elaborate_type(&range_n(), &inst).unwrap();
    assert_eq!(t.elements, [num(1), num(2), num(3)].into_iter().collect());
}

#[test]
fn product_enumerates() {
    let g = build_alarm_system(AsVariant::Sync, 2).unwrap();
    let inst = inst_of(&g, &[]);
    let t = elaborate_type(&SetExpr::Product(vec![range_n(), range_n()]), &inst).unwrap();
    let expect: Vec<Token> = vec![tup(1, 1), tup(1, 2), tup(2, 1), tup(2, 2)];
    assert_eq!(t.iter().cloned().collect::<Vec<_>>(), expect);
}

#[test]
fn identity_constant() {
    let g = build_robots(2, 2).unwrap();
    let inst = inst_of(&g, &[]);
    let t = elaborate_type(&SetExpr::Const("I".into()), &inst).unwrap();
    assert_eq!(t.elements, [tup(1, 1), tup(2, 2)].into_iter().collect());
}

#[test]
fn power_set_and_black() {
    let g = build_alarm_system(AsVariant::Sync, 2).unwrap();
    let inst = inst_of(&g, &[]);
    let p = elaborate_type(&SetExpr::PowerSet(Box::new(range_n())), &inst).unwrap();
    assert_eq!(p.len(), 4);
    assert!(p.contains(&Token::set([])));
    assert!(p.contains(&Token::set([num(1), num(2)])));
    let b = elaborate_type(&SetExpr::Black, &inst).unwrap();
    assert_eq!(b.iter().collect::<Vec<_>>(), vec![&Token::Black]);
}

#[test]
fn power_set_limit() {
    let g = build_alarm_system(AsVariant::Sync, 17).unwrap();
    let inst = inst_of(&g, &[]);
    let err = elaborate_type(&SetExpr::PowerSet(Box::new(range_n())), &inst).unwrap_err();
    assert!(
        matches!(
            err,
            EvalError::PowerSetTooLarge {
                size: 17,
                limit: 16
            }
        ),
        "{err:?}"
    );
    assert!(err.is_limit());
}

#[test]
fn typecheck_shapes() {
    let cm = build_concurrent_machines(3, 2).unwrap();
    assert_eq!(
        typecheck_expr(&cm, &Expr::Tuple(vec![var("o"), var("m")])),
        Ok(Ty::Tuple(vec![Ty::Num, Ty::Num]))
    );
    let as2 = build_alarm_system(AsVariant::Sync, 2).unwrap();
    assert_eq!(
        typecheck_expr(&as2, &app("F", "x")),
        Ok(Ty::set_of(Ty::Num))
    );
    assert_eq!(
        typecheck_guard(&as2, &Guard::cmp(CmpOp::Ne, var("b"), var("x"))),
        Ok(())
    );
    let bad = Guard::cmp(CmpOp::Eq, var("x"), Expr::Tuple(vec![var("x"), var("y")]));
    assert!(typecheck_guard(&as2, &bad).is_err());
    let order_on_tuples = Guard::cmp(
        CmpOp::Lt,
        Expr::Tuple(vec![var("x"), var("y")]),
        Expr::Tuple(vec![var("y"), var("x")]),
    );
    assert!(typecheck_guard(&as2, &order_on_tuples).is_err());
    assert!(typecheck_expr(&as2, &var("nope")).is_err());
}

#[test]
fn function_application() {
    let g = build_alarm_system(AsVariant::Sync, 3).unwrap();
    let inst = inst_of(&g, &[]);
    let v = val(&[("x", num(2))]);
    assert_eq!(
        eval_expr(&app("F", "x"), &v, &inst),
        Ok(Token::set([num(1), num(3)]))
    );

    let g2 = build_alarm_system(AsVariant::Sync, 2).unwrap();
    let inst2 = inst_of(&g2, &[]);
    assert_eq!(
        eval_expr(&app("G", "x"), &v, &inst2),
        Ok(Token::set([tup(1, 2), tup(2, 2)]))
    );
}

#[test]
fn successor() {
    let g = build_robots(2, 2).unwrap();
    let inst = inst_of(&g, &[]);
    let e = Expr::Arith {
        op: ArithOp::Add,
        lhs: Box::new(var("p")),
        rhs: Operand::Num(1),
    };
    assert_eq!(eval_expr(&e, &val(&[("p", num(1))]), &inst), Ok(num(2)));
    assert_eq!(
        eval_expr(&Expr::Param("k".into()), &Valuation::new(), &inst),
        Ok(num(2))
    );
}

#[test]
fn arc_sets() {
    let g = build_robots(2, 2).unwrap();
    let inst = inst_of(&g, &[]);
    let rp = g.place_index("RP").unwrap();
    let toks = eval_arc(
        &app("F", "p"),
        &val(&[("p", num(1))]),
        &inst,
        inst.place_type(rp),
    )
    .unwrap();
    assert_eq!(toks, [tup(1, 1), tup(2, 1)].into_iter().collect());

    let as2 = build_alarm_system(AsVariant::Sync, 2).unwrap();
    let inst = inst_of(&as2, &[]);
    let p = as2.place_index("P").unwrap();
    let v = val(&[("x", num(2))]);
    assert_eq!(
        eval_arc(&var("x"), &v, &inst, inst.place_type(p)).unwrap(),
        [num(2)].into_iter().collect()
    );
    assert_eq!(
        eval_arc(
            &Expr::Set(SetExpr::Const("N".into())),
            &v,
            &inst,
            inst.place_type(p)
        )
        .unwrap(),
        [num(1), num(2)].into_iter().collect()
    );
    let alarm = as2.place_index("Alarm").unwrap();
    assert!(matches!(
        eval_arc(&var("x"), &v, &inst, inst.place_type(alarm)),
        Err(EvalError::Mismatch(_))
    ));
}

#[test]
fn arithmetic_leaving_the_type_is_an_error() {
    let g = build_robots(2, 2).unwrap();
    let inst = inst_of(&g, &[]);
    let phases = g.place_index("Phases").unwrap();
    let e = Expr::Arith {
        op: ArithOp::Add,
        lhs: Box::new(var("p")),
        rhs: Operand::Num(1),
    };
    let err = eval_arc(&e, &val(&[("p", num(2))]), &inst, inst.place_type(phases)).unwrap_err();
    assert!(
        matches!(
            err,
            EvalError::NotInType {
                token: Token::Num(3),
                ..
            }
        ),
        "{err:?}"
    );
}

#[test]
fn guards() {
    let as2 = build_alarm_system(AsVariant::Sync, 2).unwrap();
    let inst = inst_of(&as2, &[]);
    let ne = Guard::cmp(CmpOp::Ne, var("b"), var("x"));
    assert_eq!(
        eval_guard(&ne, &val(&[("b", num(1)), ("x", num(1))]), &inst),
        Ok(false)
    );

    let sr = build_robots(2, 2).unwrap();
    let inst = inst_of(&sr, &[]);
    let lt = Guard::cmp(CmpOp::Lt, var("p"), Expr::Param("k".into()));
    assert_eq!(eval_guard(&lt, &val(&[("p", num(1))]), &inst), Ok(true));
    let le = Guard::cmp(CmpOp::Le, var("p"), var("p'"));
    assert_eq!(
        eval_guard(&le, &val(&[("p", num(2)), ("p'", num(1))]), &inst),
        Ok(false)
    );
    let combo = Guard::Or(
        Box::new(Guard::Not(Box::new(le.clone()))),
        Box::new(Guard::True),
    );
    assert_eq!(
        eval_guard(&combo, &val(&[("p", num(1)), ("p'", num(1))]), &inst),
        Ok(true)
    );
    let and = Guard::And(Box::new(le), Box::new(lt));
    assert_eq!(
        eval_guard(&and, &val(&[("p", num(1)), ("p'", num(2))]), &inst),
        Ok(true)
    );
}

#[test]
fn valuations() {
    let g = build_alarm_system(AsVariant::Sync, 2).unwrap();
    let inst = inst_of(&g, &[]);
    let i = enumerate_valuations(g.transition("i").unwrap(), &inst).unwrap();
    assert_eq!(i, vec![val(&[("x", num(1))]), val(&[("x", num(2))])]);
    let bot2 = enumerate_valuations(g.transition("bot2").unwrap(), &inst).unwrap();
    assert_eq!(bot2.len(), 8);
    assert_eq!(bot2[0].to_string(), "a=1,b=1,x=1");
    assert_eq!(bot2[7].to_string(), "a=2,b=2,x=2");

    let sr = build_robots(2, 2).unwrap();
    let inst = inst_of(&sr, &[]);
    let i2 = enumerate_valuations(sr.transition("i2").unwrap(), &inst).unwrap();
    assert_eq!(i2, vec![Valuation::new()]);
}

#[test]
fn valuation_limit() {
    let g = build_alarm_system(AsVariant::Sync, 10).unwrap();
    let env = ParamEnv::new(&g, []).unwrap();
    let limits = Limits {
        max_valuations: 999,
        ..Limits::default()
    };
    let err = Instance::new(&g, env.clone(), limits)
        .and_then(|inst| enumerate_valuations(g.transition("bot1").unwrap(), &inst))
        .unwrap_err();
    assert!(
        matches!(
            err,
            EvalError::TooManyValuations {
                count: 1000,
                limit: 999,
                ..
            }
        ),
        "{err:?}"
    );
}

#[test]
fn param_env_rules() {
    let cm = build_concurrent_machines(3, 2).unwrap();
    assert!(matches!(
        ParamEnv::new(&cm, [("n", 2), ("k", 2)]),
        Err(EvalError::ConstraintViolated(c)) if c == "k < n"
    ));
    assert!(matches!(
        ParamEnv::new(&cm, [("n", 0)]),
        Err(EvalError::NonPositiveParam { value: 0, .. })
    ));
    assert!(matches!(
        ParamEnv::new(&cm, [("q", 1)]),
        Err(EvalError::UnknownParam(_))
    ));
    let env = ParamEnv::new(&cm, [("n", 5)]).unwrap();
    assert_eq!(env.get("k"), Ok(2));
    assert_eq!(env.to_string(), "k=2,n=5");

    let g = parse("game G; par n : nat; place A : black kind sys init {.};").unwrap();
    assert!(matches!(
        ParamEnv::new(&g, []),
        Err(EvalError::UnboundParam(_))
    ));
}

#[test]
fn invalid_games_are_rejected_by_instance() {
    let mut g = build_alarm_system(AsVariant::Sync, 2).unwrap();
    g.transitions[0].post[0].place = "Q".into();
    let env = ParamEnv::new(&g, []).unwrap();
    let err = Instance::new(&g, env, Limits::default()).unwrap_err();
    match err {
        EvalError::Invalid(d) => assert!(d.iter().any(|d| d.message.contains("`Q`"))),
        other => panic!("{other:?}"),
    }
}

#[test]
fn valuation_text_round_trip() {
    let v = val(&[
        ("t'", num(2)),
        ("r", tup(1, 2)),
        ("s", Token::set([num(1), num(3)])),
    ]);
    assert_eq!(v.to_string(), "r=(1,2),s={1,3},t'=2");
    assert_eq!(v.to_string().parse::<Valuation>().unwrap(), v);
    assert_eq!("".parse::<Valuation>().unwrap(), Valuation::new());
}

#[test]
fn init_tokens() {
    let sr = build_robots(2, 2).unwrap();
    let inst = inst_of(&sr, &[]);
    let rt = sr.place_index("RT").unwrap();
    assert_eq!(
        inst.initial_tokens(rt).unwrap(),
        Some([tup(1, 1), tup(2, 2)].into_iter().collect())
    );
    assert_eq!(
        inst.initial_tokens(sr.place_index("RP").unwrap()).unwrap(),
        None
    );
}

/// Counts valuations by nested iteration over each free variable's range.
fn valuation_count_oracle(g: &HighLevelGame, t: &Transition, n: i64) -> usize {
    crate::model::free_vars(t)
        .iter()
        .map(|x| match &g.var(x).unwrap().ty {
            SetExpr::Const(c) if c == "N" => n as usize,
            other => panic!("unexpected type {other:?}"),
        })
        .product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn valuation_count_is_the_product(n in 1i64..5, seq in any::<bool>()) {
        let variant = if seq { AsVariant::Sequential } else { AsVariant::Sync };
        let g = build_alarm_system(variant, n).unwrap();
        let inst = inst_of(&g, &[]);
        for t in &g.transitions {
            let vs = enumerate_valuations(t, &inst).unwrap();
            prop_assert_eq!(vs.len(), valuation_count_oracle(&g, t, n));
            prop_assert!(vs.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn ranges_grow_with_the_parameter(n in 1i64..20, d in 0i64..5) {
        let g = build_alarm_system(AsVariant::Sync, n).unwrap();
        let small = inst_of(&g, &[]);
        let big = inst_of(&g, &[("n", n + d)]);
        let a = elaborate_type(&range_n(), &small).unwrap();
        let b = elaborate_type(&range_n(), &big).unwrap();
        prop_assert!(a.elements.is_subset(&b.elements));
        prop_assert_eq!(a.len() as i64, n);
    }

    #[test]
    fn arc_tokens_stay_in_the_place_type(n in 1i64..4, k in 1i64..3) {
        let g = build_robots(n, k).unwrap();
        let inst = inst_of(&g, &[]);
        for t in &g.transitions {
            for v in enumerate_valuations(t, &inst).unwrap() {
                if !eval_guard(&t.guard, &v, &inst).unwrap() {
                    continue;
                }
                for a in t.pre.iter().chain(&t.post) {
                    let ty = inst.place_type(g.place_index(&a.place).unwrap());
                    let toks = eval_arc(&a.expr, &v, &inst, ty).unwrap();
                    prop_assert!(toks.iter().all(|d| ty.contains(d)));
                }
            }
        }
    }
}
