use flightmon::corpus;
use flightmon::frontend::*;
use flightmon::types::SemType;
use proptest::prelude::*;

fn ident() -> impl Strategy<Value = Ident> {
    prop::sample::select(vec!["i0", "i1", "o0", "o1", "speed_h", "δheight", "x_2"]).prop_map(Ident::new)
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<bool>().prop_map(Literal::Bool),
        prop::sample::select(vec!["0", "9", "34", "135", "18446744073709551615"]).prop_map(|s| Literal::Int(s.into())),
        prop::sample::select(vec!["0.0", "1.5", "0.15", "135.0", "3.14159265359", "0.000000001", "1e-9", "2.5E3"])
            .prop_map(|s| Literal::Float(s.into())),
    ]
}

fn duration() -> impl Strategy<Value = WindowDuration> {
    prop_oneof![
        Just(WindowDuration::Infinite),
        (
            prop::sample::select(vec!["3", "5", "10", "2", "0.5"]),
            prop::sample::select(vec![TimeUnit::Seconds, TimeUnit::Minutes, TimeUnit::Hours])
        )
            .prop_map(|(t, unit)| WindowDuration::Finite { text: t.into(), unit }),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![literal().prop_map(ExprKind::Literal), ident().prop_map(ExprKind::Stream)]
        .prop_map(Expr::new);
    leaf.prop_recursive(5, 48, 3, |inner| {
        let default = prop::option::of(inner.clone().prop_map(Box::new));
        prop_oneof![
            (ident(), 1u32..5, default.clone())
                .prop_map(|(stream, by, default)| ExprKind::Offset { stream, by, default }),
            (ident(), default.clone()).prop_map(|(stream, default)| ExprKind::Hold { stream, default }),
            (ident(), duration(), prop::sample::select(WindowFunction::ALL.to_vec()), default)
                .prop_map(|(stream, duration, function, default)| ExprKind::Window { stream, duration, function, default }),
            (prop::sample::select(vec![UnaryOp::Neg, UnaryOp::Not, UnaryOp::Abs, UnaryOp::Sqrt]), inner.clone())
                .prop_map(|(op, e)| ExprKind::Unary { op, operand: Box::new(e) }),
            (
                prop::sample::select(vec![
                    BinaryOp::Add,
                    BinaryOp::Sub,
                    BinaryOp::Mul,
                    BinaryOp::Div,
                    BinaryOp::And,
                    BinaryOp::Or,
                    BinaryOp::Eq,
                    BinaryOp::Ne,
                    BinaryOp::Lt,
                    BinaryOp::Le,
                    BinaryOp::Gt,
                    BinaryOp::Ge,
                ]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| ExprKind::Binary { op, lhs: Box::new(l), rhs: Box::new(r) }),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, t, e)| ExprKind::If {
                cond: Box::new(c),
                then: Box::new(t),
                otherwise: Box::new(e)
            }),
            (prop::sample::select(vec![CastKind::Int, CastKind::Float, CastKind::Cast]), inner)
                .prop_map(|(kind, e)| ExprKind::Cast { kind, operand: Box::new(e) }),
        ]
        .prop_map(Expr::new)
    })
}

fn frequency() -> impl Strategy<Value = Option<Frequency>> {
    prop::option::of(prop::sample::select(vec!["1", "10", "0.5", "100"]).prop_map(|t| Frequency { text: t.into() }))
}

fn specification() -> impl Strategy<Value = SpecificationAst> {
    let inputs = prop::collection::vec(prop::sample::select(SemType::ALL.to_vec()), 0..3);
    let outputs = prop::collection::vec((prop::option::of(prop::sample::select(SemType::ALL.to_vec())), frequency(), expr()), 0..3);
    let triggers = prop::collection::vec((frequency(), expr(), "[a-zA-Z0-9 :.,\"\\\\]{0,20}"), 0..3);
    (inputs, outputs, triggers).prop_map(|(inputs, outputs, triggers)| SpecificationAst {
        inputs: inputs
            .into_iter()
            .enumerate()
            .map(|(k, ty)| InputDecl { name: Ident::new(format!("i{k}")), ty, span: Span::default() })
            .collect(),
        outputs: outputs
            .into_iter()
            .enumerate()
            .map(|(k, (ty, frequency, expr))| OutputDecl {
                name: Ident::new(format!("o{k}")),
                ty,
                frequency,
                expr,
                span: Span::default(),
            })
            .collect(),
        triggers: triggers
            .into_iter()
            .map(|(frequency, condition, message)| TriggerDecl { frequency, condition, message, span: Span::default() })
            .collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn format_then_parse_is_identity(ast in specification()) {
        let text = format_spec(&ast);
        let back = parse_spec(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(&back, &ast, "{}", text);
        prop_assert_eq!(format_spec(&back), text);
    }

    #[test]
    fn parsing_never_panics(src in "\\PC{0,80}") {
        let _ = parse_spec(&src);
    }

    #[test]
    fn parsing_mangled_corpus_never_panics(k in 0usize..8, cut in 0usize..4000, junk in "[ -~∧∨¬Σ∫∞]{0,3}") {
        let src = corpus::ALL[k].source;
        let cut = (0..=cut.min(src.len())).rev().find(|i| src.is_char_boundary(*i)).unwrap();
        let mangled = format!("{}{}{}", &src[..cut], junk, &src[cut..]);
        let _ = parse_spec(&mangled);
    }
}

#[test]
fn empty_specification() {
    assert_eq!(format_spec(&SpecificationAst::default()), "");
    assert!(parse_spec("").unwrap().is_empty());
    assert!(parse_spec("// nothing\nimport math\n").unwrap().is_empty());
}

#[test]
fn canonical_rendering_keeps_the_literal() {
    let ast = parse_spec("trigger abs(speed_h) > 1.5 \"VIOLATION: Horizontal speed exceeds threshold.\"").unwrap();
    assert_eq!(format_spec(&ast), "trigger abs(speed_h) > 1.5 \"VIOLATION: Horizontal speed exceeds threshold.\"\n");
}

#[test]
fn corpus_round_trips_and_keeps_literals() {
    for spec in corpus::ALL {
        let ast = parse_spec(spec.source).unwrap_or_else(|e| panic!("{}: {e}", spec.name));
        let text = format_spec(&ast);
        assert_eq!(parse_spec(&text).unwrap(), ast, "{}", spec.name);
        let mut literals = Vec::new();
        let mut collect = |e: &Expr| {
            if let ExprKind::Literal(Literal::Int(t) | Literal::Float(t)) = &e.kind {
                literals.push(t.clone());
            }
        };
        for o in &ast.outputs {
            o.expr.walk(&mut collect);
        }
        for t in &ast.triggers {
            t.condition.walk(&mut collect);
        }
        for lit in literals {
            assert!(spec.source.contains(&lit), "{}: literal {lit} is not verbatim source text", spec.name);
            assert!(text.contains(&lit), "{}: literal {lit} lost by the formatter", spec.name);
        }
    }
}

#[test]
fn unicode_and_ascii_spellings_agree() {
    let pairs = [
        ("x.aggregate(over: 5s, using: Σ)", "x.aggregate(over: 5s, using: sum)"),
        ("x.aggregate(over: ∞, using: ∫)", "x.aggregate(over: ∞, using: integral)"),
        ("¬a ∧ b ∨ c", "!a and b or c"),
        ("a ≠ b ∧ a ≤ b ∧ a ≥ b", "a != b and a <= b and a >= b"),
    ];
    for (u, a) in pairs {
        let pu = parse_spec(&format!("trigger {u} \"m\"")).unwrap();
        let pa = parse_spec(&format!("trigger {a} \"m\"")).unwrap();
        assert_eq!(pu, pa, "{u}");
    }
}

#[test]
fn errors_carry_positions() {
    let e = parse_spec("input a: Float32\noutput b := a +\n").unwrap_err();
    assert_eq!(e.line, 3);
    let e = parse_spec("input a: Float33").unwrap_err();
    assert_eq!((e.line, e.column), (1, 10));
    let e = parse_spec("input a: Int8\ninput a: Int8").unwrap_err();
    assert_eq!(e.line, 2);
    assert!(parse_spec("trigger a > 1 \"unterminated").is_err());
    assert!(parse_spec("output x @3Hzz := 1").is_err());
}

#[test]
fn durations_and_frequencies() {
    let ast = parse_spec("output a @1Hz := x.aggregate(over: 2min, using: avg)\noutput b @ 0.5Hz := y.aggregate(over: 1.5h, using: max)").unwrap();
    let ExprKind::Window { duration, .. } = &ast.outputs[0].expr.kind else { panic!() };
    assert_eq!(duration.nanos(), Some(120_000_000_000));
    let ExprKind::Window { duration, .. } = &ast.outputs[1].expr.kind else { panic!() };
    assert_eq!(duration.nanos(), Some(5_400_000_000_000));
    assert_eq!(ast.outputs[1].frequency.as_ref().unwrap().period_ns(), Some(2_000_000_000));
}
