use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn atoms(net: &GroundNetwork) -> Vec<String> {
    net.atoms.iter().map(|a| a.to_string()).collect()
}

#[test]
fn parses_a_single_rule() {
    let p = parse_program("1.0: P(a) & Q(a,b) -> R(b)").unwrap();
    assert_eq!(p.rules.len(), 1);
    let r = &p.rules[0];
    assert_eq!(r.weight, 1.0);
    assert_eq!(r.exponent, DEFAULT_EXPONENT);
    assert_eq!(r.body, vec![Literal::positive("P", &["a"]), Literal::positive("Q", &["a", "b"])]);
    let arities: Vec<(&str, usize)> = p.predicates.iter().map(|p| (p.name.as_str(), p.arity)).collect();
    assert_eq!(arities, [("P", 1), ("Q", 2), ("R", 1)]);
}

#[test]
fn parser_errors_carry_positions() {
    assert_eq!(
        parse_program("P(a) -> R(b)"),
        Err(PslError::UnboundHeadVariable { line: 1, variable: "b".into() })
    );
    assert!(matches!(parse_program("# c\n-2: P(a) -> R(a)"), Err(PslError::NegativeWeight { line: 2, .. })));
    assert_eq!(
        parse_program("P(a) & Q(a -> R(a)"),
        Err(PslError::Syntax { line: 1, column: 12, message: "expected `)`".into() })
    );
    assert!(matches!(parse_program("P(a) -> R(a) ^3"), Err(PslError::Syntax { .. })));
    assert!(matches!(parse_program("P(a) -> P(a, a)"), Err(PslError::ArityConflict { .. })));
    assert!(matches!(parse_program("open P/2\nP(a) -> R(a)"), Err(PslError::ArityConflict { line: 2, .. })));
    assert!(matches!(parse_program("P(a) R(a)"), Err(PslError::Syntax { .. })));
}

#[test]
fn parser_accepts_aliases_comments_and_declarations() {
    let p = parse_program("open pos/1 # target\n\n0.5: Manifesto(x) ∧ ¬Ratio(x) → ¬pos(x) ^1\n").unwrap();
    assert!(!p.is_closed("pos"));
    assert!(p.is_closed("Ratio"));
    let r = &p.rules[0];
    assert_eq!((r.weight, r.exponent), (0.5, 1));
    assert!(r.body[1].negated && r.head.negated);
    let again = parse_program(&p.to_string()).unwrap();
    assert_eq!(again, p);
}

#[test]
fn grounds_one_rule_per_substitution() {
    let program = parse_program("open R/1\nP(a) -> R(a)").unwrap();
    let mut db = Database::new();
    for x in ["1", "2"] {
        db.observe("P", &[x], 1.0).unwrap();
        db.add_target("R", &[x], None).unwrap();
    }
    let net = ground(&program, &db).unwrap();
    assert_eq!(net.rules.len(), 2);
    assert_eq!(net.num_free(), 2);
}

#[test]
fn closed_world_prunes_unobserved_bodies() {
    let program = parse_program("open R/1\nP(a) & Q(a) -> R(a)").unwrap();
    let mut db = Database::new();
    db.observe("P", &["1"], 1.0).unwrap();
    db.observe("P", &["2"], 1.0).unwrap();
    db.observe("Q", &["1"], 0.9).unwrap();
    db.observe("Q", &["3"], 0.0).unwrap();
    for x in ["1", "2", "3"] {
        db.add_target("R", &[x], None).unwrap();
    }
    let net = ground(&program, &db).unwrap();
    assert_eq!(net.rules.len(), 1);
    assert_eq!(net.atoms[net.rules[0].head.atom].to_string(), "R(1)");
}

#[test]
fn transitivity_over_a_clique() {
    let program = parse_program(
        "open pos/1\n\
         Manifesto(x) & Party(x, a) & Manifesto(y) & Party(y, b) & Manifesto(z) & Party(z, c) & \
         SameElec(x, y) & SameElec(y, z) & RegCoalition(a, b) & RegCoalition(b, c) & pos(x) -> pos(z)",
    )
    .unwrap();
    let mut db = Database::new();
    let ms = ["m1", "m2", "m3"];
    let ps = ["p1", "p2", "p3"];
    for (m, p) in ms.iter().zip(&ps) {
        db.observe("Manifesto", &[m], 1.0).unwrap();
        db.observe("Party", &[m, p], 1.0).unwrap();
        db.add_target("pos", &[m], Some(0.5)).unwrap();
    }
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                db.observe("SameElec", &[ms[i], ms[j]], 1.0).unwrap();
                db.observe("RegCoalition", &[ps[i], ps[j]], 0.8).unwrap();
            }
        }
    }
    let net = ground(&program, &db).unwrap();

    // Oracle: ordered triples with both SameElec atoms present and x != z
    // (x == z makes the rule a tautology pos(x) -> pos(x)).
    let mut expected = Vec::new();
    for x in 0..3 {
        for y in 0..3 {
            for z in 0..3 {
                if x != y && y != z && x != z {
                    expected.push((format!("pos({})", ms[x]), format!("pos({})", ms[z])));
                }
            }
        }
    }
    assert_eq!(expected.len(), 6);
    let mut got: Vec<(String, String)> = net
        .rules
        .iter()
        .map(|r| (net.atoms[r.body[10].atom].to_string(), net.atoms[r.head.atom].to_string()))
        .collect();
    got.sort();
    expected.sort();
    assert_eq!(got, expected);
    assert_eq!(net.pruned, 6);
}

#[test]
fn grounding_errors() {
    let program = parse_program("open R/1\nP(a) -> R(a)").unwrap();
    let mut db = Database::new();
    db.observe("P", &["1"], 1.0).unwrap();
    assert_eq!(ground(&program, &db), Err(PslError::MissingTarget("R(1)".into())));

    let unsafe_rule = parse_program("open R/1\nP(a) & !Q(b) -> R(a)").unwrap();
    assert!(matches!(ground(&unsafe_rule, &db), Err(PslError::UnsafeVariable { rule: 1, .. })));
    assert!(matches!(db.observe("P", &["2"], 1.5), Err(PslError::ValueOutOfRange { .. })));
}

#[test]
fn open_atoms_may_be_observed() {
    let program = parse_program("open pos/1\nPrev(x, t) & pos(t) -> pos(x)").unwrap();
    let mut db = Database::new();
    db.observe("Prev", &["new", "old"], 1.0).unwrap();
    db.observe("pos", &["old"], 0.8).unwrap();
    db.add_target("pos", &["new"], Some(0.1)).unwrap();
    let net = ground(&program, &db).unwrap();
    assert_eq!(net.num_free(), 1);
    assert_eq!(net.rules[0].hinge, Hinge { constant: 0.8, terms: vec![(0, -1.0)] });
    let res = map_inference(&net, &SolverConfig::default());
    assert!((res.values[0] - 0.8).abs() < 1e-4, "{:?}", res);
}

#[test]
fn distance_examples() {
    assert_eq!(distance(&[1.0, 1.0], 0.0).unwrap(), 1.0);
    assert!((distance(&[0.8, 0.7], 0.2).unwrap() - 0.3).abs() < 1e-15);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (q, r) = (rng.gen::<f64>(), rng.gen::<f64>());
        assert_eq!(distance(&[0.0, q], r).unwrap(), 0.0);
    }
    assert!(matches!(distance(&[1.2], 0.0), Err(PslError::ValueOutOfRange { .. })));
    assert!(matches!(distance(&[0.2], -0.1), Err(PslError::ValueOutOfRange { .. })));
    assert_eq!(conjunction(&[0.7, 0.8]), 0.5);
}

fn single_rule_network(weight: f64, exponent: u8, p: f64, q: f64, r: f64) -> GroundNetwork {
    let program = parse_program(&format!("open R/1\n{weight}: P(a) & Q(a) -> R(a) ^{exponent}")).unwrap();
    let mut db = Database::new();
    db.observe("P", &["1"], p).unwrap();
    db.observe("Q", &["1"], q).unwrap();
    db.add_target("R", &["1"], Some(r)).unwrap();
    ground(&program, &db).unwrap()
}

#[test]
fn energy_examples() {
    let net = single_rule_network(2.0, 2, 0.8, 0.7, 0.2);
    assert!((net.energy(&[0.2]) - 0.18).abs() < 1e-15);
    assert_eq!(net.energy(&[1.0]), 0.0);
    let mut reversed = net.clone();
    reversed.rules.reverse();
    assert_eq!(reversed.energy(&[0.4]), net.energy(&[0.4]));
}

#[test]
fn unopposed_rule_pulls_to_zero() {
    let program = parse_program("open pos/1\nManifesto(x) & !Prior(x) -> !pos(x)").unwrap();
    let mut db = Database::new();
    db.observe("Manifesto", &["m"], 1.0).unwrap();
    db.add_target("pos", &["m"], Some(0.9)).unwrap();
    // Prior(m) unobserved reads 0, so the body is fully true.
    let net = ground(&program, &db).unwrap();
    assert_eq!(net.rules.len(), 1);
    let res = map_inference(&net, &SolverConfig::default());
    assert!(res.converged);
    assert!(res.values[0].abs() < 1e-6, "{res:?}");

    // With Prior(m) = 1 the body is identically 0: nothing to infer.
    db.observe("Prior", &["m"], 1.0).unwrap();
    let net = ground(&program, &db).unwrap();
    assert!(net.rules.is_empty());
    assert_eq!(map_inference(&net, &SolverConfig::default()).values, vec![0.9]);
}

#[test]
fn opposing_rules_balance() {
    let program = parse_program("open pos/1\nA(x) -> pos(x)\nA(x) -> !pos(x)").unwrap();
    let mut db = Database::new();
    db.observe("A", &["m"], 1.0).unwrap();
    db.add_target("pos", &["m"], Some(0.9)).unwrap();
    let res = map_inference(&ground(&program, &db).unwrap(), &SolverConfig::default());
    assert!((res.values[0] - 0.5).abs() < 1e-6, "{res:?}");
}

/// Random program over three free and three observed unary atoms sharing the
/// constant `c`, bound by `D(c)`.
pub(crate) fn random_network(rng: &mut impl Rng) -> GroundNetwork {
    let n_free = rng.gen_range(1..=3);
    let free = ["A", "B", "C"];
    let observed = ["O1", "O2", "O3"];
    let mut text = String::new();
    for f in &free[..n_free] {
        text.push_str(&format!("open {f}/1\n"));
    }
    let n_rules = rng.gen_range(1..=6);
    for _ in 0..n_rules {
        let pick = |rng: &mut dyn rand::RngCore| {
            let name = if rng.gen_bool(0.6) { free[rng.gen_range(0..n_free)] } else { observed[rng.gen_range(0..3)] };
            format!("{}{}(c)", if rng.gen_bool(0.4) { "!" } else { "" }, name)
        };
        let body: Vec<String> = (0..rng.gen_range(1..=3)).map(|_| pick(rng)).collect();
        let head = pick(rng);
        let weight = rng.gen_range(0.1..2.0);
        let exponent = rng.gen_range(1..=2);
        text.push_str(&format!("{weight}: D(c) & {} -> {head} ^{exponent}\n", body.join(" & ")));
    }
    let program = parse_program(&text).unwrap();
    let mut db = Database::new();
    db.observe("D", &["c"], 1.0).unwrap();
    for o in observed {
        db.observe(o, &["c"], rng.gen()).unwrap();
    }
    for f in &free[..n_free] {
        db.add_target(f, &["c"], Some(rng.gen())).unwrap();
    }
    ground(&program, &db).unwrap()
}

/// Energy recomputed from the rule literals, without the compiled hinges.
pub(crate) fn literal_energy(net: &GroundNetwork, y: &[f64]) -> f64 {
    net.rules.iter().fold(net.constant_energy, |acc, r| {
        let d = net.distance_to_satisfaction(r, y).unwrap();
        acc + r.weight * d.powi(r.exponent as i32)
    })
}

pub(crate) fn grid_minimum(net: &GroundNetwork) -> f64 {
    let n = net.num_free();
    let mut best = f64::INFINITY;
    let mut y = vec![0.0; n];
    let total = 101usize.pow(n as u32);
    for k in 0..total {
        let mut rest = k;
        for v in y.iter_mut() {
            *v = (rest % 101) as f64 / 100.0;
            rest /= 101;
        }
        best = best.min(literal_energy(net, &y));
    }
    best
}

#[test]
fn solver_matches_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = f64::NEG_INFINITY;
    for _ in 0..30 {
        let net = random_network(&mut rng);
        let res = map_inference(&net, &SolverConfig::default());
        assert!(res.values.iter().all(|v| (0.0..=1.0).contains(v)));
        let grid = grid_minimum(&net);
        worst = worst.max(res.energy - grid);
        assert!(res.energy <= grid + 1e-3, "solver {} grid {grid}", res.energy);
        assert!((res.energy - literal_energy(&net, &res.values)).abs() < 1e-12);
    }
    eprintln!("worst gap {worst}");
}

#[test]
fn energy_is_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let net = random_network(&mut rng);
        let n = net.num_free();
        let a: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let b: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let t: f64 = rng.gen();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        assert!(net.energy(&mix) <= t * net.energy(&a) + (1.0 - t) * net.energy(&b) + 1e-12);
    }
}

#[test]
fn weight_scaling_scales_energy_and_keeps_argmin() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let net = random_network(&mut rng);
        let c = rng.gen_range(0.5..4.0);
        let mut scaled = net.clone();
        scaled.constant_energy *= c;
        for r in &mut scaled.rules {
            r.weight *= c;
        }
        let y: Vec<f64> = (0..net.num_free()).map(|_| rng.gen()).collect();
        assert!((scaled.energy(&y) - c * net.energy(&y)).abs() < 1e-12);
        let a = map_inference(&net, &SolverConfig::default());
        let b = map_inference(&scaled, &SolverConfig::default());
        assert!((b.energy / c - a.energy).abs() < 1e-4, "{} vs {}", b.energy / c, a.energy);
    }
}

#[test]
fn empty_network_keeps_initial_values() {
    let program = parse_program("open pos/1").unwrap();
    let mut db = Database::new();
    db.add_target("pos", &["m"], Some(0.3)).unwrap();
    let net = ground(&program, &db).unwrap();
    assert_eq!(atoms(&net), ["pos(m)"]);
    let res = map_inference(&net, &SolverConfig::default());
    assert_eq!(res.values, vec![0.3]);
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn literal() -> impl Strategy<Value = String> {
        (prop::sample::select(vec!["P", "Q", "Rel", "pos"]), any::<bool>())
            .prop_map(|(p, neg)| format!("{}{}(x)", if neg { "!" } else { "" }, p))
    }

    proptest! {
        #[test]
        fn distance_in_unit_interval_and_monotone(
            body in prop::collection::vec(0.0f64..=1.0, 1..5),
            head in 0.0f64..=1.0,
            bump in 0.0f64..=1.0,
            i in 0usize..5,
        ) {
            let d = distance(&body, head).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            let i = i % body.len();
            let mut up = body.clone();
            up[i] = (up[i] + bump).min(1.0);
            prop_assert!(distance(&up, head).unwrap() >= d);
            prop_assert!(distance(&body, (head + bump).min(1.0)).unwrap() <= d);
            let b = conjunction(&body);
            if b < head - 1e-12 {
                prop_assert_eq!(d, 0.0);
            } else if b > head + 1e-12 {
                prop_assert!(d > 0.0);
            }
        }

        #[test]
        fn print_parse_round_trip(
            rules in prop::collection::vec(
                (0.0f64..10.0, prop::collection::vec(literal(), 1..4), literal(), 1u8..=2),
                0..6,
            )
        ) {
            let text: String = rules
                .iter()
                .map(|(w, body, head, e)| format!("{w}: Dom(x) & {} -> {head} ^{e}\n", body.join(" & ")))
                .collect();
            let program = parse_program(&text).unwrap();
            prop_assert_eq!(program.rules.len(), rules.len());
            prop_assert_eq!(parse_program(&program.to_string()).unwrap(), program);
        }
    }
}

#[test]
fn database_text_round_trip() {
    let text = "# votes\nFriends(a, b) = 0.8\nSmokes(a) = 1\n?Smokes(b)\n?Smokes(c) = 0.25\n";
    let db = Database::parse(text).unwrap();
    assert_eq!(db.num_observed(), 2);
    assert_eq!(db.num_targets(), 2);
    assert_eq!(db.target("Smokes", &["c".to_string()]), Some(Some(0.25)));
    assert_eq!(db.target("Smokes", &["b".to_string()]), Some(None));
    assert_eq!(Database::parse(&db.to_string()).unwrap(), db);

    for (bad, line) in [("A(x)\n", 1), ("\nA(x = 0.2\n", 2), ("A() = 0.1\n", 1), ("A(x) = 1.5\n", 0), ("A(x) = hi\n", 1)] {
        match Database::parse(bad).unwrap_err() {
            PslError::Syntax { line: l, .. } => assert_eq!(l, line, "{bad:?}"),
            PslError::ValueOutOfRange { .. } => assert_eq!(line, 0),
            e => panic!("{bad:?}: {e}"),
        }
    }
}
