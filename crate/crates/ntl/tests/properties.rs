//! Randomized property tests for cross-module invariants: normal-form and
//! printer round trips, emptiness/witness agreement, product soundness,
//! fixpoint monotonicity and parity-strategy simulation.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ntl::automata::alphabet::Alphabet;
use ntl::automata::game::{ParityGame, Player};
use ntl::automata::npta::Npta;
use ntl::check::{proposition_universe, DEFAULT_STATE_CAP};
use ntl::construct::{build_exec_tree_automaton, build_formula_npta};
use ntl::dpn::parse_dpn;
use ntl::exec::{enumerate_execution_graphs, figure_graph, ExecutionGraph};
use ntl::formula::{parse_formula, to_pnf, Formula, SuccessorType};
use ntl::gen::{formula_corpus, random_tree};
use ntl::oracle::{check_monotonicity, models, NodeSet, Valuation};

/// A pool of small complete execution graphs to evaluate semantics on.
fn graph_pool() -> &'static Vec<ExecutionGraph> {
    static S: OnceLock<Vec<ExecutionGraph>> = OnceLock::new();
    S.get_or_init(|| {
        let mut pool = vec![figure_graph().0];
        for text in [
            "dpn { locations: s0 s1; stack: g0 g1; init: s0 g1;
               label s0 g1 { p } label s1 g0 { q }
               rule s0 g1 -> s1 g0
               rule s0 g1 -> s0 g0 g0
               rule s0 g1 -> s1 g0 spawn s0 g0 }",
            "dpn { locations: s0; stack: g0 g1 g2; init: s0 g2;
               label s0 g2 { p q } label s0 g1 { r }
               rule s0 g2 -> s0 g1 g0
               rule s0 g1 -> s0
               rule s0 g2 -> s0 g0 spawn s0 g1 }",
        ] {
            let m = parse_dpn(text).unwrap();
            pool.extend(
                enumerate_execution_graphs(&m, 40, 20).into_iter().filter(|g| g.complete),
            );
        }
        assert!(pool.len() >= 5);
        pool
    })
}

/// Random closed formula with unique, guarded binders: fixpoint variables are
/// introduced only directly under a next operator.
fn random_closed_formula(rng: &mut ChaCha8Rng, depth: usize, fresh: &mut usize) -> Formula {
    let atom = |rng: &mut ChaCha8Rng| Formula::atom(["p", "q", "r"][rng.gen_range(0..3)]);
    if depth == 0 {
        let a = atom(rng);
        return if rng.gen_bool(0.5) { a } else { Formula::not(a) };
    }
    let f = SuccessorType::ALL[rng.gen_range(0..6)];
    match rng.gen_range(0..6) {
        0 => Formula::and(
            random_closed_formula(rng, depth - 1, fresh),
            random_closed_formula(rng, depth - 1, fresh),
        ),
        1 => Formula::or(
            random_closed_formula(rng, depth - 1, fresh),
            random_closed_formula(rng, depth - 1, fresh),
        ),
        2 => Formula::next(f, random_closed_formula(rng, depth - 1, fresh)),
        3 => Formula::dual_next(f, random_closed_formula(rng, depth - 1, fresh)),
        4 => Formula::not(random_closed_formula(rng, depth - 1, fresh)),
        _ => {
            let x = format!("Z{}", *fresh);
            *fresh += 1;
            let guarded = Formula::next(f, Formula::var(&x));
            let body = if rng.gen_bool(0.5) {
                Formula::or(random_closed_formula(rng, depth - 1, fresh), guarded)
            } else {
                Formula::and(random_closed_formula(rng, depth - 1, fresh), guarded)
            };
            if rng.gen_bool(0.5) {
                Formula::mu(&x, body)
            } else {
                Formula::nu(&x, body)
            }
        }
    }
}

/// Cached (formula, pipeline automaton) pairs over each formula's own universe.
fn corpus_automata() -> &'static Vec<(Formula, Npta)> {
    static S: OnceLock<Vec<(Formula, Npta)>> = OnceLock::new();
    S.get_or_init(|| {
        formula_corpus()
            .into_iter()
            .map(|phi| {
                let pnf = to_pnf(&phi);
                let alphabet = Alphabet::new(proposition_universe(&pnf, None));
                let a = build_formula_npta(&pnf, alphabet, DEFAULT_STATE_CAP).unwrap();
                (phi, a)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Positive normal form preserves the semantics, is idempotent, and the
    /// core printer round-trips through the parser.
    #[test]
    fn pnf_and_printer_roundtrip(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fresh = 0;
        let depth = rng.gen_range(1..=4);
        let phi = random_closed_formula(&mut rng, depth, &mut fresh);
        let pnf = to_pnf(&phi);
        prop_assert_eq!(&to_pnf(&pnf), &pnf, "normal form is not idempotent");
        prop_assert_eq!(&parse_formula(&phi.to_string()).unwrap(), &phi);
        for g in graph_pool() {
            prop_assert_eq!(
                models(g, &phi).unwrap(),
                models(g, &pnf).unwrap(),
                "normal form changed the semantics of {}", phi
            );
        }
    }

    /// An automaton is empty exactly when no witness can be extracted, and
    /// every extracted witness is a member of the language.
    #[test]
    fn emptiness_agrees_with_witness_extraction(idx in 0usize..35) {
        let (_, a) = &corpus_automata()[idx % corpus_automata().len()];
        match a.extract_witness() {
            None => prop_assert!(a.is_empty()),
            Some(w) => {
                prop_assert!(!a.is_empty());
                prop_assert!(a.membership_regular(&w).unwrap(), "witness rejected");
            }
        }
    }

    /// Product membership coincides with membership in both factors.
    #[test]
    fn intersection_is_sound(seed: u64, idx in 0usize..35) {
        let (_, a) = &corpus_automata()[idx % corpus_automata().len()];
        let et = build_exec_tree_automaton(a.alphabet.clone());
        let product = a.intersect(&et).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..5 {
            let t = random_tree(&mut rng, 8, &["p", "q", "r"]);
            prop_assert_eq!(
                product.membership_finite(&t).unwrap(),
                a.membership_finite(&t).unwrap() && et.membership_finite(&t).unwrap(),
                "product membership differs from factors on {}", t.to_text()
            );
        }
    }

    /// Fixpoint bodies are monotone in their variable (positive occurrences).
    #[test]
    fn fixpoint_bodies_are_monotone(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pool = graph_pool();
        let g = &pool[rng.gen_range(0..pool.len())];
        // a positive open body: guard a variable occurrence under each next
        let mut fresh = 0;
        let depth = rng.gen_range(1..=3);
        let closed = random_closed_formula(&mut rng, depth, &mut fresh);
        let f = SuccessorType::ALL[rng.gen_range(0..6)];
        let body = Formula::or(to_pnf(&closed), Formula::next(f, Formula::var("X")));
        let mut m1 = NodeSet::empty(g.len());
        let mut m2 = NodeSet::empty(g.len());
        for x in 0..g.len() {
            if rng.gen_bool(0.5) {
                m2.insert(x);
                if rng.gen_bool(0.5) {
                    m1.insert(x);
                }
            }
        }
        prop_assert!(check_monotonicity(g, &body, &Valuation::new(), "X", &m1, &m2).unwrap());
    }

    /// Following the solver's strategy from a position won by its owner never
    /// loses, regardless of how the opponent plays (positionally).
    #[test]
    fn parity_strategy_wins_simulated_plays(seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=7);
        let mut g = ParityGame::new();
        for _ in 0..n {
            let o = if rng.gen_bool(0.5) { Player::Verifier } else { Player::Pathfinder };
            g.add_position(o, rng.gen_range(0..=4));
        }
        for v in 0..n {
            for _ in 0..rng.gen_range(0..=3) {
                g.add_move(v, rng.gen_range(0..n));
            }
        }
        let sol = g.solve();
        for start in 0..n {
            let w = sol.winner[start];
            for _ in 0..20 {
                // random positional strategy for the loser, solver strategy for w
                let loser_pick: Vec<Option<usize>> = (0..n)
                    .map(|v| {
                        if g.moves[v].is_empty() {
                            None
                        } else {
                            Some(g.moves[v][rng.gen_range(0..g.moves[v].len())])
                        }
                    })
                    .collect();
                let mut seen = vec![usize::MAX; n];
                let mut trace = Vec::new();
                let mut cur = start;
                let outcome = loop {
                    if seen[cur] != usize::MAX {
                        let p = trace[seen[cur]..].iter().map(|&v| g.priority[v]).min().unwrap();
                        break Player::of_priority(p);
                    }
                    seen[cur] = trace.len();
                    trace.push(cur);
                    let pick =
                        if g.owner[cur] == w { sol.strategy[cur] } else { loser_pick[cur] };
                    match pick {
                        Some(u) => cur = u,
                        None => break g.owner[cur].opponent(),
                    }
                };
                prop_assert_eq!(outcome, w, "strategy lost from {} in {:?}", start, g);
            }
        }
    }
}

/// Valid finite execution trees decode to graphs and re-encode to themselves;
/// complete enumerated graphs re-encode through their tree exactly.
#[test]
fn tree_graph_round_trip() {
    use ntl::exec::{graph_from_tree, tree_representation};
    for g in graph_pool() {
        let (t, _) = tree_representation(g).unwrap();
        let g2 = graph_from_tree(&t).unwrap();
        assert_eq!(g.labels, g2.labels);
        assert_eq!(g.int_succ, g2.int_succ);
        assert_eq!(g.call_succ, g2.call_succ);
        assert_eq!(g.ret_succ, g2.ret_succ);
        assert_eq!(g.spawn_succ, g2.spawn_succ);
        assert_eq!(g.nesting, g2.nesting);
        let (t2, _) = tree_representation(&g2).unwrap();
        assert_eq!(t, t2);
    }
}

/// Every DPN has at least one (possibly truncated) execution graph.
#[test]
fn every_dpn_generates_some_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let m = ntl::gen::random_terminating_dpn(&mut rng, &["p", "q"]);
        assert!(!enumerate_execution_graphs(&m, 50, 4).is_empty());
    }
}

/// The proposition universe always contains the truth proposition and every
/// proposition of formula and model.
#[test]
fn proposition_universe_covers_inputs() {
    let m = parse_dpn(
        "dpn { locations: s0; stack: g0; init: s0 g0; label s0 g0 { a b } }",
    )
    .unwrap();
    let phi = parse_formula("Gr (c -> F{g} d)").unwrap();
    let u = proposition_universe(&phi, Some(&m));
    for p in ["a", "b", "c", "d", "__t"] {
        assert!(u.contains(p), "universe misses {p}");
    }
    let expected: BTreeSet<String> =
        ["a", "b", "c", "d", "__t"].iter().map(|s| s.to_string()).collect();
    assert_eq!(u, expected);
}
