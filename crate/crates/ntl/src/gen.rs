//! Generators for the test-suite: exhaustive enumeration of small labelled
//! trees, seeded random models, trees and a formula corpus.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::dpn::{Dpn, Rule};
use crate::exec::{ExecutionTree, Move, NodeKind, TreeLabel};
use crate::formula::{parse_formula, Formula};

/// All tree labels over the given propositions: every subset, kind and
/// predecessor-move combination.
pub fn all_labels(props: &BTreeSet<String>) -> Vec<TreeLabel> {
    let props: Vec<&String> = props.iter().collect();
    let mut out = Vec::new();
    for subset in 0u32..1 << props.len() {
        let ps: BTreeSet<String> = props
            .iter()
            .enumerate()
            .filter(|(i, _)| subset & (1 << i) != 0)
            .map(|(_, p)| (*p).clone())
            .collect();
        for kind in NodeKind::ALL {
            for pred in [None, Some(Move::Int), Some(Move::Call), Some(Move::Ret), Some(Move::Spawn)]
            {
                out.push(TreeLabel { props: ps.clone(), kind, pred });
            }
        }
    }
    out
}

/// Every finite labelled binary tree with at most `max_nodes` nodes over the
/// proposition universe, arity-consistent but otherwise unconstrained (labels
/// need not form a valid execution tree). Exhaustive and deterministic; meant
/// for small `max_nodes` only.
pub fn all_finite_trees(max_nodes: usize, props: &BTreeSet<String>) -> Vec<ExecutionTree> {
    #[derive(Clone)]
    struct Node {
        label: TreeLabel,
        kids: Vec<Node>,
    }

    let labels = all_labels(props);
    let by_arity: [Vec<&TreeLabel>; 3] = [
        labels.iter().filter(|l| l.arity() == 0).collect(),
        labels.iter().filter(|l| l.arity() == 1).collect(),
        labels.iter().filter(|l| l.arity() == 2).collect(),
    ];

    // memo[n] = all trees with exactly n+1 nodes
    let mut memo: Vec<Vec<Node>> = Vec::new();
    for n in 1..=max_nodes {
        let mut trees = Vec::new();
        if n == 1 {
            for l in &by_arity[0] {
                trees.push(Node { label: (*l).clone(), kids: Vec::new() });
            }
        }
        if n >= 2 {
            for l in &by_arity[1] {
                for sub in &memo[n - 2] {
                    trees.push(Node { label: (*l).clone(), kids: vec![sub.clone()] });
                }
            }
        }
        if n >= 3 {
            for l in &by_arity[2] {
                for left_n in 1..n - 1 {
                    for left in &memo[left_n - 1] {
                        for right in &memo[n - 2 - left_n] {
                            trees.push(Node {
                                label: (*l).clone(),
                                kids: vec![left.clone(), right.clone()],
                            });
                        }
                    }
                }
            }
        }
        memo.push(trees);
    }

    fn flatten(node: &Node, parent: Option<(usize, u8)>, out: &mut ExecutionTree) -> usize {
        let me = out.labels.len();
        out.labels.push(node.label.clone());
        out.children.push([None, None]);
        out.parent.push(parent);
        for (d, kid) in node.kids.iter().enumerate() {
            let c = flatten(kid, Some((me, d as u8)), out);
            out.children[me][d] = Some(c);
        }
        me
    }

    memo.into_iter()
        .flatten()
        .map(|n| {
            let mut t =
                ExecutionTree { labels: Vec::new(), children: Vec::new(), parent: Vec::new() };
            flatten(&n, None, &mut t);
            t
        })
        .collect()
}

/// A random DPN whose every run terminates: stack symbols are indexed and
/// every rule only produces strictly smaller indices (the total weight
/// Σ 3^index over all stack frames strictly decreases with each step), so
/// index-0 symbols are sinks. Return rules are additionally stripped from
/// symbols that can sit at the bottom of some thread's stack, which keeps
/// every complete execution graph representable as a tree.
pub fn random_terminating_dpn(rng: &mut impl Rng, props: &[&str]) -> Dpn {
    let n_loc = rng.gen_range(1..=3);
    let n_sym = rng.gen_range(3..=6);
    let loc = |i: usize| format!("s{i}");
    let sym = |i: usize| format!("g{i}");
    let locations: BTreeSet<String> = (0..n_loc).map(loc).collect();
    let stack: BTreeSet<String> = (0..n_sym).map(sym).collect();
    let init_symbol = sym(n_sym - 1);

    let mut rules = Vec::new();
    for s in 0..n_loc {
        for g in 1..n_sym {
            for _ in 0..rng.gen_range(0..=2) {
                let s2 = loc(rng.gen_range(0..n_loc));
                let g2 = sym(rng.gen_range(0..g));
                let g3 = sym(rng.gen_range(0..g));
                let sn = loc(rng.gen_range(0..n_loc));
                let gn = sym(rng.gen_range(0..g));
                let (s, g) = (loc(s), sym(g));
                rules.push(match rng.gen_range(0..8) {
                    0..=2 => Rule::Int { s, g, s2, g2 },
                    3..=4 => Rule::Call { s, g, s2, g2, g3 },
                    5..=6 => Rule::Spawn { s, g, s2, g2, sn, gn },
                    _ => Rule::Ret { s, g, s2 },
                });
            }
        }
    }
    rules.sort();
    rules.dedup();

    // symbols that some thread can have at the bottom of its stack: the
    // initial symbol, every spawn start symbol, and the pushed return symbol
    // of any call fired from a bottom symbol
    let mut bottom: BTreeSet<String> = BTreeSet::from([init_symbol.clone()]);
    for r in &rules {
        if let Rule::Spawn { gn, .. } = r {
            bottom.insert(gn.clone());
        }
    }
    loop {
        let mut grew = false;
        for r in &rules {
            // int and spawn replace the symbol in place; a call buries its
            // pushed return symbol directly above the rest of the stack
            let inherited = match r {
                Rule::Int { g, g2, .. } | Rule::Spawn { g, g2, .. } => Some((g, g2)),
                Rule::Call { g, g3, .. } => Some((g, g3)),
                Rule::Ret { .. } => None,
            };
            if let Some((g, h)) = inherited {
                if bottom.contains(g) && !bottom.contains(h) {
                    bottom.insert(h.clone());
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    rules.retain(|r| !matches!(r, Rule::Ret { g, .. } if bottom.contains(g)));

    let mut labels: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();
    for s in locations.iter() {
        for g in stack.iter() {
            if rng.gen_bool(0.7) {
                let ps: BTreeSet<String> = props
                    .iter()
                    .filter(|_| rng.gen_bool(0.4))
                    .map(|p| p.to_string())
                    .collect();
                if !ps.is_empty() {
                    labels.insert((s.clone(), g.clone()), ps);
                }
            }
        }
    }

    Dpn { locations, stack, init_location: loc(0), init_symbol, rules, labels }
}

/// A random finite arity-consistent labelled tree (not necessarily a valid
/// execution tree) with at most `max_nodes` nodes.
pub fn random_tree(rng: &mut impl Rng, max_nodes: usize, props: &[&str]) -> ExecutionTree {
    fn node(
        rng: &mut impl Rng,
        budget: &mut usize,
        props: &[&str],
        t: &mut ExecutionTree,
        parent: Option<(usize, u8)>,
    ) -> usize {
        let arity = if *budget == 0 {
            0
        } else {
            *budget -= 1;
            rng.gen_range(0..=2usize).min(*budget + 1)
        };
        let kind = match arity {
            0 => [NodeKind::End, NodeKind::Ret][rng.gen_range(0..2)],
            1 => [NodeKind::Int, NodeKind::Call][rng.gen_range(0..2)],
            _ => [NodeKind::Spawn, NodeKind::CallRet][rng.gen_range(0..2)],
        };
        let pred = if parent.is_none() {
            [None, Some(Move::Int), Some(Move::Call), Some(Move::Ret), Some(Move::Spawn)]
                [rng.gen_range(0..5)]
        } else {
            [Some(Move::Int), Some(Move::Call), Some(Move::Ret), Some(Move::Spawn)]
                [rng.gen_range(0..4)]
        };
        let ps: BTreeSet<String> =
            props.iter().filter(|_| rng.gen_bool(0.5)).map(|p| p.to_string()).collect();
        let id = t.labels.len();
        t.labels.push(TreeLabel { props: ps, kind, pred });
        t.children.push([None, None]);
        t.parent.push(parent);
        for d in 0..arity {
            let c = node(rng, budget, props, t, Some((id, d as u8)));
            t.children[id][d] = Some(c);
        }
        id
    }
    let mut t = ExecutionTree { labels: Vec::new(), children: Vec::new(), parent: Vec::new() };
    let mut budget = rng.gen_range(1..=max_nodes);
    node(rng, &mut budget, props, &mut t, None);
    t
}

/// A fixed corpus of closed well-formed formulas over the propositions
/// p, q, r: every next modality and its dual, reachability and invariance
/// through each successor, genuine fixpoint alternation, and the
/// request/acknowledge and spawn-visibility patterns used by the worked
/// examples.
pub fn formula_corpus() -> Vec<Formula> {
    [
        "p",
        "!p",
        "p | q",
        "p & !q",
        "<g> p",
        "[g] p",
        "<u> p",
        "[u] p",
        "<a> p",
        "[a] p",
        "<-> p",
        "[-] p",
        "<p> q",
        "[p] q",
        "<c> p",
        "[c] p",
        "F{g} p",
        "F{a} q",
        "F{-} p",
        "F{u} q",
        "Gr p",
        "Fr q",
        "Gr (p -> F{g} q)",
        "mu X. p | <g> X",
        "nu X. p & [g] X",
        "mu X. q | <u> X",
        "nu X. (mu Y. p | <g> Y) & [g] X",
        "nu X. [c] (mu Y. q | <g> Y) & [g] X",
        "mu X. (nu Y. p & [a] Y) | <g> X",
        "Gr (p -> <c> q)",
        "Gr (<c> p -> F{-} q)",
        "Gr (p -> <p> q)",
        "Fr (p & <g> (q & F{a} p))",
        "[g] (mu X. p | <a> X)",
        "nu X. (p | <c> X) & [g] X",
    ]
    .iter()
    .map(|s| parse_formula(s).expect("corpus formulas parse"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_counts_match_closed_form() {
        // with 0 props there are 10 labels per arity class; t(1)=10,
        // t(2)=100, t(3)=2000, t(4)=40000
        let trees = all_finite_trees(3, &BTreeSet::new());
        assert_eq!(trees.len(), 10 + 100 + 2000);
        assert!(trees.iter().all(|t| {
            (0..t.len()).all(|x| {
                t.labels[x].arity() == t.children[x].iter().flatten().count()
            })
        }));
    }

    #[test]
    fn labels_cover_universe() {
        let props: BTreeSet<String> = ["p".to_string()].into();
        assert_eq!(all_labels(&props).len(), 2 * 6 * 5);
    }

    #[test]
    fn random_dpns_terminate_with_tree_representable_graphs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut complete_graphs = 0;
        for _ in 0..20 {
            let m = random_terminating_dpn(&mut rng, &["p", "q"]);
            for g in crate::exec::enumerate_execution_graphs(&m, 300, 30) {
                assert!(g.complete, "index-decreasing rules must terminate");
                g.validate(true).unwrap();
                crate::exec::tree_representation(&g).unwrap();
                complete_graphs += 1;
            }
        }
        assert!(complete_graphs >= 20);
    }

    #[test]
    fn random_trees_are_arity_consistent() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let t = random_tree(&mut rng, 12, &["p"]);
            assert!((0..t.len())
                .all(|x| t.labels[x].arity() == t.children[x].iter().flatten().count()));
        }
    }

    #[test]
    fn corpus_is_closed_and_covers_all_modalities() {
        use crate::formula::{check_closed, subformulae, SuccessorType};
        let corpus = formula_corpus();
        assert!(corpus.len() >= 30);
        let mut nexts = BTreeSet::new();
        let mut duals = BTreeSet::new();
        let mut alternating = false;
        for phi in &corpus {
            check_closed(phi).unwrap();
            for sub in subformulae(phi) {
                match sub {
                    Formula::Next(f, _) => {
                        nexts.insert(f);
                    }
                    Formula::DualNext(f, _) => {
                        duals.insert(f);
                    }
                    Formula::Mu(_, p) => {
                        alternating |=
                            subformulae(&p).iter().any(|s| matches!(s, Formula::Nu(..)));
                    }
                    Formula::Nu(_, p) => {
                        alternating |=
                            subformulae(&p).iter().any(|s| matches!(s, Formula::Mu(..)));
                    }
                    _ => {}
                }
            }
        }
        assert_eq!(nexts.len(), SuccessorType::ALL.len());
        assert_eq!(duals.len(), SuccessorType::ALL.len());
        assert!(alternating);
    }
}
