//! Direct fixpoint semantics on finite execution graphs.
//!
//! This module evaluates navigation formulas by Kleene iteration over node
//! sets, with no automata involved. It is deliberately simple so it can serve
//! as an independent reference against which the automata pipeline is tested.

use std::collections::{BTreeMap, HashMap};

use crate::dpn::Dpn;
use crate::exec::{enumerate_execution_graphs, ExecutionGraph};
use crate::formula::{check_closed, free_variables, Formula, SuccessorType};

/// Set of graph nodes as a fixed-width bitset over the BFS node numbering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeSet {
    len: usize,
    words: Vec<u64>,
}

impl NodeSet {
    pub fn empty(len: usize) -> NodeSet {
        NodeSet { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn full(len: usize) -> NodeSet {
        let mut s = NodeSet::empty(len);
        for x in 0..len {
            s.insert(x);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn insert(&mut self, x: usize) {
        debug_assert!(x < self.len);
        self.words[x / 64] |= 1 << (x % 64);
    }

    pub fn contains(&self, x: usize) -> bool {
        x < self.len && self.words[x / 64] & (1 << (x % 64)) != 0
    }

    pub fn union_with(&mut self, other: &NodeSet) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    pub fn intersect_with(&mut self, other: &NodeSet) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w &= o;
        }
    }

    pub fn complement(&self) -> NodeSet {
        let mut out = NodeSet::empty(self.len);
        for (w, o) in out.words.iter_mut().zip(&self.words) {
            *w = !o;
        }
        out.clear_tail();
        out
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.words.iter().zip(&other.words).all(|(w, o)| w & !o == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|x| self.contains(*x))
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn clear_tail(&mut self) {
        if self.len % 64 != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << (self.len % 64)) - 1;
            }
        }
    }
}

impl FromIterator<usize> for NodeSet {
    /// Collects indices into a set sized by the maximum element; mainly for
    /// tests. Prefer `NodeSet::empty(graph.len())` + `insert` elsewhere.
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> NodeSet {
        let xs: Vec<usize> = iter.into_iter().collect();
        let len = xs.iter().max().map_or(0, |m| m + 1);
        let mut s = NodeSet::empty(len);
        for x in xs {
            s.insert(x);
        }
        s
    }
}

/// Assignment of node sets to free fixpoint variables.
pub type Valuation = BTreeMap<String, NodeSet>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("graph is a truncated prefix, not a complete execution graph")]
    TruncatedGraph,
    #[error("free variable {0} has no value in the valuation")]
    UnboundVariable(String),
    #[error("valuation for {0} sized {1}, graph has {2} nodes")]
    SizeMismatch(String, usize, usize),
}

struct Evaluator<'g> {
    g: &'g ExecutionGraph,
    /// successor tables indexed per `SuccessorType::ALL`
    succ: Vec<Vec<Option<usize>>>,
    /// free variables per subformula address, in sorted order
    free: HashMap<*const Formula, Vec<String>>,
    /// result per (subformula address, values of its free variables)
    memo: HashMap<(*const Formula, Vec<NodeSet>), NodeSet>,
}

impl<'g> Evaluator<'g> {
    fn new(g: &'g ExecutionGraph, root: &Formula) -> Evaluator<'g> {
        let succ = SuccessorType::ALL
            .iter()
            .map(|f| (0..g.len()).map(|x| g.graph_successor(x, *f)).collect())
            .collect();
        let mut free = HashMap::new();
        collect_free(root, &mut free);
        Evaluator { g, succ, free, memo: HashMap::new() }
    }

    fn succ_table(&self, f: SuccessorType) -> &Vec<Option<usize>> {
        let i = SuccessorType::ALL.iter().position(|t| *t == f).unwrap();
        &self.succ[i]
    }

    fn eval(&mut self, phi: &Formula, val: &Valuation) -> NodeSet {
        let key_vars = self.free[&(phi as *const Formula)].clone();
        let key: Vec<NodeSet> = key_vars.iter().map(|x| val[x].clone()).collect();
        if let Some(hit) = self.memo.get(&(phi as *const Formula, key.clone())) {
            return hit.clone();
        }
        let n = self.g.len();
        let out = match phi {
            Formula::Atom(p) => {
                let mut s = NodeSet::empty(n);
                for x in 0..n {
                    if self.g.labels[x].contains(p) {
                        s.insert(x);
                    }
                }
                s
            }
            Formula::Not(p) => self.eval(p, val).complement(),
            Formula::Or(a, b) => {
                let mut s = self.eval(a, val);
                s.union_with(&self.eval(b, val));
                s
            }
            Formula::And(a, b) => {
                let mut s = self.eval(a, val);
                s.intersect_with(&self.eval(b, val));
                s
            }
            Formula::Var(x) => val[x].clone(),
            Formula::Next(f, p) => {
                let inner = self.eval(p, val);
                let table = self.succ_table(*f);
                let mut s = NodeSet::empty(n);
                for x in 0..n {
                    if let Some(y) = table[x] {
                        if inner.contains(y) {
                            s.insert(x);
                        }
                    }
                }
                s
            }
            Formula::DualNext(f, p) => {
                // !<f>!phi: holds where the successor is undefined or satisfies phi
                let inner = self.eval(p, val);
                let table = self.succ_table(*f);
                let mut s = NodeSet::empty(n);
                for x in 0..n {
                    match table[x] {
                        Some(y) if !inner.contains(y) => {}
                        _ => s.insert(x),
                    }
                }
                s
            }
            Formula::Mu(x, p) => self.fixpoint(x, p, val, NodeSet::empty(n)),
            Formula::Nu(x, p) => self.fixpoint(x, p, val, NodeSet::full(n)),
        };
        self.memo.insert((phi as *const Formula, key), out.clone());
        out
    }

    /// Kleene iteration from `start`; converges within |V| rounds because the
    /// body is monotone on a finite powerset lattice.
    fn fixpoint(&mut self, x: &str, body: &Formula, val: &Valuation, start: NodeSet) -> NodeSet {
        let mut inner = val.clone();
        let mut cur = start;
        loop {
            inner.insert(x.to_string(), cur.clone());
            let next = self.eval(body, &inner);
            if next == cur {
                return cur;
            }
            cur = next;
        }
    }
}

fn collect_free(phi: &Formula, out: &mut HashMap<*const Formula, Vec<String>>) {
    out.insert(phi as *const Formula, free_variables(phi).into_iter().collect());
    match phi {
        Formula::Atom(_) | Formula::Var(_) => {}
        Formula::Not(p)
        | Formula::Next(_, p)
        | Formula::DualNext(_, p)
        | Formula::Mu(_, p)
        | Formula::Nu(_, p) => collect_free(p, out),
        Formula::Or(a, b) | Formula::And(a, b) => {
            collect_free(a, out);
            collect_free(b, out);
        }
    }
}

/// The set of nodes of `g` satisfying `phi` under `val`, computed directly
/// from the semantics with fixpoints as iteration limits.
pub fn evaluate(g: &ExecutionGraph, phi: &Formula, val: &Valuation) -> Result<NodeSet, OracleError> {
    if !g.complete {
        return Err(OracleError::TruncatedGraph);
    }
    for x in free_variables(phi) {
        match val.get(&x) {
            None => return Err(OracleError::UnboundVariable(x)),
            Some(s) if s.len() != g.len() => {
                return Err(OracleError::SizeMismatch(x, s.len(), g.len()))
            }
            Some(_) => {}
        }
    }
    let mut ev = Evaluator::new(g, phi);
    Ok(ev.eval(phi, val))
}

/// Whether the closed formula holds at the root of `g`.
pub fn models(g: &ExecutionGraph, phi: &Formula) -> Result<bool, OracleError> {
    debug_assert!(check_closed(phi).is_ok());
    Ok(evaluate(g, phi, &Valuation::new())?.contains(0))
}

/// Verdict of the brute-force model checking oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleVerdict {
    Holds,
    /// A complete execution graph of the model violating the formula.
    Violated(Box<ExecutionGraph>),
    /// Enumeration was cut off before a verdict was certain.
    Inconclusive,
}

/// Model checking by exhaustive enumeration: `phi` must hold on every
/// execution graph of `m`. Conclusive only when no graph was truncated
/// (barring an earlier violation, which is conclusive on its own).
pub fn dpn_models_oracle(
    m: &Dpn,
    phi: &Formula,
    max_nodes: usize,
    max_graphs: usize,
) -> Result<OracleVerdict, OracleError> {
    let graphs = enumerate_execution_graphs(m, max_nodes, max_graphs);
    let exhaustive = graphs.len() < max_graphs && graphs.iter().all(|g| g.complete);
    for g in graphs {
        if g.complete && !models(&g, phi)? {
            return Ok(OracleVerdict::Violated(Box::new(g)));
        }
    }
    if exhaustive {
        Ok(OracleVerdict::Holds)
    } else {
        Ok(OracleVerdict::Inconclusive)
    }
}

/// Property-test harness for monotonicity of fixpoint bodies: with `m1 ⊆ m2`,
/// evaluating under `x ↦ m1` must stay below evaluating under `x ↦ m2`.
pub fn check_monotonicity(
    g: &ExecutionGraph,
    phi: &Formula,
    val: &Valuation,
    x: &str,
    m1: &NodeSet,
    m2: &NodeSet,
) -> Result<bool, OracleError> {
    debug_assert!(m1.is_subset(m2));
    let mut v1 = val.clone();
    v1.insert(x.to_string(), m1.clone());
    let mut v2 = val.clone();
    v2.insert(x.to_string(), m2.clone());
    Ok(evaluate(g, phi, &v1)?.is_subset(&evaluate(g, phi, &v2)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpn::parse_dpn;
    use crate::exec::figure_graph;
    use crate::formula::{parse_formula, to_pnf};

    fn pnf(text: &str) -> Formula {
        to_pnf(&parse_formula(text).unwrap())
    }

    fn chain(props: &[&[&str]]) -> ExecutionGraph {
        // int chain with the given labels, last node terminal
        let mut g = ExecutionGraph::new_empty();
        for (i, ps) in props.iter().enumerate() {
            g.push_node(ps.iter().map(|p| p.to_string()).collect());
            if i > 0 {
                g.int_succ[i - 1] = Some(i);
            }
        }
        g.complete = true;
        g
    }

    #[test]
    fn true_expansion_is_all_nodes() {
        let g = chain(&[&[], &[], &[]]);
        let s = evaluate(&g, &pnf("true"), &Valuation::new()).unwrap();
        assert_eq!(s, NodeSet::full(3));
        assert!(evaluate(&g, &pnf("false"), &Valuation::new()).unwrap().is_empty());
    }

    #[test]
    fn finally_on_chain() {
        let g = chain(&[&[], &[], &["p"]]);
        let f = evaluate(&g, &pnf("F{g} p"), &Valuation::new()).unwrap();
        assert_eq!(f, NodeSet::full(3));
        let nx = evaluate(&g, &pnf("<g> p"), &Valuation::new()).unwrap();
        assert_eq!(nx.iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn guarded_mu_without_base_is_empty() {
        let g = chain(&[&[], &[], &[]]);
        let phi = Formula::mu("X", Formula::next(SuccessorType::Global, Formula::var("X")));
        assert!(evaluate(&g, &phi, &Valuation::new()).unwrap().is_empty());
    }

    #[test]
    fn models_examples() {
        let (g, _) = figure_graph();
        assert!(models(&g, &pnf("Gr true")).unwrap());
        let single = chain(&[&[]]);
        assert!(!models(&single, &pnf("<c> p")).unwrap());
        let mut two = ExecutionGraph::new_empty();
        two.push_node(Default::default());
        two.push_node(Default::default());
        two.ret_succ[0] = Some(1);
        two.complete = true;
        assert!(models(&two, &pnf("<g> true")).unwrap());
    }

    #[test]
    fn dual_next_holds_where_successor_missing() {
        let g = chain(&[&[], &["p"]]);
        let s = evaluate(&g, &pnf("[g] p"), &Valuation::new()).unwrap();
        // node 0's successor has p; node 1 has no successor at all
        assert_eq!(s, NodeSet::full(2));
        let t = evaluate(&g, &pnf("[g] q"), &Valuation::new()).unwrap();
        assert_eq!(t.iter().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn navigation_on_figure() {
        let (g, ids) = figure_graph();
        // abstract successor of n13 skips the inner call and lands on n19
        let s = evaluate(&g, &pnf("<a> n19"), &Valuation::new()).unwrap();
        assert!(s.contains(ids["n13"]));
        // the spawned thread's parent chain reaches the main thread
        let p = evaluate(&g, &pnf("<p> n12"), &Valuation::new()).unwrap();
        assert!(p.contains(ids["n21"]));
        // Fr reaches into spawned threads
        assert!(models(&g, &pnf("Fr n25")).unwrap());
        assert!(!models(&g, &pnf("F{g} n25")).unwrap());
    }

    #[test]
    fn mu_nu_duality_on_figure() {
        let (g, _) = figure_graph();
        let n = g.len();
        for (nu_text, mu_text) in [
            ("nu X. n13 | <g>X", "mu X. !n13 & [g]X"),
            ("nu X. [a] X", "mu X. <a> X"),
        ] {
            let nu_set = evaluate(&g, &pnf(nu_text), &Valuation::new()).unwrap();
            let mu_set = evaluate(&g, &pnf(mu_text), &Valuation::new()).unwrap();
            assert_eq!(nu_set, mu_set.complement(), "{nu_text} vs {mu_text}");
            assert_eq!(nu_set.len(), n);
        }
    }

    #[test]
    fn refuses_truncated_graphs() {
        let m = parse_dpn("dpn { locations: s0; stack: g0; init: s0 g0; rule s0 g0 -> s0 g0 }")
            .unwrap();
        let gs = enumerate_execution_graphs(&m, 5, 5);
        assert!(!gs[0].complete);
        assert_eq!(
            evaluate(&gs[0], &pnf("true"), &Valuation::new()),
            Err(OracleError::TruncatedGraph)
        );
    }

    #[test]
    fn oracle_verdicts() {
        let m = parse_dpn(
            "dpn { locations: s0 s1 s2; stack: g0 g1 g2; init: s0 g0; \
             rule s0 g0 -> s1 g1; rule s0 g0 -> s2 g2; \
             label s1 g1 { p }; label s2 g2 { p } }",
        )
        .unwrap();
        assert_eq!(
            dpn_models_oracle(&m, &pnf("<g> p"), 50, 50).unwrap(),
            OracleVerdict::Holds
        );
        match dpn_models_oracle(&m, &pnf("<g> (p & q)"), 50, 50).unwrap() {
            OracleVerdict::Violated(g) => assert!(g.complete),
            v => panic!("expected violation, got {v:?}"),
        }
        let looping =
            parse_dpn("dpn { locations: s0; stack: g0; init: s0 g0; rule s0 g0 -> s0 g0 }")
                .unwrap();
        assert_eq!(
            dpn_models_oracle(&looping, &pnf("true"), 5, 5).unwrap(),
            OracleVerdict::Inconclusive
        );
    }

    #[test]
    fn monotonicity_spot_checks() {
        let g = chain(&[&[], &[], &[]]);
        let mut m1 = NodeSet::empty(3);
        m1.insert(1);
        let mut m2 = m1.clone();
        m2.insert(2);
        for phi in [
            Formula::var("X"),
            Formula::next(SuccessorType::Global, Formula::var("X")),
            Formula::mu(
                "Y",
                Formula::or(
                    Formula::var("X"),
                    Formula::next(SuccessorType::Global, Formula::var("Y")),
                ),
            ),
        ] {
            assert!(check_monotonicity(&g, &phi, &Valuation::new(), "X", &m1, &m2).unwrap());
        }
    }
}
