//! Execution graphs of DPNs, their binary execution-tree encoding, and the
//! six navigation successor functions on both representations.

use crate::dpn::{Configuration, StepKind};
use crate::formula::SuccessorType;
use std::collections::BTreeSet;
use std::fmt;

mod enumerate;
mod tree;
pub use enumerate::enumerate_execution_graphs;
pub use tree::{
    graph_from_tree, parse_tree_text, tree_representation, tree_successor_finite,
    tree_successor_regular, unfold_regular, ExecutionTree, GraphTreeMap, NodeKind, RegularTree,
    TreeError, TreeLabel, TreePath,
};

/// Move kinds of graph edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Move {
    Int,
    Call,
    Ret,
    Spawn,
}

impl Move {
    pub const ALL: [Move; 4] = [Move::Int, Move::Call, Move::Ret, Move::Spawn];

    pub fn name(self) -> &'static str {
        match self {
            Move::Int => "int",
            Move::Call => "call",
            Move::Ret => "ret",
            Move::Spawn => "spawn",
        }
    }
}

impl From<StepKind> for Move {
    fn from(k: StepKind) -> Move {
        match k {
            StepKind::Int => Move::Int,
            StepKind::Call => Move::Call,
            StepKind::Ret => Move::Ret,
            StepKind::Spawn => Move::Spawn,
        }
    }
}

/// A finite execution graph (or a truncated prefix of one). Node 0 is the
/// root; nodes carry stable integer identities in BFS discovery order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionGraph {
    pub labels: Vec<BTreeSet<String>>,
    pub int_succ: Vec<Option<usize>>,
    pub call_succ: Vec<Option<usize>>,
    pub ret_succ: Vec<Option<usize>>,
    pub spawn_succ: Vec<Option<usize>>,
    /// `nesting[x] = Some(y)` iff x nests to y (x's call matches the return
    /// ending just before y).
    pub nesting: Vec<Option<usize>>,
    /// The assignment `as` when the graph was generated from a DPN.
    pub configs: Option<Vec<Configuration>>,
    /// Whether this is a full member of the DPN's graph semantics or a
    /// truncated prefix.
    pub complete: bool,
}

/// A violated validity condition, with a witness node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionViolation {
    /// 1-5 per the execution-graph definition.
    pub condition: u8,
    pub node: usize,
    pub message: String,
}

impl fmt::Display for ConditionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "condition {} violated at node {}: {}", self.condition, self.node, self.message)
    }
}

impl ExecutionGraph {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn new_empty() -> ExecutionGraph {
        ExecutionGraph {
            labels: Vec::new(),
            int_succ: Vec::new(),
            call_succ: Vec::new(),
            ret_succ: Vec::new(),
            spawn_succ: Vec::new(),
            nesting: Vec::new(),
            configs: None,
            complete: true,
        }
    }

    pub fn push_node(&mut self, label: BTreeSet<String>) -> usize {
        self.labels.push(label);
        self.int_succ.push(None);
        self.call_succ.push(None);
        self.ret_succ.push(None);
        self.spawn_succ.push(None);
        self.nesting.push(None);
        self.labels.len() - 1
    }

    pub fn succ_edges(&self, x: usize) -> impl Iterator<Item = (Move, usize)> + '_ {
        [
            (Move::Int, self.int_succ[x]),
            (Move::Call, self.call_succ[x]),
            (Move::Ret, self.ret_succ[x]),
            (Move::Spawn, self.spawn_succ[x]),
        ]
        .into_iter()
        .filter_map(|(m, t)| t.map(|t| (m, t)))
    }

    /// The unique move-predecessor of each node (when condition 1 holds).
    pub fn predecessors(&self) -> Vec<Option<(Move, usize)>> {
        let mut pred = vec![None; self.len()];
        for x in 0..self.len() {
            for (m, y) in self.succ_edges(x) {
                if pred[y].is_none() {
                    pred[y] = Some((m, x));
                }
            }
        }
        pred
    }

    /// The global successor: the int/call/ret successor, if any.
    pub fn global_succ(&self, x: usize) -> Option<usize> {
        self.int_succ[x].or(self.call_succ[x]).or(self.ret_succ[x])
    }

    /// Recompute the nesting relation from the move edges: for each call node
    /// the target of the minimal balanced spawn-free path, if it exists.
    pub fn derive_nesting(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.len()];
        for x in 0..self.len() {
            if self.call_succ[x].is_none() {
                continue;
            }
            // Walk the thread chain counting call/ret balance.
            let mut cur = x;
            let mut balance = 0i64;
            loop {
                let step = if let Some(y) = self.call_succ[cur] {
                    balance += 1;
                    Some(y)
                } else if let Some(y) = self.ret_succ[cur] {
                    balance -= 1;
                    Some(y)
                } else {
                    self.int_succ[cur]
                };
                match step {
                    Some(y) if balance == 0 => {
                        out[x] = Some(y);
                        break;
                    }
                    Some(y) => cur = y,
                    None => break,
                }
            }
        }
        out
    }

    /// The six navigation successor functions on graph nodes.
    pub fn graph_successor(&self, x: usize, f: SuccessorType) -> Option<usize> {
        match f {
            SuccessorType::Global => self.global_succ(x),
            SuccessorType::Up => {
                let pred = self.predecessors();
                match pred[x] {
                    Some((Move::Int | Move::Call | Move::Ret, y)) => Some(y),
                    _ => None,
                }
            }
            SuccessorType::Abstract => self.nesting[x].or(self.int_succ[x]),
            SuccessorType::Child => self.spawn_succ[x],
            SuccessorType::Caller => self.callers()[x],
            SuccessorType::Parent => self.parents()[x],
        }
    }

    /// The caller of every node: y is the caller of x if y has a
    /// call-successor y' and x is reachable from y' by abstract successors.
    pub fn callers(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.len()];
        for y in 0..self.len() {
            let Some(start) = self.call_succ[y] else { continue };
            let mut z = Some(start);
            while let Some(cur) = z {
                out[cur] = Some(y);
                z = self.nesting[cur].or(self.int_succ[cur]);
            }
        }
        out
    }

    /// The parent of every node: y is the parent of x if y has a
    /// spawn-successor z and a spawn-free path leads from z to x.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.len()];
        for y in 0..self.len() {
            let Some(z) = self.spawn_succ[y] else { continue };
            // int/call/ret closure from z
            let mut stack = vec![z];
            while let Some(cur) = stack.pop() {
                if out[cur].is_some() {
                    continue;
                }
                out[cur] = Some(y);
                for (m, t) in self.succ_edges(cur) {
                    if m != Move::Spawn {
                        stack.push(t);
                    }
                }
            }
        }
        out
    }

    /// Check the five execution-graph conditions. Condition 5 is only checked
    /// when `check_nesting` is set (it recomputes the relation and compares).
    /// On truncated graphs conditions 4 and 5 are restricted to explored
    /// regions.
    pub fn validate(&self, check_nesting: bool) -> Result<(), Vec<ConditionViolation>> {
        let mut errs = Vec::new();
        let n = self.len();
        if n == 0 {
            return Ok(());
        }
        // 1: unique move-predecessor for everything but the root
        let mut pred_count = vec![0usize; n];
        for x in 0..n {
            for (_, y) in self.succ_edges(x) {
                pred_count[y] += 1;
            }
        }
        if pred_count[0] != 0 {
            errs.push(ConditionViolation {
                condition: 1,
                node: 0,
                message: "root has a predecessor".to_string(),
            });
        }
        for x in 1..n {
            if pred_count[x] != 1 {
                errs.push(ConditionViolation {
                    condition: 1,
                    node: x,
                    message: format!("{} move-predecessors", pred_count[x]),
                });
            }
        }
        // 2: reachability from the root
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for (_, y) in self.succ_edges(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        for x in 0..n {
            if !seen[x] {
                errs.push(ConditionViolation {
                    condition: 2,
                    node: x,
                    message: "unreachable from the root".to_string(),
                });
            }
        }
        // 3: successor shapes
        for x in 0..n {
            let (i, c, r, s) = (
                self.int_succ[x].is_some(),
                self.call_succ[x].is_some(),
                self.ret_succ[x].is_some(),
                self.spawn_succ[x].is_some(),
            );
            let ok = matches!((i, c, r, s), (true, false, false, _) | (false, true, false, false)
                | (false, false, true, false) | (false, false, false, false));
            if !ok {
                errs.push(ConditionViolation {
                    condition: 3,
                    node: x,
                    message: format!("successor shape int={i} call={c} ret={r} spawn={s}"),
                });
            }
        }
        // 4: call/ret balance never negative on spawn-free paths from the
        // root or a spawn target. One exception: a thread's initial stack is a
        // single frame, so its final move may be a ret popping that frame;
        // then the balance ends at -1 and the target must be terminal (the
        // configuration below is the bottom marker alone, which is stuck).
        let mut starts = vec![0usize];
        for x in 0..n {
            if let Some(z) = self.spawn_succ[x] {
                starts.push(z);
            }
        }
        for start in starts {
            let mut cur = start;
            let mut balance = 0i64;
            loop {
                if self.call_succ[cur].is_some() {
                    balance += 1;
                } else if self.ret_succ[cur].is_some() {
                    balance -= 1;
                }
                if balance < 0 {
                    let target = self.ret_succ[cur].unwrap();
                    if balance == -1
                        && self.global_succ(target).is_none()
                        && self.spawn_succ[target].is_none()
                    {
                        break;
                    }
                    errs.push(ConditionViolation {
                        condition: 4,
                        node: cur,
                        message: "more returns than calls on a spawn-free path".to_string(),
                    });
                    break;
                }
                match self.global_succ(cur) {
                    Some(y) => cur = y,
                    None => break,
                }
            }
        }
        // 5: nesting matches the minimal balanced-path characterization
        if check_nesting {
            let derived = self.derive_nesting();
            for x in 0..n {
                let expect = if self.complete {
                    derived[x]
                } else {
                    // in truncated graphs only check edges whose balanced
                    // region was fully explored
                    match (self.nesting[x], derived[x]) {
                        (_, Some(y)) => Some(y),
                        (None, None) => None,
                        (Some(_), None) => continue,
                    }
                };
                if self.nesting[x] != expect {
                    errs.push(ConditionViolation {
                        condition: 5,
                        node: x,
                        message: format!("nesting edge {:?}, expected {:?}", self.nesting[x], expect),
                    });
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// DOT export: solid edges per move (labelled), dashed edges for nesting.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph execution {\n  rankdir=LR;\n");
        for x in 0..self.len() {
            let props = self.labels[x].iter().cloned().collect::<Vec<_>>().join(",");
            let extra = match &self.configs {
                Some(cfgs) => format!("\\n{}", cfgs[x]),
                None => String::new(),
            };
            s.push_str(&format!("  n{x} [label=\"{x}: {{{props}}}{extra}\"];\n"));
        }
        for x in 0..self.len() {
            for (m, y) in self.succ_edges(x) {
                let style = match m {
                    Move::Int => "solid",
                    Move::Call => "bold",
                    Move::Ret => "solid",
                    Move::Spawn => "dotted",
                };
                s.push_str(&format!("  n{x} -> n{y} [label=\"{}\", style={style}];\n", m.name()));
            }
            if let Some(y) = self.nesting[x] {
                s.push_str(&format!("  n{x} -> n{y} [style=dashed, constraint=false];\n"));
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Build the figure-style example graph used across the test-suite: a main
/// thread with a nested call and two spawned threads, one of which performs
/// its own call/return.
#[cfg(test)]
pub fn figure_graph() -> (ExecutionGraph, std::collections::BTreeMap<&'static str, usize>) {
    // Main thread: n11 ->int n12 ->int n13 ->call n14 ->call n15 ->ret n16
    //              ->int n17 ->int n18 ->ret n19 ->int n1a
    // n12 ->spawn n21; n21 ->int n22 ->call n23 ->ret n24 ->int n25
    // n17 ->spawn n31; n31 ->int n32 ->int n33 ->int n34
    // Nesting: n14~>n16, n13~>n19, n22~>n24
    let names = [
        "n11", "n12", "n13", "n14", "n15", "n16", "n17", "n18", "n19", "n1a", "n21", "n22",
        "n23", "n24", "n25", "n31", "n32", "n33", "n34",
    ];
    let mut g = ExecutionGraph::new_empty();
    let mut idx = std::collections::BTreeMap::new();
    for name in names {
        let i = g.push_node(BTreeSet::from([name.to_string()]));
        idx.insert(name, i);
    }
    let mut edge = |m: Move, a: &str, b: &str| {
        let (x, y) = (idx[a], idx[b]);
        match m {
            Move::Int => g.int_succ[x] = Some(y),
            Move::Call => g.call_succ[x] = Some(y),
            Move::Ret => g.ret_succ[x] = Some(y),
            Move::Spawn => g.spawn_succ[x] = Some(y),
        }
    };
    edge(Move::Int, "n11", "n12");
    edge(Move::Int, "n12", "n13");
    edge(Move::Spawn, "n12", "n21");
    edge(Move::Call, "n13", "n14");
    edge(Move::Call, "n14", "n15");
    edge(Move::Ret, "n15", "n16");
    edge(Move::Int, "n16", "n17");
    edge(Move::Int, "n17", "n18");
    edge(Move::Spawn, "n17", "n31");
    edge(Move::Ret, "n18", "n19");
    edge(Move::Int, "n19", "n1a");
    edge(Move::Int, "n21", "n22");
    edge(Move::Call, "n22", "n23");
    edge(Move::Ret, "n23", "n24");
    edge(Move::Int, "n24", "n25");
    edge(Move::Int, "n31", "n32");
    edge(Move::Int, "n32", "n33");
    edge(Move::Int, "n33", "n34");
    g.nesting[idx["n14"]] = Some(idx["n16"]);
    g.nesting[idx["n13"]] = Some(idx["n19"]);
    g.nesting[idx["n22"]] = Some(idx["n24"]);
    (g, idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_graph_is_valid() {
        let (g, _) = figure_graph();
        assert_eq!(g.validate(true), Ok(()));
    }

    #[test]
    fn removed_nesting_edge_detected() {
        let (mut g, idx) = figure_graph();
        g.nesting[idx["n14"]] = None;
        let errs = g.validate(true).unwrap_err();
        assert!(errs.iter().any(|e| e.condition == 5 && e.node == idx["n14"]));
    }

    #[test]
    fn two_int_successors_detected() {
        let mut g = ExecutionGraph::new_empty();
        let a = g.push_node(BTreeSet::new());
        let b = g.push_node(BTreeSet::new());
        let c = g.push_node(BTreeSet::new());
        g.int_succ[a] = Some(b);
        g.call_succ[a] = Some(c);
        let errs = g.validate(true).unwrap_err();
        assert!(errs.iter().any(|e| e.condition == 3 && e.node == a));
    }

    #[test]
    fn derive_nesting_on_figure() {
        let (g, idx) = figure_graph();
        let derived = g.derive_nesting();
        assert_eq!(derived[idx["n14"]], Some(idx["n16"]));
        assert_eq!(derived[idx["n13"]], Some(idx["n19"]));
        assert_eq!(derived[idx["n22"]], Some(idx["n24"]));
        assert_eq!(derived.iter().filter(|d| d.is_some()).count(), 3);
    }

    #[test]
    fn derive_nesting_unmatched_call() {
        // call; end - no nesting edge
        let mut g = ExecutionGraph::new_empty();
        let a = g.push_node(BTreeSet::new());
        let b = g.push_node(BTreeSet::new());
        g.call_succ[a] = Some(b);
        assert_eq!(g.derive_nesting(), vec![None, None]);
        // call; ret chain gets one edge
        let mut g = ExecutionGraph::new_empty();
        let a = g.push_node(BTreeSet::new());
        let b = g.push_node(BTreeSet::new());
        let c = g.push_node(BTreeSet::new());
        g.call_succ[a] = Some(b);
        g.ret_succ[b] = Some(c);
        assert_eq!(g.derive_nesting(), vec![Some(c), None, None]);
    }

    #[test]
    fn figure_successors() {
        let (g, i) = figure_graph();
        use SuccessorType::*;
        // abstract successors skip the nested call
        assert_eq!(g.graph_successor(i["n13"], Abstract), Some(i["n19"]));
        assert_eq!(g.graph_successor(i["n14"], Abstract), Some(i["n16"]));
        // callers
        assert_eq!(g.graph_successor(i["n15"], Caller), Some(i["n14"]));
        assert_eq!(g.graph_successor(i["n14"], Caller), Some(i["n13"]));
        assert_eq!(g.graph_successor(i["n16"], Caller), Some(i["n13"]));
        assert_eq!(g.graph_successor(i["n17"], Caller), Some(i["n13"]));
        assert_eq!(g.graph_successor(i["n18"], Caller), Some(i["n13"]));
        assert_eq!(g.graph_successor(i["n13"], Caller), None);
        // parents and children
        for x in ["n21", "n22", "n23", "n24", "n25"] {
            assert_eq!(g.graph_successor(i[x], Parent), Some(i["n12"]), "{x}");
        }
        assert_eq!(g.graph_successor(i["n12"], Child), Some(i["n21"]));
        assert_eq!(g.graph_successor(i["n11"], Child), None);
        // global predecessor ignores spawn edges
        assert_eq!(g.graph_successor(i["n21"], Up), None);
        assert_eq!(g.graph_successor(i["n16"], Up), Some(i["n15"]));
        assert_eq!(g.graph_successor(i["n11"], Up), None);
    }
}
