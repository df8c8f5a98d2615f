//! Binary execution trees: the tree representation of execution graphs, its
//! inverse, regular trees, and the navigation successors on tree nodes.

use super::{ExecutionGraph, Move};
use crate::formula::SuccessorType;
use std::collections::BTreeSet;
use std::fmt;

/// The `d` component of a tree label: the successor shape of the graph node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Int,
    Call,
    CallRet,
    Spawn,
    Ret,
    End,
}

impl NodeKind {
    pub const ALL: [NodeKind; 6] =
        [NodeKind::Int, NodeKind::Call, NodeKind::CallRet, NodeKind::Spawn, NodeKind::Ret, NodeKind::End];

    pub fn arity(self) -> usize {
        match self {
            NodeKind::Ret | NodeKind::End => 0,
            NodeKind::Int | NodeKind::Call => 1,
            NodeKind::CallRet | NodeKind::Spawn => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Int => "int",
            NodeKind::Call => "call",
            NodeKind::CallRet => "callRet",
            NodeKind::Spawn => "spawn",
            NodeKind::Ret => "ret",
            NodeKind::End => "end",
        }
    }

    pub fn from_name(s: &str) -> Option<NodeKind> {
        Some(match s {
            "int" => NodeKind::Int,
            "call" => NodeKind::Call,
            "callRet" => NodeKind::CallRet,
            "spawn" => NodeKind::Spawn,
            "ret" => NodeKind::Ret,
            "end" => NodeKind::End,
            _ => return None,
        })
    }
}

/// A tree label `(props, d, p)`: propositions, successor shape, and the move
/// type of the predecessor edge (`None` at the root).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TreeLabel {
    pub props: BTreeSet<String>,
    pub kind: NodeKind,
    pub pred: Option<Move>,
}

impl TreeLabel {
    pub fn arity(&self) -> usize {
        self.kind.arity()
    }
}

impl fmt::Display for TreeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let props = self.props.iter().cloned().collect::<Vec<_>>().join(" ");
        let pred = self.pred.map(|m| m.name()).unwrap_or("bot");
        write!(f, "({props} | {} | {pred})", self.kind.name())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("node {0}: {1}")]
    Node(usize, String),
    #[error("depth cap exceeded during tree walk")]
    DepthCap,
    #[error("line {0}: {1}")]
    Parse(usize, String),
}

/// A finite `(Sigma_ET, ar)`-labelled binary tree. Node 0 is the root; a
/// node's child count always equals the arity of its label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTree {
    pub labels: Vec<TreeLabel>,
    pub children: Vec<[Option<usize>; 2]>,
    pub parent: Vec<Option<(usize, u8)>>,
}

impl ExecutionTree {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// The 0/1 path of a node from the root.
    pub fn path_of(&self, mut node: usize) -> Vec<u8> {
        let mut dirs = Vec::new();
        while let Some((p, d)) = self.parent[node] {
            dirs.push(d);
            node = p;
        }
        dirs.reverse();
        dirs
    }

    pub fn node_at(&self, path: &[u8]) -> Option<usize> {
        let mut cur = 0usize;
        for &d in path {
            cur = self.children[cur][d as usize]?;
        }
        Some(cur)
    }

    /// All propositions mentioned anywhere in the tree.
    pub fn propositions(&self) -> BTreeSet<String> {
        self.labels.iter().flat_map(|l| l.props.iter().cloned()).collect()
    }

    /// One line per node: `id (props | d | p) children...`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, l) in self.labels.iter().enumerate() {
            s.push_str(&format!("{i} {l}"));
            for c in self.children[i].iter().flatten() {
                s.push_str(&format!(" {c}"));
            }
            s.push('\n');
        }
        s
    }
}

/// A regular tree: finitely many classes, each with a label and one child
/// class per direction below its arity. Unfolding from the root class yields
/// the (possibly infinite) tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegularTree {
    pub labels: Vec<TreeLabel>,
    pub children: Vec<Vec<usize>>,
    pub root: usize,
}

impl RegularTree {
    pub fn class_at(&self, path: &[u8]) -> Option<usize> {
        let mut cur = self.root;
        for &d in path {
            cur = *self.children[cur].get(d as usize)?;
        }
        Some(cur)
    }

    pub fn propositions(&self) -> BTreeSet<String> {
        self.labels.iter().flat_map(|l| l.props.iter().cloned()).collect()
    }

    /// Check arity consistency and reachability of all classes.
    pub fn validate(&self) -> Result<(), TreeError> {
        for (i, l) in self.labels.iter().enumerate() {
            if self.children[i].len() != l.arity() {
                return Err(TreeError::Node(i, format!(
                    "{} children but label arity {}",
                    self.children[i].len(),
                    l.arity()
                )));
            }
            for &c in &self.children[i] {
                if c >= self.labels.len() {
                    return Err(TreeError::Node(i, format!("child class {c} out of range")));
                }
            }
        }
        let mut seen = vec![false; self.labels.len()];
        let mut stack = vec![self.root];
        seen[self.root] = true;
        while let Some(x) = stack.pop() {
            for &c in &self.children[x] {
                if !seen[c] {
                    seen[c] = true;
                    stack.push(c);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(TreeError::Node(i, "class unreachable from the root".to_string()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("root {}\n", self.root);
        for (i, l) in self.labels.iter().enumerate() {
            s.push_str(&format!("{i} {l}"));
            for c in &self.children[i] {
                s.push_str(&format!(" {c}"));
            }
            s.push('\n');
        }
        s
    }
}

impl From<&ExecutionTree> for RegularTree {
    fn from(t: &ExecutionTree) -> RegularTree {
        RegularTree {
            labels: t.labels.clone(),
            children: t
                .children
                .iter()
                .map(|cs| cs.iter().flatten().copied().collect())
                .collect(),
            root: 0,
        }
    }
}

/// Unfold a regular tree into a finite execution tree; errors with
/// [`TreeError::DepthCap`] when the unfolding exceeds `depth_cap` (the tree is
/// infinite or deeper than the cap).
pub fn unfold_regular(t: &RegularTree, depth_cap: usize) -> Result<ExecutionTree, TreeError> {
    let mut out = ExecutionTree { labels: Vec::new(), children: Vec::new(), parent: Vec::new() };
    fn go(
        t: &RegularTree,
        class: usize,
        parent: Option<(usize, u8)>,
        depth: usize,
        cap: usize,
        out: &mut ExecutionTree,
    ) -> Result<usize, TreeError> {
        if depth > cap {
            return Err(TreeError::DepthCap);
        }
        let me = out.labels.len();
        out.labels.push(t.labels[class].clone());
        out.children.push([None, None]);
        out.parent.push(parent);
        for (d, &c) in t.children[class].iter().enumerate() {
            let child = go(t, c, Some((me, d as u8)), depth + 1, cap, out)?;
            out.children[me][d] = Some(child);
        }
        Ok(me)
    }
    go(t, t.root, None, 0, depth_cap, &mut out)?;
    Ok(out)
}

/// Parse the line-based tree format. A leading `root N` line makes the result
/// a regular tree rooted at class N; otherwise node 0 is the root and the
/// input must form a finite tree.
pub fn parse_tree_text(text: &str) -> Result<RegularTree, TreeError> {
    let mut root = 0usize;
    let mut entries: Vec<(usize, TreeLabel, Vec<usize>)> = Vec::new();
    for (ln0, line) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("root ") {
            root = rest
                .trim()
                .parse()
                .map_err(|_| TreeError::Parse(ln, "bad root id".to_string()))?;
            continue;
        }
        // id ( props... | d | p ) children...
        let open = line.find('(').ok_or_else(|| TreeError::Parse(ln, "missing '('".to_string()))?;
        let close = line.rfind(')').ok_or_else(|| TreeError::Parse(ln, "missing ')'".to_string()))?;
        let id: usize = line[..open]
            .trim()
            .parse()
            .map_err(|_| TreeError::Parse(ln, "bad node id".to_string()))?;
        let inner = &line[open + 1..close];
        let parts: Vec<&str> = inner.split('|').collect();
        if parts.len() != 3 {
            return Err(TreeError::Parse(ln, "label needs 'props | d | p'".to_string()));
        }
        let props: BTreeSet<String> = parts[0].split_whitespace().map(str::to_string).collect();
        let kind = NodeKind::from_name(parts[1].trim())
            .ok_or_else(|| TreeError::Parse(ln, format!("unknown d '{}'", parts[1].trim())))?;
        let pred = match parts[2].trim() {
            "bot" => None,
            s => Some(match s {
                "int" => Move::Int,
                "call" => Move::Call,
                "ret" => Move::Ret,
                "spawn" => Move::Spawn,
                _ => return Err(TreeError::Parse(ln, format!("unknown p '{s}'"))),
            }),
        };
        let children: Vec<usize> = line[close + 1..]
            .split_whitespace()
            .map(|w| w.parse().map_err(|_| TreeError::Parse(ln, format!("bad child id '{w}'"))))
            .collect::<Result<_, _>>()?;
        entries.push((id, TreeLabel { props, kind, pred }, children));
    }
    let n = entries.iter().map(|(i, _, _)| i + 1).max().unwrap_or(0);
    if entries.len() != n {
        return Err(TreeError::Parse(0, "node ids must be dense 0..n".to_string()));
    }
    let mut labels = vec![None; n];
    let mut children = vec![Vec::new(); n];
    for (i, l, cs) in entries {
        if labels[i].is_some() {
            return Err(TreeError::Parse(0, format!("node {i} defined twice")));
        }
        labels[i] = Some(l);
        children[i] = cs;
    }
    let t = RegularTree {
        labels: labels.into_iter().map(Option::unwrap).collect(),
        children,
        root,
    };
    t.validate()?;
    Ok(t)
}

/// Bijection between graph nodes and tree nodes. Node indices coincide; the
/// tree path of graph node x is `tree.path_of(x)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTreeMap {
    /// Graph node -> tree node (identity here, kept explicit for clarity).
    pub to_tree: Vec<usize>,
}

/// Encode a finite complete execution graph as its execution tree.
pub fn tree_representation(g: &ExecutionGraph) -> Result<(ExecutionTree, GraphTreeMap), TreeError> {
    let n = g.len();
    let pred = g.predecessors();
    let mut labels = Vec::with_capacity(n);
    let mut children = vec![[None, None]; n];
    for x in 0..n {
        let kind = match (
            g.int_succ[x].is_some(),
            g.call_succ[x].is_some(),
            g.ret_succ[x].is_some(),
            g.spawn_succ[x].is_some(),
            g.nesting[x].is_some(),
        ) {
            (true, _, _, true, _) => NodeKind::Spawn,
            (true, _, _, false, _) => NodeKind::Int,
            (_, true, _, _, true) => NodeKind::CallRet,
            (_, true, _, _, false) => NodeKind::Call,
            (_, _, true, _, _) => NodeKind::Ret,
            _ => NodeKind::End,
        };
        labels.push(TreeLabel { props: g.labels[x].clone(), kind, pred: pred[x].map(|(m, _)| m) });
        // child 0: int or call successor; child 1: spawn successor or nesting
        children[x][0] = g.int_succ[x].or(g.call_succ[x]);
        children[x][1] = g.spawn_succ[x].or(g.nesting[x]);
    }
    // Tree parents: a ret-predecessor node is attached below its nesting
    // predecessor, everything else below its move predecessor.
    let mut parent = vec![None; n];
    for x in 0..n {
        for (d, c) in children[x].iter().enumerate() {
            if let Some(c) = *c {
                if parent[c].is_some() {
                    return Err(TreeError::Node(c, "two tree parents".to_string()));
                }
                parent[c] = Some((x, d as u8));
            }
        }
    }
    for x in 1..n {
        if parent[x].is_none() {
            return Err(TreeError::Node(
                x,
                "no tree parent (unmatched return target?)".to_string(),
            ));
        }
    }
    Ok((ExecutionTree { labels, children, parent }, GraphTreeMap { to_tree: (0..n).collect() }))
}

/// Rebuild the execution graph encoded by a finite execution tree; the
/// inverse of [`tree_representation`]. Rejects trees that are not the
/// representation of any valid execution graph.
pub fn graph_from_tree(t: &ExecutionTree) -> Result<ExecutionGraph, TreeError> {
    let n = t.len();
    let mut g = ExecutionGraph::new_empty();
    for x in 0..n {
        g.push_node(t.labels[x].props.clone());
    }
    if n == 0 {
        return Ok(g);
    }
    if t.labels[0].pred.is_some() {
        return Err(TreeError::Node(0, "root must have p = bot".to_string()));
    }
    let mut ret_matched = vec![false; n];
    for x in 0..n {
        let expect_pred = |c: usize, m: Move| -> Result<(), TreeError> {
            if t.labels[c].pred != Some(m) {
                Err(TreeError::Node(c, format!(
                    "p component {:?} does not match {} predecessor",
                    t.labels[c].pred,
                    m.name()
                )))
            } else {
                Ok(())
            }
        };
        match t.labels[x].kind {
            NodeKind::Int => {
                let c = t.children[x][0].unwrap();
                expect_pred(c, Move::Int)?;
                g.int_succ[x] = Some(c);
            }
            NodeKind::Spawn => {
                let (c0, c1) = (t.children[x][0].unwrap(), t.children[x][1].unwrap());
                expect_pred(c0, Move::Int)?;
                expect_pred(c1, Move::Spawn)?;
                g.int_succ[x] = Some(c0);
                g.spawn_succ[x] = Some(c1);
            }
            NodeKind::Call => {
                let c = t.children[x][0].unwrap();
                expect_pred(c, Move::Call)?;
                g.call_succ[x] = Some(c);
            }
            NodeKind::CallRet => {
                let (c0, c1) = (t.children[x][0].unwrap(), t.children[x][1].unwrap());
                expect_pred(c0, Move::Call)?;
                expect_pred(c1, Move::Ret)?;
                g.call_succ[x] = Some(c0);
                g.nesting[x] = Some(c1);
                // locate the matching return: the {int,ret} leaf of the
                // called frame
                let mut cur = c0;
                let r = loop {
                    match t.labels[cur].kind {
                        NodeKind::Int | NodeKind::Spawn => cur = t.children[cur][0].unwrap(),
                        NodeKind::CallRet => cur = t.children[cur][1].unwrap(),
                        NodeKind::Ret => break cur,
                        NodeKind::Call | NodeKind::End => {
                            return Err(TreeError::Node(x, format!(
                                "callRet frame reaches {} without returning",
                                t.labels[cur].kind.name()
                            )))
                        }
                    }
                };
                if ret_matched[r] {
                    return Err(TreeError::Node(r, "return matched twice".to_string()));
                }
                ret_matched[r] = true;
                g.ret_succ[r] = Some(c1);
            }
            NodeKind::Ret | NodeKind::End => {}
        }
    }
    for x in 0..n {
        if t.labels[x].kind == NodeKind::Ret && !ret_matched[x] {
            return Err(TreeError::Node(x, "return without an enclosing callRet".to_string()));
        }
    }
    g.complete = true;
    Ok(g)
}

/// A node handle in a (possibly regular) tree: the direction path from the
/// root.
pub type TreePath = Vec<u8>;

trait TreeView {
    fn label_at(&self, path: &[u8]) -> Option<&TreeLabel>;
}

impl TreeView for ExecutionTree {
    fn label_at(&self, path: &[u8]) -> Option<&TreeLabel> {
        self.node_at(path).map(|n| &self.labels[n])
    }
}

impl TreeView for RegularTree {
    fn label_at(&self, path: &[u8]) -> Option<&TreeLabel> {
        self.class_at(path).map(|c| &self.labels[c])
    }
}

fn successor_path<V: TreeView>(
    v: &V,
    path: &[u8],
    f: SuccessorType,
    cap: usize,
) -> Result<Option<TreePath>, TreeError> {
    let Some(label) = v.label_at(path) else {
        return Ok(None);
    };
    let kind = label.kind;
    let pred = label.pred;
    let child = |d: u8| -> TreePath {
        let mut p = path.to_vec();
        p.push(d);
        p
    };
    let parent = || -> TreePath { path[..path.len() - 1].to_vec() };
    Ok(match f {
        SuccessorType::Abstract => match kind {
            NodeKind::Int | NodeKind::Spawn => Some(child(0)),
            NodeKind::CallRet => Some(child(1)),
            _ => None,
        },
        SuccessorType::Child => match kind {
            NodeKind::Spawn => Some(child(1)),
            _ => None,
        },
        SuccessorType::Caller => match pred {
            Some(Move::Call) => Some(parent()),
            Some(Move::Int | Move::Ret) => successor_path(v, &parent(), SuccessorType::Caller, cap)?,
            _ => None,
        },
        SuccessorType::Parent => match pred {
            Some(Move::Spawn) => Some(parent()),
            Some(Move::Int | Move::Call | Move::Ret) => {
                successor_path(v, &parent(), SuccessorType::Parent, cap)?
            }
            None => None,
        },
        SuccessorType::Global => match kind {
            NodeKind::Int | NodeKind::Call | NodeKind::CallRet | NodeKind::Spawn => Some(child(0)),
            NodeKind::Ret => match successor_path(v, path, SuccessorType::Caller, cap)? {
                Some(c) => successor_path(v, &c, SuccessorType::Abstract, cap)?,
                None => None,
            },
            NodeKind::End => None,
        },
        SuccessorType::Up => match pred {
            Some(Move::Int | Move::Call) => Some(parent()),
            Some(Move::Ret) => {
                // the {int,ret}-descendant leaf of the parent's left child
                let mut cur = parent();
                cur.push(0);
                let mut steps = 0usize;
                loop {
                    steps += 1;
                    if steps > cap {
                        return Err(TreeError::DepthCap);
                    }
                    let Some(l) = v.label_at(&cur) else { break None };
                    match l.kind {
                        NodeKind::Int | NodeKind::Spawn => cur.push(0),
                        NodeKind::CallRet => cur.push(1),
                        NodeKind::Ret => break Some(cur),
                        NodeKind::Call | NodeKind::End => break None,
                    }
                }
            }
            _ => None,
        },
    })
}

/// Navigation successor on a finite execution tree node.
pub fn tree_successor_finite(
    t: &ExecutionTree,
    node: usize,
    f: SuccessorType,
) -> Option<usize> {
    let path = t.path_of(node);
    let res = successor_path(t, &path, f, t.len() + 1).expect("finite walk within cap");
    res.and_then(|p| t.node_at(&p))
}

/// Navigation successor on a regular tree, addressed by root path. Walks that
/// descend (the global-predecessor leaf walk) are capped at `depth_cap`.
pub fn tree_successor_regular(
    t: &RegularTree,
    path: &TreePath,
    f: SuccessorType,
    depth_cap: usize,
) -> Result<Option<TreePath>, TreeError> {
    successor_path(t, path, f, depth_cap)
}
