//! Word automata: nondeterministic Büchi acceptance and a lazy
//! determinization into deterministic parity automata via compact Safra
//! trees with name recycling.
//!
//! The tree-automaton layer threads these deterministic automata along tree
//! branches, so determinism (not just language equality) is essential.

use std::collections::{BTreeSet, HashMap};
use std::hash::Hash;

/// A nondeterministic Büchi word automaton presented implicitly: states are
/// `0..len`, letters are caller-defined.
pub trait NbwSource {
    type Letter: Clone + Eq + Hash;

    fn len(&self) -> usize;
    fn initial(&self) -> Vec<usize>;
    fn accepting(&self, q: usize) -> bool;
    fn successors(&self, q: usize, letter: &Self::Letter) -> Vec<usize>;
}

/// Ordered Safra tree node; children are kept sorted by name (smaller name =
/// older node).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SafraNode {
    pub name: u32,
    pub label: BTreeSet<usize>,
    pub children: Vec<SafraNode>,
}

/// A state of the determinized automaton: the tree after a step plus the
/// priority emitted by that step (min-parity; even iff the step was "good").
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetState {
    pub tree: Option<SafraNode>,
    pub priority: u32,
}

/// Lazily determinizes an [`NbwSource`] into a deterministic parity word
/// automaton: the minimal priority occurring infinitely often along the
/// unique run is even iff the Büchi automaton accepts the word.
pub struct Determinizer<S: NbwSource> {
    pub source: S,
    states: Vec<DetState>,
    ids: HashMap<DetState, usize>,
    memo: HashMap<(usize, S::Letter), usize>,
    /// priority emitted on steps without any green or deleted name; odd,
    /// since a run is accepting only when greens recur forever
    neutral: u32,
}

impl<S: NbwSource> Determinizer<S> {
    pub fn new(source: S) -> Determinizer<S> {
        let neutral = 2 * source.len() as u32 + 3;
        Determinizer { source, states: Vec::new(), ids: HashMap::new(), memo: HashMap::new(), neutral }
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&mut self) -> usize {
        let init: BTreeSet<usize> = self.source.initial().into_iter().collect();
        let tree = if init.is_empty() {
            None
        } else {
            Some(SafraNode { name: 1, label: init, children: Vec::new() })
        };
        let priority = self.neutral;
        self.intern(DetState { tree, priority })
    }

    pub fn priority(&self, id: usize) -> u32 {
        self.states[id].priority
    }

    fn intern(&mut self, s: DetState) -> usize {
        match self.ids.get(&s) {
            Some(&id) => id,
            None => {
                let id = self.states.len();
                self.states.push(s.clone());
                self.ids.insert(s, id);
                id
            }
        }
    }

    pub fn step(&mut self, id: usize, letter: &S::Letter) -> usize {
        if let Some(&hit) = self.memo.get(&(id, letter.clone())) {
            return hit;
        }
        let next = self.compute_step(id, letter);
        let next_id = self.intern(next);
        self.memo.insert((id, letter.clone()), next_id);
        next_id
    }

    fn compute_step(&self, id: usize, letter: &S::Letter) -> DetState {
        let Some(tree) = self.states[id].tree.clone() else {
            // no run alive: rejecting sink
            return DetState { tree: None, priority: 1 };
        };
        let mut tree = tree;
        let mut fresh = max_name(&tree) + 1;
        spawn_children(&mut tree, &self.source, &mut fresh);
        update_labels(&mut tree, &self.source, letter);
        let mut seen = BTreeSet::new();
        horizontal_merge(&mut tree, &mut seen);
        let mut deleted: Vec<u32> = Vec::new();
        let mut greens: Vec<u32> = Vec::new();
        let tree = prune_empty(tree, &mut deleted);
        let mut tree = match tree {
            None => {
                return DetState { tree: None, priority: 1 };
            }
            Some(t) => t,
        };
        vertical_merge(&mut tree, &mut deleted, &mut greens);
        let e = deleted.iter().copied().min();
        let f = greens.iter().copied().min();
        let priority = match (e, f) {
            (None, None) => self.neutral,
            (Some(e), None) => 2 * e - 1,
            (None, Some(f)) => 2 * f,
            (Some(e), Some(f)) => {
                if e <= f {
                    2 * e - 1
                } else {
                    2 * f
                }
            }
        };
        compact_names(&mut tree);
        DetState { tree: Some(tree), priority }
    }
}

fn max_name(t: &SafraNode) -> u32 {
    t.children.iter().map(max_name).max().unwrap_or(0).max(t.name)
}

/// Step 1: every node sprouts a youngest child holding its accepting states.
fn spawn_children<S: NbwSource>(t: &mut SafraNode, source: &S, fresh: &mut u32) {
    for c in &mut t.children {
        spawn_children(c, source, fresh);
    }
    let acc: BTreeSet<usize> =
        t.label.iter().copied().filter(|&q| source.accepting(q)).collect();
    if !acc.is_empty() {
        t.children.push(SafraNode { name: *fresh, label: acc, children: Vec::new() });
        *fresh += 1;
    }
}

/// Step 2: subset transition on every label.
fn update_labels<S: NbwSource>(t: &mut SafraNode, source: &S, letter: &S::Letter) {
    t.label = t.label.iter().flat_map(|&q| source.successors(q, letter)).collect();
    for c in &mut t.children {
        update_labels(c, source, letter);
    }
}

/// Step 3: each state is kept only in the oldest sibling branch containing
/// it, at every level of the tree. `seen` collects states already claimed by
/// older siblings at the current level.
fn horizontal_merge(t: &mut SafraNode, seen: &mut BTreeSet<usize>) {
    t.label = t.label.difference(seen).copied().collect();
    restrict(t);
    seen.extend(t.label.iter().copied());
    let mut claimed = BTreeSet::new();
    for c in &mut t.children {
        horizontal_merge(c, &mut claimed);
    }
}

/// Keep descendants within the (possibly shrunken) label of their parent.
fn restrict(t: &mut SafraNode) {
    for c in &mut t.children {
        c.label = c.label.intersection(&t.label).copied().collect();
        restrict(c);
    }
}

/// Step 4: drop empty nodes, recording their names.
fn prune_empty(mut t: SafraNode, deleted: &mut Vec<u32>) -> Option<SafraNode> {
    if t.label.is_empty() {
        collect_names(&t, deleted);
        return None;
    }
    let children = std::mem::take(&mut t.children);
    t.children = children.into_iter().filter_map(|c| prune_empty(c, deleted)).collect();
    Some(t)
}

fn collect_names(t: &SafraNode, out: &mut Vec<u32>) {
    out.push(t.name);
    for c in &t.children {
        collect_names(c, out);
    }
}

/// Step 5: a node whose children exactly cover it turns green and sheds its
/// descendants (their names count as deleted).
fn vertical_merge(t: &mut SafraNode, deleted: &mut Vec<u32>, greens: &mut Vec<u32>) {
    let union: BTreeSet<usize> =
        t.children.iter().flat_map(|c| c.label.iter().copied()).collect();
    if !t.label.is_empty() && union == t.label {
        for c in &t.children {
            collect_names(c, deleted);
        }
        t.children.clear();
        greens.push(t.name);
        return;
    }
    for c in &mut t.children {
        vertical_merge(c, deleted, greens);
    }
}

/// Step 6: rename to 1..m preserving order, so surviving nodes' names only
/// ever decrease.
fn compact_names(t: &mut SafraNode) {
    let mut names = Vec::new();
    collect_names_mutless(t, &mut names);
    names.sort_unstable();
    let map: HashMap<u32, u32> =
        names.into_iter().enumerate().map(|(i, n)| (n, i as u32 + 1)).collect();
    apply_names(t, &map);
}

fn collect_names_mutless(t: &SafraNode, out: &mut Vec<u32>) {
    out.push(t.name);
    for c in &t.children {
        collect_names_mutless(c, out);
    }
}

fn apply_names(t: &mut SafraNode, map: &HashMap<u32, u32>) {
    t.name = map[&t.name];
    for c in &mut t.children {
        apply_names(c, map);
    }
}
