//! Two-way alternating parity tree automata.
//!
//! Transitions are positive boolean formulas over (direction, state) atoms;
//! membership on a finite tree is decided by a parity game where Verifier
//! resolves disjunctions and Pathfinder conjunctions.

use std::collections::{BTreeMap, HashMap, VecDeque};

use super::alphabet::{Alphabet, Letter};
use super::game::{ParityGame, Player};
use super::npta::AutomatonError;
use crate::exec::ExecutionTree;

/// Directions of transition atoms: the two children, staying put, and the
/// parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    Child0,
    Child1,
    Stay,
    Up,
}

/// Positive boolean formula over (direction, state) atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoolForm {
    True,
    False,
    Atom(Dir, usize),
    Or(Box<BoolForm>, Box<BoolForm>),
    And(Box<BoolForm>, Box<BoolForm>),
}

impl BoolForm {
    pub fn atom(d: Dir, q: usize) -> BoolForm {
        BoolForm::Atom(d, q)
    }

    pub fn or(a: BoolForm, b: BoolForm) -> BoolForm {
        BoolForm::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: BoolForm, b: BoolForm) -> BoolForm {
        BoolForm::And(Box::new(a), Box::new(b))
    }

    /// Disjunction of a list; empty list is `False`.
    pub fn any(mut forms: Vec<BoolForm>) -> BoolForm {
        match forms.pop() {
            None => BoolForm::False,
            Some(last) => forms.into_iter().rfold(last, |acc, f| BoolForm::or(f, acc)),
        }
    }

    /// Conjunction of a list; empty list is `True`.
    pub fn all(mut forms: Vec<BoolForm>) -> BoolForm {
        match forms.pop() {
            None => BoolForm::True,
            Some(last) => forms.into_iter().rfold(last, |acc, f| BoolForm::and(f, acc)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoWayAta {
    pub alphabet: Alphabet,
    pub initial: usize,
    pub priority: Vec<u32>,
    pub names: Vec<String>,
    /// per state: letter -> transition formula; absent entries are `False`
    pub trans: Vec<BTreeMap<Letter, BoolForm>>,
}

/// Flattened transition formula node, for game construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Flat {
    True,
    False,
    Atom(Dir, usize),
    Or(usize, usize),
    And(usize, usize),
}

fn flatten(f: &BoolForm, arena: &mut Vec<Flat>) -> usize {
    let node = match f {
        BoolForm::True => Flat::True,
        BoolForm::False => Flat::False,
        BoolForm::Atom(d, q) => Flat::Atom(*d, *q),
        BoolForm::Or(a, b) => {
            let ia = flatten(a, arena);
            let ib = flatten(b, arena);
            Flat::Or(ia, ib)
        }
        BoolForm::And(a, b) => {
            let ia = flatten(a, arena);
            let ib = flatten(b, arena);
            Flat::And(ia, ib)
        }
    };
    arena.push(node);
    arena.len() - 1
}

impl TwoWayAta {
    pub fn new(alphabet: Alphabet) -> TwoWayAta {
        TwoWayAta {
            alphabet,
            initial: 0,
            priority: Vec::new(),
            names: Vec::new(),
            trans: Vec::new(),
        }
    }

    pub fn add_state(&mut self, name: impl Into<String>, priority: u32) -> usize {
        self.names.push(name.into());
        self.priority.push(priority);
        self.trans.push(BTreeMap::new());
        self.names.len() - 1
    }

    pub fn set_transition(&mut self, q: usize, letter: Letter, form: BoolForm) {
        self.trans[q].insert(letter, form);
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    /// Whether the automaton accepts the finite tree, via the membership
    /// parity game over (tree node, state) positions with formula
    /// subpositions.
    pub fn membership_finite(&self, t: &ExecutionTree) -> Result<bool, AutomatonError> {
        let letters: Result<Vec<Letter>, AutomatonError> = t
            .labels
            .iter()
            .map(|l| {
                self.alphabet
                    .encode(l)
                    .ok_or_else(|| AutomatonError::UnknownLabel(l.to_string()))
            })
            .collect();
        let letters = letters?;
        // flatten each used transition formula once
        let mut arena: Vec<Flat> = Vec::new();
        let mut roots: HashMap<(usize, Letter), Option<usize>> = HashMap::new();
        let neutral = self.priority.iter().copied().max().unwrap_or(0);

        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        enum Key {
            State(usize, usize),
            // tree node and arena index of the formula node
            Form(usize, usize),
        }

        let mut game = ParityGame::new();
        let mut ids: HashMap<Key, usize> = HashMap::new();
        let mut queue: VecDeque<Key> = VecDeque::new();
        let root_key = Key::State(0, self.initial);

        // two passes per position: allocate, then wire moves once both ends exist
        macro_rules! intern {
            ($key:expr, $owner:expr, $prio:expr) => {{
                let key = $key;
                match ids.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = game.add_position($owner, $prio);
                        ids.insert(key, id);
                        queue.push_back(key);
                        id
                    }
                }
            }};
        }

        intern!(root_key, Player::Verifier, self.priority[self.initial]);
        while let Some(key) = queue.pop_front() {
            let id = ids[&key];
            match key {
                Key::State(node, q) => {
                    let root = *roots.entry((q, letters[node])).or_insert_with(|| {
                        self.trans[q]
                            .get(&letters[node])
                            .map(|f| flatten(f, &mut arena))
                    });
                    if let Some(root) = root {
                        let to = intern!(Key::Form(node, root), owner_of(arena[root]), neutral);
                        game.add_move(id, to);
                    }
                    // no transition: Verifier is stuck and loses this branch
                }
                Key::Form(node, fi) => match arena[fi] {
                    // True is Pathfinder-owned with no moves (Pathfinder
                    // loses), False Verifier-owned with no moves
                    Flat::True | Flat::False => {}
                    Flat::Atom(dir, q2) => {
                        let target = match dir {
                            Dir::Stay => Some(node),
                            Dir::Up => t.parent[node].map(|(p, _)| p),
                            Dir::Child0 => t.children[node][0],
                            Dir::Child1 => t.children[node][1],
                        };
                        if let Some(target) = target {
                            let to = intern!(
                                Key::State(target, q2),
                                Player::Verifier,
                                self.priority[q2]
                            );
                            game.add_move(id, to);
                        }
                        // invalid move: stuck, and the position is
                        // Verifier-owned, so Verifier loses the branch
                    }
                    Flat::Or(a, b) | Flat::And(a, b) => {
                        let ta = intern!(Key::Form(node, a), owner_of(arena[a]), neutral);
                        let tb = intern!(Key::Form(node, b), owner_of(arena[b]), neutral);
                        game.add_move(id, ta);
                        game.add_move(id, tb);
                    }
                },
            }
        }
        let solution = game.solve();
        Ok(solution.winner[ids[&root_key]] == Player::Verifier)
    }
}

fn owner_of(f: Flat) -> Player {
    match f {
        // True: no moves, owner loses, so Pathfinder owns it
        Flat::True => Player::Pathfinder,
        Flat::False => Player::Verifier,
        Flat::Atom(..) => Player::Verifier,
        Flat::Or(..) => Player::Verifier,
        Flat::And(..) => Player::Pathfinder,
    }
}
