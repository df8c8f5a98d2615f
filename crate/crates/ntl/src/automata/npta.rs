//! Nondeterministic parity tree automata over the execution-tree alphabet.

use std::collections::{BTreeMap, HashMap, VecDeque};

use super::alphabet::{arity_of, Alphabet, Letter};
use super::game::{ParityGame, Player};
use crate::exec::{ExecutionTree, RegularTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AutomatonError {
    #[error("automata are over different proposition universes")]
    AlphabetMismatch,
    #[error("tree label uses propositions outside the automaton's universe: {0}")]
    UnknownLabel(String),
    #[error("state budget exceeded ({0} states)")]
    StateBudget(usize),
    #[error("stationary transition cycle: the automaton is not guarded")]
    NotGuarded,
}

/// A nondeterministic parity tree automaton. Transitions map a state and a
/// letter to a disjunction of conjunctions; each conjunction lists exactly one
/// successor state per direction below the letter's arity (so an empty
/// conjunction on an arity-0 letter means `true`). Absent entries mean
/// `false`. Acceptance is min-parity on every infinite branch.
#[derive(Debug, Clone)]
pub struct Npta {
    pub alphabet: Alphabet,
    pub initial: usize,
    pub priority: Vec<u32>,
    pub names: Vec<String>,
    pub trans: Vec<BTreeMap<Letter, Vec<Vec<usize>>>>,
}

impl Npta {
    pub fn new(alphabet: Alphabet) -> Npta {
        Npta { alphabet, initial: 0, priority: Vec::new(), names: Vec::new(), trans: Vec::new() }
    }

    pub fn add_state(&mut self, name: impl Into<String>, priority: u32) -> usize {
        self.names.push(name.into());
        self.priority.push(priority);
        self.trans.push(BTreeMap::new());
        self.names.len() - 1
    }

    pub fn add_transition(&mut self, q: usize, letter: Letter, conj: Vec<usize>) {
        debug_assert_eq!(conj.len(), arity_of(letter));
        self.trans[q].entry(letter).or_default().push(conj);
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty_automaton(&self) -> bool {
        self.names.is_empty()
    }

    fn encode_labels<'a, I: Iterator<Item = &'a crate::exec::TreeLabel>>(
        &self,
        labels: I,
    ) -> Result<Vec<Letter>, AutomatonError> {
        labels
            .map(|l| {
                self.alphabet
                    .encode(l)
                    .ok_or_else(|| AutomatonError::UnknownLabel(l.to_string()))
            })
            .collect()
    }

    /// Bottom-up membership on a finite tree; priorities are irrelevant
    /// because every run is finite.
    pub fn membership_finite(&self, t: &ExecutionTree) -> Result<bool, AutomatonError> {
        let letters = self.encode_labels(t.labels.iter())?;
        let mut memo: HashMap<(usize, usize), bool> = HashMap::new();
        Ok(self.accepts_from(t, &letters, 0, self.initial, &mut memo))
    }

    fn accepts_from(
        &self,
        t: &ExecutionTree,
        letters: &[Letter],
        node: usize,
        q: usize,
        memo: &mut HashMap<(usize, usize), bool>,
    ) -> bool {
        if let Some(&hit) = memo.get(&(node, q)) {
            return hit;
        }
        let result = self.trans[q].get(&letters[node]).is_some_and(|disjuncts| {
            disjuncts.iter().any(|conj| {
                conj.iter().enumerate().all(|(d, &q2)| {
                    let child = t.children[node][d].expect("child within arity");
                    self.accepts_from(t, letters, child, q2, memo)
                })
            })
        });
        memo.insert((node, q), result);
        result
    }

    /// Membership of the unfolding of a regular tree, decided by the parity
    /// game over (class, state) pairs: Verifier picks a disjunct, Pathfinder
    /// picks a direction.
    pub fn membership_regular(&self, t: &RegularTree) -> Result<bool, AutomatonError> {
        let letters = self.encode_labels(t.labels.iter())?;
        let neutral = self.priority.iter().copied().max().unwrap_or(0);
        let mut game = ParityGame::new();
        let pos = |class: usize, q: usize| class * self.len() + q;
        for class in 0..t.labels.len() {
            for q in 0..self.len() {
                let id = game.add_position(Player::Verifier, self.priority[q]);
                debug_assert_eq!(id, pos(class, q));
            }
        }
        for class in 0..t.labels.len() {
            for q in 0..self.len() {
                let Some(disjuncts) = self.trans[q].get(&letters[class]) else {
                    continue;
                };
                for conj in disjuncts {
                    let choice = game.add_position(Player::Pathfinder, neutral);
                    game.add_move(pos(class, q), choice);
                    for (d, &q2) in conj.iter().enumerate() {
                        game.add_move(choice, pos(t.children[class][d], q2));
                    }
                }
            }
        }
        let solution = game.solve();
        Ok(solution.winner[pos(t.root, self.initial)] == Player::Verifier)
    }

    /// The acceptance game without an input: Verifier additionally picks the
    /// letter. Verifier wins from the initial state iff the language is
    /// nonempty; the positional strategy then folds into a regular witness.
    fn emptiness_solution(&self) -> (ParityGame, Vec<(usize, Letter, usize)>, super::game::Solution)
    {
        let neutral = self.priority.iter().copied().max().unwrap_or(0);
        let mut game = ParityGame::new();
        for q in 0..self.len() {
            let id = game.add_position(Player::Verifier, self.priority[q]);
            debug_assert_eq!(id, q);
        }
        // choice position index -> (state, letter, disjunct index)
        let mut choices = Vec::new();
        for q in 0..self.len() {
            for (&letter, disjuncts) in &self.trans[q] {
                for (di, conj) in disjuncts.iter().enumerate() {
                    let choice = game.add_position(Player::Pathfinder, neutral);
                    choices.push((q, letter, di));
                    game.add_move(q, choice);
                    for &q2 in conj {
                        game.add_move(choice, q2);
                    }
                }
            }
        }
        let solution = game.solve();
        (game, choices, solution)
    }

    pub fn is_empty(&self) -> bool {
        let (_, _, solution) = self.emptiness_solution();
        solution.winner[self.initial] == Player::Pathfinder
    }

    /// A regular member of the language, if any. Classes correspond to the
    /// automaton states reachable under Verifier's winning strategy.
    pub fn extract_witness(&self) -> Option<RegularTree> {
        let (_, choices, solution) = self.emptiness_solution();
        if solution.winner[self.initial] == Player::Pathfinder {
            return None;
        }
        let mut class_of: HashMap<usize, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut picked: Vec<(usize, Letter, usize)> = Vec::new();
        let mut queue = VecDeque::new();
        class_of.insert(self.initial, 0);
        let choice = solution.strategy[self.initial].expect("winning state has a move");
        let (q, letter, di) = choices[choice - self.len()];
        labels.push(self.alphabet.decode(letter));
        children.push(Vec::new());
        picked.push((q, letter, di));
        queue.push_back(self.initial);
        while let Some(q) = queue.pop_front() {
            let class = class_of[&q];
            let (_, letter, di) = picked[class];
            let conj = &self.trans[q][&letter][di];
            for &q2 in conj {
                let next_class = match class_of.get(&q2) {
                    Some(&c) => c,
                    None => {
                        let c = labels.len();
                        class_of.insert(q2, c);
                        let choice = solution.strategy[q2].expect("winning state has a move");
                        let (q2c, letter2, di2) = choices[choice - self.len()];
                        debug_assert_eq!(q2c, q2);
                        labels.push(self.alphabet.decode(letter2));
                        children.push(Vec::new());
                        picked.push((q2, letter2, di2));
                        queue.push_back(q2);
                        c
                    }
                };
                children[class].push(next_class);
            }
        }
        let witness = RegularTree { labels, children, root: 0 };
        debug_assert!(witness.validate().is_ok());
        Some(witness)
    }

    /// Language intersection. When either side's parity condition is
    /// vacuous (all priorities even), the plain product carries the other
    /// side's priorities; otherwise the product tracks an index appearance
    /// record over the two priority streams.
    pub fn intersect(&self, other: &Npta) -> Result<Npta, AutomatonError> {
        if self.alphabet != other.alphabet {
            return Err(AutomatonError::AlphabetMismatch);
        }
        let trivial1 = self.priority.iter().all(|p| p % 2 == 0);
        let trivial2 = other.priority.iter().all(|p| p % 2 == 0);
        if trivial1 || trivial2 {
            Ok(self.product(other, |q1, q2| {
                if trivial1 {
                    other.priority[q2]
                } else {
                    self.priority[q1]
                }
            }))
        } else {
            Ok(self.product_iar(other))
        }
    }

    /// Plain product over reachable state pairs with an arbitrary priority
    /// assignment — language-correct only when the discarded side's parity
    /// condition is vacuous.
    fn product(&self, other: &Npta, prio: impl Fn(usize, usize) -> u32) -> Npta {
        let mut out = Npta::new(self.alphabet.clone());
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut queue = VecDeque::new();
        let start = (self.initial, other.initial);
        ids.insert(start, out.add_state(pair_name(self, other, start), prio(start.0, start.1)));
        queue.push_back(start);
        while let Some((q1, q2)) = queue.pop_front() {
            let id = ids[&(q1, q2)];
            for (&letter, ds1) in &self.trans[q1] {
                let Some(ds2) = other.trans[q2].get(&letter) else {
                    continue;
                };
                for c1 in ds1 {
                    for c2 in ds2 {
                        let conj: Vec<usize> = c1
                            .iter()
                            .zip(c2)
                            .map(|(&a, &b)| {
                                *ids.entry((a, b)).or_insert_with(|| {
                                    queue.push_back((a, b));
                                    out.add_state(pair_name(self, other, (a, b)), prio(a, b))
                                })
                            })
                            .collect();
                        out.add_transition(id, letter, conj);
                    }
                }
            }
        }
        out
    }

    /// Product of two genuinely parity-conditioned automata. The conjunction
    /// of two min-parity conditions is a Streett condition (for every odd c,
    /// seeing c infinitely often requires seeing something below c infinitely
    /// often, on either stream); an index appearance record turns that back
    /// into parity: indices hit in their lower set move to the front of a
    /// permutation, and the emitted priority reflects the deepest position
    /// hit, odd when an upper-set hit outranks every lower-set hit.
    fn product_iar(&self, other: &Npta) -> Npta {
        // pair = (side, odd priority c): upper set {q : prio(q) = c},
        // lower set {q : prio(q) < c}
        let mut pairs: Vec<(u8, u32)> = Vec::new();
        for (side, aut) in [(0u8, self), (1u8, other)] {
            let mut odds: Vec<u32> =
                aut.priority.iter().copied().filter(|p| p % 2 == 1).collect();
            odds.sort_unstable();
            odds.dedup();
            pairs.extend(odds.into_iter().map(|c| (side, c)));
        }
        let k = pairs.len();
        let hits = |q1: usize, q2: usize| -> (Vec<bool>, Vec<bool>) {
            let upper: Vec<bool> = pairs
                .iter()
                .map(|&(side, c)| {
                    (if side == 0 { self.priority[q1] } else { other.priority[q2] }) == c
                })
                .collect();
            let lower: Vec<bool> = pairs
                .iter()
                .map(|&(side, c)| {
                    (if side == 0 { self.priority[q1] } else { other.priority[q2] }) < c
                })
                .collect();
            (upper, lower)
        };
        type IarState = (usize, usize, Vec<u8>);
        let state_priority = |s: &IarState| -> u32 {
            let (upper, lower) = hits(s.0, s.1);
            // deepest 1-based record position hit per set
            let deepest = |set: &[bool]| {
                s.2.iter()
                    .enumerate()
                    .filter(|(_, &i)| set[i as usize])
                    .map(|(pos, _)| pos + 1)
                    .max()
                    .unwrap_or(0)
            };
            let e = deepest(&upper);
            let f = deepest(&lower);
            if e > f {
                2 * (k - e) as u32 + 1
            } else {
                2 * (k - f) as u32
            }
        };
        let advance = |s: &IarState| -> Vec<u8> {
            let (_, lower) = hits(s.0, s.1);
            let (front, back): (Vec<u8>, Vec<u8>) =
                s.2.iter().partition(|&&i| lower[i as usize]);
            front.into_iter().chain(back).collect()
        };

        let mut out = Npta::new(self.alphabet.clone());
        let mut ids: HashMap<IarState, usize> = HashMap::new();
        let mut queue: VecDeque<IarState> = VecDeque::new();
        let start: IarState =
            (self.initial, other.initial, (0..k as u8).collect());
        ids.insert(start.clone(), out.add_state(pair_name(self, other, (start.0, start.1)), state_priority(&start)));
        queue.push_back(start);
        while let Some(s) = queue.pop_front() {
            let id = ids[&s];
            let record = advance(&s);
            for (&letter, ds1) in &self.trans[s.0] {
                let Some(ds2) = other.trans[s.1].get(&letter) else {
                    continue;
                };
                for c1 in ds1 {
                    for c2 in ds2 {
                        let conj: Vec<usize> = c1
                            .iter()
                            .zip(c2)
                            .map(|(&a, &b)| {
                                let next: IarState = (a, b, record.clone());
                                *ids.entry(next.clone()).or_insert_with(|| {
                                    queue.push_back(next.clone());
                                    out.add_state(
                                        pair_name(self, other, (a, b)),
                                        state_priority(&next),
                                    )
                                })
                            })
                            .collect();
                        out.add_transition(id, letter, conj);
                    }
                }
            }
        }
        out
    }

    /// Line-based dump: one `state` line per state, one `trans` line per
    /// disjunct.
    pub fn to_text(&self) -> String {
        let mut s = format!("npta initial {}\n", self.initial);
        for q in 0..self.len() {
            s.push_str(&format!("state {q} prio {} {}\n", self.priority[q], self.names[q]));
        }
        for q in 0..self.len() {
            for (&letter, disjuncts) in &self.trans[q] {
                for conj in disjuncts {
                    let targets: Vec<String> = conj.iter().map(|t| t.to_string()).collect();
                    s.push_str(&format!(
                        "trans {q} {} -> {}\n",
                        self.alphabet.decode(letter),
                        targets.join(" ")
                    ));
                }
            }
        }
        s
    }
}

fn pair_name(a: &Npta, b: &Npta, (q1, q2): (usize, usize)) -> String {
    format!("{}&{}", a.names[q1], b.names[q2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{NodeKind, TreeLabel};
    use std::collections::BTreeSet;

    fn universe(ps: &[&str]) -> Alphabet {
        Alphabet::new(ps.iter().map(|p| p.to_string()).collect())
    }

    fn label(ps: &[&str], kind: NodeKind, pred: Option<crate::exec::Move>) -> TreeLabel {
        TreeLabel { props: ps.iter().map(|s| s.to_string()).collect(), kind, pred }
    }

    /// One state accepting every tree over the universe.
    fn all_accepting(alphabet: Alphabet) -> Npta {
        let mut a = Npta::new(alphabet);
        let q = a.add_state("any", 0);
        let letters: Vec<Letter> = a.alphabet.letters().collect();
        for letter in letters {
            a.add_transition(q, letter, vec![q; arity_of(letter)]);
        }
        a
    }

    fn chain_tree(kinds: &[NodeKind]) -> ExecutionTree {
        use crate::exec::Move;
        let mut t = ExecutionTree { labels: Vec::new(), children: Vec::new(), parent: Vec::new() };
        for (i, &k) in kinds.iter().enumerate() {
            let pred = if i == 0 { None } else { Some(Move::Int) };
            t.labels.push(label(&[], k, pred));
            t.children.push([None, None]);
            t.parent.push(if i == 0 { None } else { Some((i - 1, 0)) });
            if i > 0 {
                t.children[i - 1][0] = Some(i);
            }
        }
        t
    }

    #[test]
    fn all_accepting_accepts_everything() {
        let a = all_accepting(universe(&["p"]));
        let t = chain_tree(&[NodeKind::Int, NodeKind::Int, NodeKind::End]);
        assert!(a.membership_finite(&t).unwrap());
        assert!(!a.is_empty());
        let w = a.extract_witness().unwrap();
        assert_eq!(w.labels.len(), 1);
        assert!(a.membership_regular(&w).unwrap());
    }

    #[test]
    fn root_label_constraint() {
        let mut a = Npta::new(universe(&[]));
        let q = a.add_state("root-end", 0);
        let end = a.alphabet.encode(&label(&[], NodeKind::End, None)).unwrap();
        a.add_transition(q, end, vec![]);
        assert!(a.membership_finite(&chain_tree(&[NodeKind::End])).unwrap());
        assert!(!a.membership_finite(&chain_tree(&[NodeKind::Int, NodeKind::End])).unwrap());
    }

    #[test]
    fn regular_membership_priority_sensitivity() {
        // self-loop class labelled (∅,int,int); a single self-looping state
        // accepts iff its priority is even
        for (prio, expect) in [(0u32, true), (1, false)] {
            let mut a = Npta::new(universe(&[]));
            let q = a.add_state("loop", prio);
            let letter =
                a.alphabet.encode(&label(&[], NodeKind::Int, Some(crate::exec::Move::Int))).unwrap();
            a.add_transition(q, letter, vec![q]);
            let t = RegularTree {
                labels: vec![label(&[], NodeKind::Int, Some(crate::exec::Move::Int))],
                children: vec![vec![0]],
                root: 0,
            };
            assert_eq!(a.membership_regular(&t).unwrap(), expect, "priority {prio}");
        }
    }

    #[test]
    fn empty_automaton_language() {
        let mut a = Npta::new(universe(&[]));
        a.add_state("dead", 0);
        assert!(a.is_empty());
        assert!(a.extract_witness().is_none());
    }

    /// Automaton accepting trees whose root carries the given proposition.
    fn root_prop(alphabet: Alphabet, p: &str) -> Npta {
        let mut a = Npta::new(alphabet);
        let q0 = a.add_state(format!("root-{p}"), 0);
        let any = a.add_state("any", 0);
        let letters: Vec<Letter> = a.alphabet.letters().collect();
        for letter in letters {
            a.add_transition(any, letter, vec![any; arity_of(letter)]);
            if a.alphabet.decode_props(letter).contains(p) {
                a.add_transition(q0, letter, vec![any; arity_of(letter)]);
            }
        }
        a
    }

    #[test]
    fn intersect_disjoint_root_constraints_is_empty() {
        let u = universe(&["a", "b"]);
        let ra = root_prop(u.clone(), "a");
        let rb = root_prop(u.clone(), "b");
        // trees carrying both exist, so the intersection is nonempty ...
        assert!(!ra.intersect(&rb).unwrap().is_empty());
        // ... but requiring exactly {a} at the root against "root has b" is empty
        let mut exact = Npta::new(u.clone());
        let q0 = exact.add_state("root-exactly-a", 0);
        let any = exact.add_state("any", 0);
        let letters: Vec<Letter> = exact.alphabet.letters().collect();
        for letter in letters {
            exact.add_transition(any, letter, vec![any; arity_of(letter)]);
            let props = exact.alphabet.decode_props(letter);
            if props.iter().eq(["a"].iter()) {
                exact.add_transition(q0, letter, vec![any; arity_of(letter)]);
            }
        }
        assert!(exact.intersect(&rb).unwrap().is_empty());
        assert!(!exact.is_empty());
    }

    #[test]
    fn intersect_self_is_identity_on_samples() {
        let u = universe(&["p"]);
        let a = root_prop(u, "p");
        let aa = a.intersect(&a).unwrap();
        let mut with_p = chain_tree(&[NodeKind::Int, NodeKind::End]);
        with_p.labels[0].props = BTreeSet::from(["p".to_string()]);
        let without = chain_tree(&[NodeKind::Int, NodeKind::End]);
        for t in [&with_p, &without] {
            assert_eq!(a.membership_finite(t).unwrap(), aa.membership_finite(t).unwrap());
        }
        assert_eq!(a.is_empty(), aa.is_empty());
    }

    /// The IAR product against direct conjunction on unary regular trees:
    /// both automata run deterministically along an int-labelled lasso, so
    /// membership reduces to each side's parity condition on its own loop.
    #[test]
    fn iar_product_matches_conjunction_on_lassos() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = universe(&[]);
        let int_label = label(&[], NodeKind::Int, Some(crate::exec::Move::Int));
        for case in 0..200 {
            // deterministic cyclic word automaton: states 0..n in a ring with
            // random priorities
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let n = rng.gen_range(1..=4);
                let mut a = Npta::new(u.clone());
                let letter = a.alphabet.encode(&int_label).unwrap();
                for q in 0..n {
                    a.add_state(format!("s{q}"), rng.gen_range(0..=3));
                }
                for q in 0..n {
                    a.add_transition(q, letter, vec![(q + 1) % n]);
                }
                a
            };
            let a1 = mk(&mut rng);
            let a2 = mk(&mut rng);
            // the unary lasso tree: a self-loop class
            let t = RegularTree { labels: vec![int_label.clone()], children: vec![vec![0]], root: 0 };
            let both = a1.membership_regular(&t).unwrap() && a2.membership_regular(&t).unwrap();
            let product = a1.product_iar(&a2);
            assert_eq!(product.membership_regular(&t).unwrap(), both, "case {case}");
        }
    }
}
