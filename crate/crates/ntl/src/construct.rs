//! The pipeline automata: the execution-tree validity automaton, the two-way
//! alternating formula automaton, the model automaton of a DPN, their
//! composition into the formula NPTA, and DPN synthesis from a regular
//! execution tree.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::automata::alphabet::{kind_of, pred_of, Alphabet, Letter};
use crate::automata::ata::{BoolForm, Dir, TwoWayAta};
use crate::automata::dealternate::{dealternate, dealternate_restricted};
use crate::automata::npta::{AutomatonError, Npta};
use crate::dpn::{Dpn, Rule};
use crate::exec::{Move, NodeKind, RegularTree, TreeError};
use crate::formula::{assign_priorities, check_closed, Formula, PriorityAssignment, SuccessorType};

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConstructError {
    #[error("formula is not closed and well-formed: {0}")]
    IllFormed(String),
    #[error("formula is not in positive normal form")]
    NotPnf,
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("the tree is not the representation of an execution graph")]
    NotExecutionTree,
}

/// Predecessor components in state order; index 0 is the root marker.
const PRED_OPTIONS: [Option<Move>; 5] =
    [None, Some(Move::Int), Some(Move::Call), Some(Move::Ret), Some(Move::Spawn)];

fn pred_name(p: Option<Move>) -> &'static str {
    p.map(Move::name).unwrap_or("bot")
}

/// The validity automaton: accepts exactly the tree representations of
/// execution graphs. States are (predecessor move or root marker, scope bit);
/// the bit records whether the node sits inside a call frame that still owes
/// its matched return, and doubles as the parity priority, so a frame that
/// stays open forever is rejected.
pub fn build_exec_tree_automaton(alphabet: Alphabet) -> Npta {
    let letters: Vec<Letter> = alphabet.letters().collect();
    let mut a = Npta::new(alphabet);
    for p in PRED_OPTIONS {
        for c in 0..2u32 {
            a.add_state(format!("({},{c})", pred_name(p)), c);
        }
    }
    let id = |p: Option<Move>, c: usize| -> usize {
        PRED_OPTIONS.iter().position(|x| *x == p).unwrap() * 2 + c
    };
    for letter in letters {
        let d = kind_of(letter);
        let p = pred_of(letter);
        for c in 0..2usize {
            let q = id(p, c);
            // children see the move that leads to them as their predecessor
            match d {
                NodeKind::Int => {
                    a.add_transition(q, letter, vec![id(Some(Move::Int), c)]);
                }
                NodeKind::Call if c == 0 => {
                    a.add_transition(q, letter, vec![id(Some(Move::Call), 0)]);
                }
                NodeKind::CallRet => {
                    a.add_transition(
                        q,
                        letter,
                        vec![id(Some(Move::Call), 1), id(Some(Move::Ret), c)],
                    );
                }
                NodeKind::Spawn => {
                    a.add_transition(
                        q,
                        letter,
                        vec![id(Some(Move::Int), c), id(Some(Move::Spawn), 0)],
                    );
                }
                NodeKind::Ret if c == 1 => {
                    a.add_transition(q, letter, vec![]);
                }
                NodeKind::End if c == 0 => {
                    a.add_transition(q, letter, vec![]);
                }
                _ => {} // no transition: label/state mismatch is a rejection
            }
        }
    }
    a
}

/// States of the formula automaton. Helper walks are formula-shaped wherever
/// their transitions coincide with a formula state's (the caller-then-abstract
/// detour for the global successor of a return is literally `<-> <a> psi`);
/// only the leaf search for the global predecessor of a return needs the two
/// extra state families.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum AState {
    Form(Formula),
    /// Entered at the matched call node; descends to its frame's leaf.
    CallPair(Formula),
    /// Walks to the {int,ret}-leaf of the current frame, then resumes.
    LeafPair(Formula),
}

struct AtaBuilder<'a> {
    ata: TwoWayAta,
    ids: BTreeMap<AState, usize>,
    pending: VecDeque<AState>,
    pa: &'a PriorityAssignment,
    fps: &'a BTreeMap<String, Formula>,
    prop_bit: &'a BTreeMap<String, u32>,
}

impl AtaBuilder<'_> {
    fn intern(&mut self, st: AState) -> usize {
        if let Some(&id) = self.ids.get(&st) {
            return id;
        }
        let prio = match &st {
            AState::Form(Formula::Mu(x, _)) | AState::Form(Formula::Nu(x, _)) => {
                self.pa.of_binder(x)
            }
            _ => self.pa.max,
        };
        let name = match &st {
            AState::Form(f) => f.to_string(),
            AState::CallPair(f) => format!("(call, {f})"),
            AState::LeafPair(f) => format!("(leaf, {f})"),
        };
        let id = self.ata.add_state(name, prio);
        self.ids.insert(st.clone(), id);
        self.pending.push_back(st);
        id
    }

    fn stay(&mut self, st: AState) -> BoolForm {
        BoolForm::atom(Dir::Stay, self.intern(st))
    }

    fn transition(&mut self, st: &AState, letter: Letter) -> BoolForm {
        let d = kind_of(letter);
        let p = pred_of(letter);
        match st {
            AState::Form(f) => self.formula_transition(f, d, p, letter),
            AState::CallPair(psi) => {
                let leaf = self.intern(AState::LeafPair(psi.clone()));
                BoolForm::atom(Dir::Child0, leaf)
            }
            AState::LeafPair(psi) => match d {
                NodeKind::Int | NodeKind::Spawn => {
                    let s = self.intern(AState::LeafPair(psi.clone()));
                    BoolForm::atom(Dir::Child0, s)
                }
                NodeKind::CallRet => {
                    let s = self.intern(AState::LeafPair(psi.clone()));
                    BoolForm::atom(Dir::Child1, s)
                }
                // call/end cannot occur below a matched call in an execution
                // tree; the moves are kept anyway
                NodeKind::Ret | NodeKind::Call | NodeKind::End => {
                    self.stay(AState::Form(psi.clone()))
                }
            },
        }
    }

    fn formula_transition(
        &mut self,
        f: &Formula,
        d: NodeKind,
        p: Option<Move>,
        letter: Letter,
    ) -> BoolForm {
        let holds = |ap: &str| -> bool {
            self.prop_bit.get(ap).is_some_and(|b| letter >> 6 & (1 << b) != 0)
        };
        match f {
            Formula::Atom(ap) => {
                if holds(ap) {
                    BoolForm::True
                } else {
                    BoolForm::False
                }
            }
            Formula::Not(inner) => {
                let Formula::Atom(ap) = &**inner else { unreachable!("input is in PNF") };
                if holds(ap) {
                    BoolForm::False
                } else {
                    BoolForm::True
                }
            }
            Formula::Or(a, b) => {
                let fa = self.stay(AState::Form((**a).clone()));
                let fb = self.stay(AState::Form((**b).clone()));
                BoolForm::or(fa, fb)
            }
            Formula::And(a, b) => {
                let fa = self.stay(AState::Form((**a).clone()));
                let fb = self.stay(AState::Form((**b).clone()));
                BoolForm::and(fa, fb)
            }
            Formula::Var(x) => self.stay(AState::Form(self.fps[x].clone())),
            Formula::Mu(_, body) | Formula::Nu(_, body) => {
                self.stay(AState::Form((**body).clone()))
            }
            Formula::Next(s, psi) | Formula::DualNext(s, psi) => {
                // a dual moves to true where the successor is undefined
                let dead = if matches!(f, Formula::DualNext(..)) {
                    BoolForm::True
                } else {
                    BoolForm::False
                };
                let psi = (**psi).clone();
                let down0 = |b: &mut Self| {
                    let q = b.intern(AState::Form(psi.clone()));
                    BoolForm::atom(Dir::Child0, q)
                };
                let down1 = |b: &mut Self| {
                    let q = b.intern(AState::Form(psi.clone()));
                    BoolForm::atom(Dir::Child1, q)
                };
                let up_to = |b: &mut Self, st: AState| {
                    let q = b.intern(st);
                    BoolForm::atom(Dir::Up, q)
                };
                match s {
                    SuccessorType::Global => match d {
                        NodeKind::Int | NodeKind::Call | NodeKind::CallRet | NodeKind::Spawn => {
                            down0(self)
                        }
                        // the successor of a return lives at the caller's
                        // abstract successor; on execution trees the detour is
                        // always defined, so the dual shares it
                        NodeKind::Ret => self.stay(AState::Form(Formula::next(
                            SuccessorType::Caller,
                            Formula::next(SuccessorType::Abstract, psi.clone()),
                        ))),
                        NodeKind::End => dead,
                    },
                    SuccessorType::Abstract => match d {
                        NodeKind::Int | NodeKind::Spawn => down0(self),
                        NodeKind::CallRet => down1(self),
                        NodeKind::Call | NodeKind::Ret | NodeKind::End => dead,
                    },
                    SuccessorType::Caller => match p {
                        Some(Move::Call) => up_to(self, AState::Form(psi.clone())),
                        Some(Move::Int) | Some(Move::Ret) => up_to(self, AState::Form(f.clone())),
                        Some(Move::Spawn) | None => dead,
                    },
                    SuccessorType::Parent => match p {
                        Some(Move::Spawn) => up_to(self, AState::Form(psi.clone())),
                        Some(Move::Int) | Some(Move::Call) | Some(Move::Ret) => {
                            up_to(self, AState::Form(f.clone()))
                        }
                        None => dead,
                    },
                    SuccessorType::Child => match d {
                        NodeKind::Spawn => down1(self),
                        _ => dead,
                    },
                    SuccessorType::Up => match p {
                        Some(Move::Int) | Some(Move::Call) => up_to(self, AState::Form(psi.clone())),
                        Some(Move::Ret) => up_to(self, AState::CallPair(psi.clone())),
                        Some(Move::Spawn) | None => dead,
                    },
                }
            }
        }
    }
}

/// The two-way alternating automaton of a closed, well-formed PNF formula.
/// Atoms over propositions outside the universe are unsatisfiable on labels
/// over that universe, so they become `false` (and their negations `true`).
pub fn build_formula_automaton(
    phi: &Formula,
    alphabet: Alphabet,
) -> Result<TwoWayAta, ConstructError> {
    check_closed(phi).map_err(|errs| {
        ConstructError::IllFormed(
            errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "),
        )
    })?;
    if !phi.is_pnf() {
        return Err(ConstructError::NotPnf);
    }
    let pa = assign_priorities(phi);
    let mut fps: BTreeMap<String, Formula> = BTreeMap::new();
    for sf in crate::formula::subformulae(phi) {
        if let Formula::Mu(x, _) | Formula::Nu(x, _) = &sf {
            fps.insert(x.clone(), sf.clone());
        }
    }
    let prop_bit: BTreeMap<String, u32> = alphabet
        .props()
        .iter()
        .enumerate()
        .map(|(i, p)| (p.clone(), i as u32))
        .collect();
    let letters: Vec<Letter> = alphabet.letters().collect();

    let mut b = AtaBuilder {
        ata: TwoWayAta::new(alphabet),
        ids: BTreeMap::new(),
        pending: VecDeque::new(),
        pa: &pa,
        fps: &fps,
        prop_bit: &prop_bit,
    };
    b.intern(AState::Form(phi.clone()));
    while let Some(st) = b.pending.pop_front() {
        let q = b.ids[&st];
        for &letter in &letters {
            let form = b.transition(&st, letter);
            b.ata.set_transition(q, letter, form);
        }
    }
    Ok(b.ata)
}

/// The one-way nondeterministic formula automaton: dealternation of the
/// alternating automaton, intersected with the validity automaton so that
/// only representations of execution graphs survive.
pub fn build_formula_npta(
    phi: &Formula,
    alphabet: Alphabet,
    state_cap: usize,
) -> Result<Npta, ConstructError> {
    let ata = build_formula_automaton(phi, alphabet.clone())?;
    let one_way = dealternate(&ata, state_cap)?;
    let et = build_exec_tree_automaton(alphabet);
    Ok(one_way.intersect(&et)?)
}

/// As [`build_formula_npta`], but dealternated over a restricted letter set.
/// Exact for intersections with automata whose runs only realize those
/// letters, such as the model automaton of a DPN.
pub fn build_formula_npta_restricted(
    phi: &Formula,
    alphabet: Alphabet,
    letters: &[Letter],
    state_cap: usize,
) -> Result<Npta, ConstructError> {
    let ata = build_formula_automaton(phi, alphabet.clone())?;
    let one_way = dealternate_restricted(&ata, state_cap, letters)?;
    let et = build_exec_tree_automaton(alphabet);
    Ok(one_way.intersect(&et)?)
}

/// The model automaton: accepts the tree representations of the DPN's
/// execution graphs among all valid execution trees. States carry the head
/// and the return obligation guessed at the enclosing matched call; the
/// acceptance condition is trivial.
pub fn build_dpn_automaton(m: &Dpn, alphabet: Alphabet) -> Npta {
    let locs: Vec<&String> = m.locations.iter().collect();
    let syms: Vec<&String> = m.stack.iter().collect();
    let heads: Vec<(String, String)> = locs
        .iter()
        .flat_map(|s| syms.iter().map(|g| ((*s).clone(), (*g).clone())))
        .collect();
    let head_idx: BTreeMap<(String, String), usize> =
        heads.iter().cloned().enumerate().map(|(i, h)| (h, i)).collect();
    let n_obl = heads.len() + 1; // obligation 0 is "no return owed"
    let id = |s: &str, g: &str, c: Option<&(String, String)>| -> usize {
        let h = head_idx[&(s.to_string(), g.to_string())];
        let c = match c {
            None => 0,
            Some(h) => head_idx[h] + 1,
        };
        h * n_obl + c
    };

    let mut a = Npta::new(alphabet);
    for (s, g) in &heads {
        a.add_state(format!("({s},{g},bot)"), 0);
        for (sr, gr) in &heads {
            a.add_state(format!("({s},{g},{sr} {gr})"), 0);
        }
    }
    a.initial = id(&m.init_location, &m.init_symbol, None);

    let ret_rules: Vec<(&String, &String, &String)> = m
        .rules
        .iter()
        .filter_map(|r| match r {
            Rule::Ret { s, g, s2 } => Some((s, g, s2)),
            _ => None,
        })
        .collect();

    for (s, g) in &heads {
        let label = m.label_of_head(s, g);
        // letters whose proposition set is exactly the head's label
        let mut subset = 0u32;
        let mut ok = true;
        for prop in &label {
            match a.alphabet.props().binary_search(prop) {
                Ok(i) => subset |= 1 << i,
                Err(_) => ok = false, // label outside the universe: no letters match
            }
        }
        if !ok {
            continue;
        }
        let rules: Vec<&Rule> =
            m.rules.iter().filter(|r| r.head() == (s.as_str(), g.as_str())).collect();
        let obligations: Vec<Option<&(String, String)>> =
            std::iter::once(None).chain(heads.iter().map(Some)).collect();
        for kind in NodeKind::ALL {
            for pred in 0..5u32 {
                let letter: Letter = (subset << 3 | kind as u32) << 3 | pred;
                for &c in &obligations {
                    let q = id(s, g, c);
                    match kind {
                        NodeKind::Int => {
                            for r in &rules {
                                if let Rule::Int { s2, g2, .. } = r {
                                    a.add_transition(q, letter, vec![id(s2, g2, c)]);
                                }
                            }
                        }
                        // an unmatched call never discharges a pending
                        // obligation, so it is only allowed without one
                        NodeKind::Call if c.is_none() => {
                            for r in &rules {
                                if let Rule::Call { s2, g2, .. } = r {
                                    a.add_transition(q, letter, vec![id(s2, g2, None)]);
                                }
                            }
                        }
                        NodeKind::CallRet => {
                            for r in &rules {
                                if let Rule::Call { s2, g2, g3, .. } = r {
                                    for (sr, gr, s_after) in &ret_rules {
                                        let obligation = ((*sr).clone(), (*gr).clone());
                                        a.add_transition(
                                            q,
                                            letter,
                                            vec![
                                                id(s2, g2, Some(&obligation)),
                                                id(s_after, g3, c),
                                            ],
                                        );
                                    }
                                }
                            }
                        }
                        NodeKind::Spawn => {
                            for r in &rules {
                                if let Rule::Spawn { s2, g2, sn, gn, .. } = r {
                                    a.add_transition(
                                        q,
                                        letter,
                                        vec![id(s2, g2, c), id(sn, gn, None)],
                                    );
                                }
                            }
                        }
                        NodeKind::Ret => {
                            if c == Some(&(s.clone(), g.clone())) {
                                a.add_transition(q, letter, vec![]);
                            }
                        }
                        NodeKind::End => {
                            if c.is_none() && rules.is_empty() {
                                a.add_transition(q, letter, vec![]);
                            }
                        }
                        _ => {}
                    }
                }
            }
        }
    }
    a
}

/// Build a DPN whose graph semantics is the singleton encoded by the given
/// regular execution tree: one control location, one stack symbol per tree
/// class, and the unique rule each class shape dictates.
pub fn synthesize_dpn(t: &RegularTree) -> Result<Dpn, ConstructError> {
    t.validate()?;
    let alphabet = Alphabet::new(t.propositions());
    let et = build_exec_tree_automaton(alphabet);
    if !et.membership_regular(t)? {
        return Err(ConstructError::NotExecutionTree);
    }
    let loc = "s".to_string();
    let sym = |i: usize| format!("x{i}");
    let mut rules = Vec::new();
    let mut labels = BTreeMap::new();
    for (i, l) in t.labels.iter().enumerate() {
        if !l.props.is_empty() {
            labels.insert((loc.clone(), sym(i)), l.props.clone());
        }
        let child = |d: usize| sym(t.children[i][d]);
        match l.kind {
            NodeKind::Int => rules.push(Rule::Int {
                s: loc.clone(),
                g: sym(i),
                s2: loc.clone(),
                g2: child(0),
            }),
            NodeKind::Spawn => rules.push(Rule::Spawn {
                s: loc.clone(),
                g: sym(i),
                s2: loc.clone(),
                g2: child(0),
                sn: loc.clone(),
                gn: child(1),
            }),
            NodeKind::CallRet => rules.push(Rule::Call {
                s: loc.clone(),
                g: sym(i),
                s2: loc.clone(),
                g2: child(0),
                g3: child(1),
            }),
            // an unmatched call re-pushes its own symbol as the (never
            // popped) return frame
            NodeKind::Call => rules.push(Rule::Call {
                s: loc.clone(),
                g: sym(i),
                s2: loc.clone(),
                g2: child(0),
                g3: sym(i),
            }),
            NodeKind::Ret => rules.push(Rule::Ret { s: loc.clone(), g: sym(i), s2: loc.clone() }),
            NodeKind::End => {}
        }
    }
    rules.sort();
    Ok(Dpn {
        locations: BTreeSet::from([loc.clone()]),
        stack: (0..t.labels.len()).map(sym).collect(),
        init_location: loc,
        init_symbol: sym(t.root),
        rules,
        labels,
    })
}
