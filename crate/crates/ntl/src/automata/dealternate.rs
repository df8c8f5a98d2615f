//! Dealternation: two-way alternating parity tree automata into
//! nondeterministic ones.
//!
//! A nondeterministic run labels every tree node with (E, R, w):
//!
//!  * E — the states in which the alternating run enters the node from its
//!    parent;
//!  * R — the promised "excursions": triples (q, c, q') stating that from
//!    state q at this node the run may dip into the subtree and re-emerge at
//!    the parent in state q', seeing minimal priority c along the way;
//!  * w — the state of a deterministic word automaton (the trace checker)
//!    that follows the branch and rejects when some trace of the alternating
//!    run through the guessed annotations has odd minimal priority.
//!
//! A transition first eliminates stationary atoms from the alternating
//! transition formulas (guardedness makes those acyclic), then guesses one
//! satisfying atom set per live state and per-child excursion promises, and
//! checks that the induced same-node detour relation is consistent: no
//! odd-priority detour returns to the state it started from (such a detour
//! could be repeated forever), the live-state set is exactly the entry set
//! closed under detours, and the promises handed to the parent match.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::rc::Rc;

use super::alphabet::{arity_of, Letter};
use super::ata::{BoolForm, Dir, TwoWayAta};
use super::npta::{AutomatonError, Npta};
use super::words::{Determinizer, NbwSource};

/// Per-transition enumeration width cap: 2^width candidate promise subsets.
const MAX_PROMISE_CANDIDATES: usize = 32;

#[cfg(feature = "trace-dealternate")]
thread_local! {
    static DFS_NODES: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
    static LEAVES: std::cell::Cell<u64> = const { std::cell::Cell::new(0) };
}

type Atom = (Dir, usize, u32);
/// (source state, minimal priority, target state)
type Edge = (usize, u32, usize);

/// One satisfying atom set of an eliminated transition formula, split by
/// direction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Model {
    downs: [Vec<(usize, u32)>; 2],
    ups: Vec<(usize, u32)>,
}

/// Nondeterministic Büchi automaton over detour-step relations accepting the
/// branches that carry some trace with odd minimal priority. States `0..n`
/// track a trace before committing to a priority; afterwards the state also
/// records the guessed odd priority and whether the last step hit it.
struct TraceNbw {
    n: usize,
    odds: Vec<u32>,
    init: usize,
}

type TraceLetter = Rc<Vec<Edge>>;

impl TraceNbw {
    fn guessed(&self, q: usize, oi: usize, hit: bool) -> usize {
        self.n + (q * self.odds.len() + oi) * 2 + hit as usize
    }
}

impl NbwSource for TraceNbw {
    type Letter = TraceLetter;

    fn len(&self) -> usize {
        self.n + self.n * self.odds.len() * 2
    }

    fn initial(&self) -> Vec<usize> {
        vec![self.init]
    }

    fn accepting(&self, q: usize) -> bool {
        q >= self.n && (q - self.n) % 2 == 1
    }

    fn successors(&self, q: usize, letter: &TraceLetter) -> Vec<usize> {
        let mut out = Vec::new();
        if q < self.n {
            for &(a, _, b) in letter.iter() {
                if a != q {
                    continue;
                }
                out.push(b);
                // commit to an odd priority from the next step onwards
                for oi in 0..self.odds.len() {
                    out.push(self.guessed(b, oi, false));
                }
            }
        } else {
            let rest = q - self.n;
            let hitless = rest / 2;
            let oi = hitless % self.odds.len();
            let src = hitless / self.odds.len();
            let p = self.odds[oi];
            for &(a, c, b) in letter.iter() {
                if a == src && c >= p {
                    out.push(self.guessed(b, oi, c == p));
                }
            }
        }
        out
    }
}

/// The branch checker: accepts exactly when no trace has odd minimal
/// priority. With no odd priorities in sight it is a single trivial state.
enum Checker {
    Trivial,
    Det(Determinizer<TraceNbw>),
}

impl Checker {
    fn initial(&mut self) -> usize {
        match self {
            Checker::Trivial => 0,
            Checker::Det(d) => d.initial(),
        }
    }

    fn step(&mut self, w: usize, letter: &TraceLetter) -> usize {
        match self {
            Checker::Trivial => 0,
            Checker::Det(d) => d.step(w, letter),
        }
    }

    /// Complemented parity: the determinizer tracks "some odd trace exists",
    /// so shifting by one makes even mean "all traces even".
    fn priority(&self, w: usize) -> u32 {
        match self {
            Checker::Trivial => 0,
            Checker::Det(d) => d.priority(w) + 1,
        }
    }
}

/// Entry states, promised excursions, checker state.
type StateKey = (BTreeSet<usize>, BTreeSet<Edge>, usize);

pub fn dealternate(ata: &TwoWayAta, state_cap: usize) -> Result<Npta, AutomatonError> {
    let letters: Vec<Letter> = ata.alphabet.letters().collect();
    dealternate_restricted(ata, state_cap, &letters)
}

/// Dealternation with transitions built only for the given letters. The
/// result recognizes the same trees as the unrestricted automaton among trees
/// labelled entirely with `letters`; intersecting with an automaton that only
/// realizes those letters (such as a model automaton) is therefore exact while
/// skipping the often-dominant work on letters that can never occur.
pub fn dealternate_restricted(
    ata: &TwoWayAta,
    state_cap: usize,
    letters: &[Letter],
) -> Result<Npta, AutomatonError> {
    let letters: Vec<Letter> = letters.to_vec();
    let n = ata.len();

    // min-parity acceptance only depends on the relative order and parity of
    // priorities, so compact runs of same-parity values into one: this merges
    // otherwise-identical models and excursion promises. With no odd
    // priorities at all everything collapses to 0.
    let mut prio = ata.priority.clone();
    {
        let distinct: BTreeSet<u32> = prio.iter().copied().collect();
        let mut map: HashMap<u32, u32> = HashMap::new();
        let mut cur = 0;
        for (i, &v) in distinct.iter().enumerate() {
            if i == 0 {
                cur = v % 2;
            } else if v % 2 != cur % 2 {
                cur += 1;
            }
            map.insert(v, cur);
        }
        prio.iter_mut().for_each(|p| *p = map[p]);
    }

    // stationary-atom elimination for every state and letter
    let mut models: Vec<HashMap<Letter, Vec<Model>>> = vec![HashMap::new(); n];
    for q in 0..n {
        for &l in &letters {
            let mut active = vec![false; n];
            let sets = expand(ata, &prio, ata.trans[q].get(&l), l, u32::MAX, &mut active)?;
            models[q].insert(l, to_models(sets, arity_of(l)));
        }
    }

    // letters with identical model tables behave identically; transitions are
    // computed once per class and copied to the other members
    let mut class_index: HashMap<(usize, Vec<Vec<Model>>), usize> = HashMap::new();
    let mut classes: Vec<(Letter, Vec<Letter>)> = Vec::new();
    for &l in &letters {
        let sig = (arity_of(l), (0..n).map(|q| models[q][&l].clone()).collect());
        match class_index.get(&sig) {
            Some(&i) => classes[i].1.push(l),
            None => {
                class_index.insert(sig, classes.len());
                classes.push((l, vec![l]));
            }
        }
    }

    // states reachable by an upward move
    let up_targets: BTreeSet<usize> = models
        .iter()
        .flat_map(|per_letter| per_letter.values())
        .flatten()
        .flat_map(|m| m.ups.iter().map(|&(t, _)| t))
        .collect();

    // which excursions are realizable at all: from state q, descend and
    // re-emerge one level up in state t with minimal priority c — a least
    // fixpoint over the transition structure, ignoring tree shape
    let mut excursions: Vec<BTreeSet<(u32, usize)>> = vec![BTreeSet::new(); n];
    loop {
        let mut changed = false;
        for q in 0..n {
            let mut add: BTreeSet<(u32, usize)> = BTreeSet::new();
            for ms in models[q].values() {
                for m in ms {
                    for &(t, c) in &m.ups {
                        add.insert((c, t));
                    }
                    for dir in 0..2 {
                        for &(s, c1) in &m.downs[dir] {
                            for &(c2, t) in &excursions[s] {
                                for &(c3, t2) in &excursions[t] {
                                    add.insert((c1.min(c2).min(c3), t2));
                                }
                            }
                        }
                    }
                }
            }
            for e in add {
                changed |= excursions[q].insert(e);
            }
        }
        if !changed {
            break;
        }
    }

    let pvals: Vec<u32> = {
        let mut v = prio.clone();
        v.sort_unstable();
        v.dedup();
        v
    };
    assert!(pvals.len() <= 16, "priority masks are 16 bits wide");
    let odds: Vec<u32> = pvals.iter().copied().filter(|p| p % 2 == 1).collect();
    let mut checker = if odds.is_empty() {
        Checker::Trivial
    } else {
        Checker::Det(Determinizer::new(TraceNbw { n, odds, init: ata.initial }))
    };

    let mut out = Npta::new(ata.alphabet.clone());
    let mut ids: HashMap<StateKey, usize> = HashMap::new();
    let mut keys: Vec<StateKey> = Vec::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let w0 = checker.initial();
    let root: StateKey = (BTreeSet::from([ata.initial]), BTreeSet::new(), w0);
    let root_prio = checker.priority(w0);
    ids.insert(root.clone(), out.add_state(key_name(&root), root_prio));
    keys.push(root);
    queue.push_back(0);

    while let Some(id) = queue.pop_front() {
        let (entry, promises, w) = keys[id].clone();
        for (l, members) in &classes {
            let l = *l;
            let arity = arity_of(l);
            let mut disjuncts: BTreeSet<Vec<usize>> = BTreeSet::new();
            // live states: entries plus a guessed set of detour returns;
            // candidates are limited to excursion targets actually reachable
            // from the entries through downward model atoms
            let mut possible = entry.clone();
            loop {
                let mut grew = false;
                for q in possible.clone() {
                    for m in &models[q][&l] {
                        for downs in &m.downs {
                            for &(r, _) in downs {
                                for &(_, t) in &excursions[r] {
                                    if up_targets.contains(&t) {
                                        grew |= possible.insert(t);
                                    }
                                }
                            }
                        }
                    }
                }
                if !grew {
                    break;
                }
            }
            let extra: Vec<usize> =
                possible.iter().copied().filter(|t| !entry.contains(t)).collect();
            for xmask in 0u32..1 << extra.len() {
                let mut live: Vec<usize> = entry.iter().copied().collect();
                for (i, &t) in extra.iter().enumerate() {
                    if xmask >> i & 1 == 1 {
                        live.push(t);
                    }
                }
                live.sort_unstable();
                let per_state: Vec<&Vec<Model>> =
                    live.iter().map(|&q| &models[q][&l]).collect();
                if per_state.iter().any(|ms| ms.is_empty()) {
                    continue;
                }
                let mut pick = vec![0usize; live.len()];
                loop {
                    let chosen: Vec<&Model> =
                        pick.iter().zip(&per_state).map(|(&i, ms)| &ms[i]).collect();
                    expand_disjuncts(
                        &entry,
                        &promises,
                        w,
                        &live,
                        &chosen,
                        arity,
                        &excursions,
                        &pvals,
                        &mut checker,
                        &mut out,
                        &mut ids,
                        &mut keys,
                        &mut queue,
                        &mut disjuncts,
                        state_cap,
                    )?;
                    // advance the model choice counters
                    let mut i = 0;
                    loop {
                        if i == pick.len() {
                            break;
                        }
                        pick[i] += 1;
                        if pick[i] < per_state[i].len() {
                            break;
                        }
                        pick[i] = 0;
                        i += 1;
                    }
                    if i == pick.len() {
                        break;
                    }
                }
            }
            #[cfg(feature = "trace-dealternate")]
            if disjuncts.len() > 10_000 {
                eprintln!(
                    "state {id} class {l}: {} distinct disjuncts; entry {entry:?} promises {promises:?} extra {extra:?} pvals {pvals:?}",
                    disjuncts.len(),
                );
            }
            for conj in disjuncts {
                for &member in members {
                    out.add_transition(id, member, conj.clone());
                }
            }
        }
    }
    Ok(out)
}

/// The consistency analysis of one (possibly partial) promise guess. The
/// detour closure is a |live|×|live| matrix of priority-index bitmasks, the
/// handed promises a set of edges, and `reached` a bitmask of live indices
/// reachable from the entries by detours. All three grow monotonically with
/// the promise sets, which is what makes prefix pruning sound.
struct Analysis {
    closure: Vec<u16>,
    handed: BTreeSet<Edge>,
    reached: u128,
}

/// The set of minimal priorities of composed detour pairs: bit i is set iff
/// some c1 ∈ m1, c2 ∈ m2 have min(c1,c2) = i.
fn compose_masks(m1: u16, m2: u16) -> u16 {
    let mut out = 0;
    for i in 0..16 {
        if m1 >> i & 1 == 1 && m2 >> i != 0 {
            out |= 1 << i;
        }
        if m2 >> i & 1 == 1 && m1 >> i != 0 {
            out |= 1 << i;
        }
    }
    out
}

/// Context shared across the promise-guess search for one model choice.
struct GuessCtx<'a> {
    promises: &'a BTreeSet<Edge>,
    w: usize,
    live: &'a [usize],
    chosen: &'a [&'a Model],
    arity: usize,
    child_entries: Vec<BTreeSet<usize>>,
    /// flattened candidates as (child index, excursion promise)
    flat: Vec<(usize, Edge)>,
    /// ascending distinct priority values; masks index into this
    pvals: &'a [u32],
    /// bits of pvals holding an odd priority
    odd_mask: u16,
    /// live indices that are entry states
    entry_mask: u128,
    /// downward model atoms per child as (target state, source live index,
    /// priority index)
    downs_by_child: Vec<Vec<(usize, usize, usize)>>,
    /// upward model atoms as (source live index, priority index, target)
    ups_idx: Vec<(usize, usize, usize)>,
}

impl GuessCtx<'_> {
    fn pidx(&self, c: u32) -> usize {
        self.pvals.binary_search(&c).expect("priority from the automaton")
    }

    fn analyze(&self, child_promises: &[BTreeSet<Edge>]) -> Analysis {
        let k = self.live.len();
        // same-node detours induced by the guess: descend via a model atom,
        // then follow a promised excursion of that child
        let mut detours = vec![0u16; k * k];
        for i in 0..self.arity {
            for &(r, c2, t) in &child_promises[i] {
                let ti = self.live.binary_search(&t).expect("promise returns into live");
                let c2i = self.pidx(c2);
                for &(r2, a, c1i) in &self.downs_by_child[i] {
                    if r2 == r {
                        detours[a * k + ti] |= 1 << c1i.min(c2i);
                    }
                }
            }
        }
        // transitive closure with minimal priorities
        let mut closure = detours.clone();
        loop {
            let mut changed = false;
            for a in 0..k {
                for b in 0..k {
                    let m1 = closure[a * k + b];
                    if m1 == 0 {
                        continue;
                    }
                    for d in 0..k {
                        let m2 = detours[b * k + d];
                        if m2 == 0 {
                            continue;
                        }
                        let grown = compose_masks(m1, m2) & !closure[a * k + d];
                        if grown != 0 {
                            closure[a * k + d] |= grown;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let mut reached = self.entry_mask;
        for a in 0..k {
            if self.entry_mask >> a & 1 == 0 {
                continue;
            }
            for b in 0..k {
                if closure[a * k + b] != 0 {
                    reached |= 1 << b;
                }
            }
        }

        // promises handed to the parent: either a direct upward move from an
        // entry state, or detours followed by one
        let mut handed: BTreeSet<Edge> = BTreeSet::new();
        for &(a, ci, t) in &self.ups_idx {
            if self.entry_mask >> a & 1 == 1 {
                handed.insert((self.live[a], self.pvals[ci], t));
            }
        }
        for a in 0..k {
            if self.entry_mask >> a & 1 == 0 {
                continue;
            }
            for &(b, cj, u) in &self.ups_idx {
                let m = closure[a * k + b];
                for i in 0..16 {
                    if m >> i & 1 == 1 {
                        handed.insert((self.live[a], self.pvals[i.min(cj)], u));
                    }
                }
            }
        }
        Analysis { closure, handed, reached }
    }

    /// Whether a partial guess is already doomed: an odd-priority self-detour
    /// (repeatable forever, losing the parity game), or a handed promise the
    /// parent state does not carry. Both conditions persist in supersets.
    fn violated(&self, a: &Analysis) -> bool {
        let k = self.live.len();
        (0..k).any(|x| a.closure[x * k + x] & self.odd_mask != 0)
            || !a.handed.is_subset(self.promises)
    }
}

/// Enumerate promise subsets for one fixed model choice and record the
/// consistent child-state tuples. The subsets are searched as an
/// include/exclude tree, abandoning a branch as soon as the partial guess is
/// monotonically doomed.
#[allow(clippy::too_many_arguments)]
fn expand_disjuncts(
    entry: &BTreeSet<usize>,
    promises: &BTreeSet<Edge>,
    w: usize,
    live: &[usize],
    chosen: &[&Model],
    arity: usize,
    excursions: &[BTreeSet<(u32, usize)>],
    pvals: &[u32],
    checker: &mut Checker,
    out: &mut Npta,
    ids: &mut HashMap<StateKey, usize>,
    keys: &mut Vec<StateKey>,
    queue: &mut VecDeque<usize>,
    disjuncts: &mut BTreeSet<Vec<usize>>,
    state_cap: usize,
) -> Result<(), AutomatonError> {
    if live.len() > 128 {
        return Err(AutomatonError::StateBudget(out.len()));
    }
    let live_btree: BTreeSet<usize> = live.iter().copied().collect();
    let pidx = |c: u32| pvals.binary_search(&c).expect("priority from the automaton");

    let mut entry_mask = 0u128;
    for (a, &q) in live.iter().enumerate() {
        if entry.contains(&q) {
            entry_mask |= 1 << a;
        }
    }
    let odd_mask: u16 =
        pvals.iter().enumerate().filter(|(_, p)| *p % 2 == 1).map(|(i, _)| 1 << i).sum();

    let ups_idx: Vec<(usize, usize, usize)> = live
        .iter()
        .enumerate()
        .flat_map(|(a, _)| chosen[a].ups.iter().map(move |&(t, c)| (a, pidx(c), t)))
        .collect();
    let downs_by_child: Vec<Vec<(usize, usize, usize)>> = (0..arity)
        .map(|i| {
            live.iter()
                .enumerate()
                .flat_map(|(a, _)| chosen[a].downs[i].iter().map(move |&(r, c)| (r, a, pidx(c))))
                .collect()
        })
        .collect();

    // entry sets of the children
    let child_entries: Vec<BTreeSet<usize>> =
        (0..arity).map(|i| downs_by_child[i].iter().map(|&(r, _, _)| r).collect()).collect();

    // candidate promises per child: abstractly realizable excursions whose
    // return state is live here
    let flat: Vec<(usize, Edge)> = child_entries
        .iter()
        .enumerate()
        .flat_map(|(i, es)| {
            es.iter()
                .flat_map(|&r| {
                    excursions[r]
                        .iter()
                        .filter(|&&(_, t)| live_btree.contains(&t))
                        .map(move |&(c, t)| (r, c, t))
                })
                .map(move |e| (i, e))
                .collect::<Vec<_>>()
        })
        .collect();

    let ctx = GuessCtx {
        promises,
        w,
        live,
        chosen,
        arity,
        child_entries,
        flat,
        pvals,
        odd_mask,
        entry_mask,
        downs_by_child,
        ups_idx,
    };

    // a candidate that already breaks a monotone condition on its own can
    // never be part of a valid subset
    let flat: Vec<(usize, Edge)> = ctx
        .flat
        .iter()
        .copied()
        .filter(|&(i, e)| {
            let mut single: Vec<BTreeSet<Edge>> = vec![BTreeSet::new(); arity];
            single[i].insert(e);
            !ctx.violated(&ctx.analyze(&single))
        })
        .collect();
    if flat.len() > MAX_PROMISE_CANDIDATES {
        return Err(AutomatonError::StateBudget(out.len()));
    }
    let ctx = GuessCtx { flat, ..ctx };

    let mut child_promises: Vec<BTreeSet<Edge>> = vec![BTreeSet::new(); arity];
    let empty_guess = ctx.analyze(&child_promises);
    if ctx.violated(&empty_guess) {
        return Ok(());
    }
    search(
        &ctx,
        0,
        &mut child_promises,
        &empty_guess,
        checker,
        out,
        ids,
        keys,
        queue,
        disjuncts,
        state_cap,
    )
}

#[allow(clippy::too_many_arguments)]
fn search(
    ctx: &GuessCtx,
    next: usize,
    child_promises: &mut Vec<BTreeSet<Edge>>,
    a: &Analysis,
    checker: &mut Checker,
    out: &mut Npta,
    ids: &mut HashMap<StateKey, usize>,
    keys: &mut Vec<StateKey>,
    queue: &mut VecDeque<usize>,
    disjuncts: &mut BTreeSet<Vec<usize>>,
    state_cap: usize,
) -> Result<(), AutomatonError> {
    #[cfg(feature = "trace-dealternate")]
    {
        DFS_NODES.with(|c| {
            let v = c.get() + 1;
            c.set(v);
            if v % 1_000_000 == 0 {
                eprintln!(
                    "dfs nodes: {}M (flat {}, live {}, leaves {})",
                    v / 1_000_000,
                    ctx.flat.len(),
                    ctx.live.len(),
                    LEAVES.with(|l| l.get())
                );
            }
        });
    }
    let full: u128 =
        if ctx.live.len() == 128 { u128::MAX } else { (1 << ctx.live.len()) - 1 };
    if next < ctx.flat.len() {
        // even including every remaining candidate, the guess must still be
        // able to hand over all promises and reach all live states — both
        // quantities only grow with more candidates
        let mut ub = child_promises.clone();
        for &(i, e) in &ctx.flat[next..] {
            ub[i].insert(e);
        }
        let a_ub = ctx.analyze(&ub);
        if a_ub.reached != full || !ctx.promises.is_subset(&a_ub.handed) {
            return Ok(());
        }
    }
    if next == ctx.flat.len() {
        // the guess must account for the full state: the live set is exactly
        // the entries closed under detours, the handed promises exactly the
        // promised ones
        if a.reached != full || a.handed != *ctx.promises {
            return Ok(());
        }
        #[cfg(feature = "trace-dealternate")]
        LEAVES.with(|l| l.set(l.get() + 1));
        if let Some(conj) =
            intern_children(ctx, &a, child_promises, checker, out, ids, keys, queue, state_cap)?
        {
            disjuncts.insert(conj);
        }
        return Ok(());
    }
    // without the candidate (nothing changed, the analysis carries over)
    search(ctx, next + 1, child_promises, a, checker, out, ids, keys, queue, disjuncts, state_cap)?;
    // with it
    let (i, e) = ctx.flat[next];
    if child_promises[i].insert(e) {
        let a2 = ctx.analyze(child_promises);
        if !ctx.violated(&a2) {
            search(
                ctx,
                next + 1,
                child_promises,
                &a2,
                checker,
                out,
                ids,
                keys,
                queue,
                disjuncts,
                state_cap,
            )?;
        }
        child_promises[i].remove(&e);
    }
    Ok(())
}

/// Intern the child states of one validated guess and return the conjunct.
#[allow(clippy::too_many_arguments)]
fn intern_children(
    ctx: &GuessCtx,
    a: &Analysis,
    child_promises: &[BTreeSet<Edge>],
    checker: &mut Checker,
    out: &mut Npta,
    ids: &mut HashMap<StateKey, usize>,
    keys: &mut Vec<StateKey>,
    queue: &mut VecDeque<usize>,
    state_cap: usize,
) -> Result<Option<Vec<usize>>, AutomatonError> {
    let k = ctx.live.len();
    // the per-child trace-step relations: entry state, optional detours,
    // then a downward model atom
    let mut conj = Vec::with_capacity(ctx.arity);
    for i in 0..ctx.arity {
        let mut step: BTreeSet<Edge> = BTreeSet::new();
        for (x, &q) in ctx.live.iter().enumerate() {
            if ctx.entry_mask >> x & 1 == 0 {
                continue;
            }
            for &(r, c) in &ctx.chosen[x].downs[i] {
                step.insert((q, c, r));
            }
            for b in 0..k {
                let m = a.closure[x * k + b];
                if m == 0 {
                    continue;
                }
                for &(r, cb) in &ctx.chosen[b].downs[i] {
                    let cbi = ctx.pidx(cb);
                    for j in 0..16 {
                        if m >> j & 1 == 1 {
                            step.insert((q, ctx.pvals[j.min(cbi)], r));
                        }
                    }
                }
            }
        }
        let letter: TraceLetter = Rc::new(step.into_iter().collect());
        let wi = checker.step(ctx.w, &letter);
        let key: StateKey = (ctx.child_entries[i].clone(), child_promises[i].clone(), wi);
        let id = match ids.get(&key) {
            Some(&id) => id,
            None => {
                let id = out.add_state(key_name(&key), checker.priority(wi));
                if out.len() > state_cap {
                    return Err(AutomatonError::StateBudget(out.len()));
                }
                ids.insert(key.clone(), id);
                keys.push(key);
                queue.push_back(id);
                id
            }
        };
        conj.push(id);
    }
    Ok(Some(conj))
}

fn key_name((entry, promises, w): &StateKey) -> String {
    let es: Vec<String> = entry.iter().map(|q| q.to_string()).collect();
    format!("{{{}}}|{}|w{}", es.join(","), promises.len(), w)
}

/// Eliminate stationary atoms from a transition formula, returning the
/// satisfying atom sets with each atom carrying the minimal priority of the
/// states passed through on the way (including the atom's target).
fn expand(
    ata: &TwoWayAta,
    prio: &[u32],
    form: Option<&BoolForm>,
    letter: Letter,
    cur: u32,
    active: &mut Vec<bool>,
) -> Result<Vec<BTreeSet<Atom>>, AutomatonError> {
    let Some(form) = form else {
        return Ok(Vec::new());
    };
    match form {
        BoolForm::True => Ok(vec![BTreeSet::new()]),
        BoolForm::False => Ok(Vec::new()),
        BoolForm::Atom(Dir::Stay, q2) => {
            if active[*q2] {
                return Err(AutomatonError::NotGuarded);
            }
            active[*q2] = true;
            let r = expand(
                ata,
                prio,
                ata.trans[*q2].get(&letter),
                letter,
                cur.min(prio[*q2]),
                active,
            );
            active[*q2] = false;
            r
        }
        BoolForm::Atom(d, q2) => Ok(vec![BTreeSet::from([(*d, *q2, cur.min(prio[*q2]))])]),
        BoolForm::Or(a, b) => {
            let mut sets = expand(ata, prio, Some(a), letter, cur, active)?;
            sets.extend(expand(ata, prio, Some(b), letter, cur, active)?);
            Ok(sets)
        }
        BoolForm::And(a, b) => {
            let sa = expand(ata, prio, Some(a), letter, cur, active)?;
            let sb = expand(ata, prio, Some(b), letter, cur, active)?;
            let mut sets = Vec::new();
            for x in &sa {
                for y in &sb {
                    sets.push(x.union(y).copied().collect());
                }
            }
            Ok(sets)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{ExecutionTree, Move, NodeKind, RegularTree, TreeLabel};
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeSet;

    fn universe(ps: &[&str]) -> super::super::alphabet::Alphabet {
        super::super::alphabet::Alphabet::new(ps.iter().map(|p| p.to_string()).collect())
    }

    fn label(ps: &[&str], kind: NodeKind, pred: Option<Move>) -> TreeLabel {
        TreeLabel { props: ps.iter().map(|s| s.to_string()).collect(), kind, pred }
    }

    fn chain_tree(props_per_node: &[&[&str]]) -> ExecutionTree {
        let n = props_per_node.len();
        let mut t = ExecutionTree { labels: Vec::new(), children: Vec::new(), parent: Vec::new() };
        for (i, ps) in props_per_node.iter().enumerate() {
            let kind = if i + 1 == n { NodeKind::End } else { NodeKind::Int };
            let pred = if i == 0 { None } else { Some(Move::Int) };
            t.labels.push(label(ps, kind, pred));
            t.children.push([None, None]);
            t.parent.push(if i == 0 { None } else { Some((i - 1, 0)) });
            if i > 0 {
                t.children[i - 1][0] = Some(i);
            }
        }
        t
    }

    #[test]
    fn downward_search_matches() {
        // accept iff p appears somewhere on the leftmost path
        let mut a = TwoWayAta::new(universe(&["p"]));
        let q = a.add_state("search", 1);
        let letters: Vec<Letter> = a.alphabet.letters().collect();
        for l in letters {
            let has_p = a.alphabet.decode_props(l).contains("p");
            let form = if has_p { BoolForm::True } else { BoolForm::atom(Dir::Child0, q) };
            a.set_transition(q, l, form);
        }
        let n = dealternate(&a, 100_000).unwrap();
        for t in [
            chain_tree(&[&[], &[], &["p"]]),
            chain_tree(&[&["p"]]),
            chain_tree(&[&[], &[], &[]]),
            chain_tree(&[&[]]),
        ] {
            assert_eq!(
                n.membership_finite(&t).unwrap(),
                a.membership_finite(&t).unwrap()
            );
        }
    }

    #[test]
    fn up_moves_match() {
        // descend one step, then climb checking p at the root
        let u = universe(&["p"]);
        let mut a = TwoWayAta::new(u);
        let q0 = a.add_state("down", 0);
        let q1 = a.add_state("up-check", 0);
        let letters: Vec<Letter> = a.alphabet.letters().collect();
        for l in &letters {
            a.set_transition(q0, *l, BoolForm::atom(Dir::Child0, q1));
            let has_p = a.alphabet.decode_props(*l).contains("p");
            let form = if has_p { BoolForm::True } else { BoolForm::atom(Dir::Up, q1) };
            a.set_transition(q1, *l, form);
        }
        let n = dealternate(&a, 100_000).unwrap();
        for t in [
            chain_tree(&[&["p"], &[], &[]]),
            chain_tree(&[&[], &["p"], &[]]),
            chain_tree(&[&[], &[], &[]]),
            chain_tree(&[&["p"]]),
        ] {
            assert_eq!(
                n.membership_finite(&t).unwrap(),
                a.membership_finite(&t).unwrap()
            );
        }
    }

    #[test]
    fn self_loop_parity_on_infinite_tree() {
        let int_label = label(&[], NodeKind::Int, Some(Move::Int));
        let lasso = RegularTree { labels: vec![int_label.clone()], children: vec![vec![0]], root: 0 };
        for (prio, expect) in [(0u32, true), (1, false), (2, true), (3, false)] {
            let mut a = TwoWayAta::new(universe(&[]));
            let q = a.add_state("loop", prio);
            let letters: Vec<Letter> = a.alphabet.letters().collect();
            for l in letters {
                a.set_transition(q, l, BoolForm::atom(Dir::Child0, q));
            }
            let n = dealternate(&a, 100_000).unwrap();
            assert_eq!(n.membership_regular(&lasso).unwrap(), expect, "priority {prio}");
        }
    }

    #[test]
    fn recurring_obligation_on_lassos() {
        // "on the leftmost branch, p holds infinitely often": a priority-0
        // state spawning a priority-1 search at every node
        let mut a = TwoWayAta::new(universe(&["p"]));
        let qg = a.add_state("always", 0);
        let qf = a.add_state("eventually-p", 1);
        let letters: Vec<Letter> = a.alphabet.letters().collect();
        for l in letters {
            a.set_transition(
                qg,
                l,
                BoolForm::and(BoolForm::atom(Dir::Stay, qf), BoolForm::atom(Dir::Child0, qg)),
            );
            let has_p = a.alphabet.decode_props(l).contains("p");
            let form = if has_p { BoolForm::True } else { BoolForm::atom(Dir::Child0, qf) };
            a.set_transition(qf, l, form);
        }
        let n = dealternate(&a, 100_000).unwrap();
        let int = |ps: &[&str]| label(ps, NodeKind::Int, Some(Move::Int));
        let with_p = RegularTree {
            labels: vec![int(&[]), int(&["p"])],
            children: vec![vec![1], vec![0]],
            root: 0,
        };
        let without = RegularTree { labels: vec![int(&[])], children: vec![vec![0]], root: 0 };
        assert!(n.membership_regular(&with_p).unwrap());
        assert!(!n.membership_regular(&without).unwrap());
    }

    #[test]
    fn unguarded_cycle_detected() {
        let mut a = TwoWayAta::new(universe(&[]));
        let q = a.add_state("still", 0);
        let l = a.alphabet.letters().next().unwrap();
        a.set_transition(q, l, BoolForm::atom(Dir::Stay, q));
        assert_eq!(dealternate(&a, 100_000).err(), Some(AutomatonError::NotGuarded));
    }

    fn random_form(
        rng: &mut rand_chacha::ChaCha8Rng,
        n: usize,
        q: usize,
        depth: usize,
    ) -> BoolForm {
        if depth > 0 && rng.gen_bool(0.6) {
            let a = random_form(rng, n, q, depth - 1);
            let b = random_form(rng, n, q, depth - 1);
            return if rng.gen_bool(0.5) { BoolForm::or(a, b) } else { BoolForm::and(a, b) };
        }
        match rng.gen_range(0..10) {
            0 => BoolForm::True,
            1 => BoolForm::False,
            r => {
                let target = rng.gen_range(0..n);
                let dir = match r {
                    2 | 3 | 4 => Dir::Child0,
                    5 | 6 => Dir::Child1,
                    // keep stationary atoms acyclic by only pointing forward
                    7 | 8 if q + 1 < n => {
                        return BoolForm::atom(Dir::Stay, rng.gen_range(q + 1..n));
                    }
                    _ => Dir::Up,
                };
                // a single upward target keeps the promise space small
                let target = if dir == Dir::Up { 0 } else { target };
                BoolForm::atom(dir, target)
            }
        }
    }

    fn random_tree(rng: &mut rand_chacha::ChaCha8Rng, budget: &mut usize) -> ExecutionTree {
        let mut t = ExecutionTree { labels: Vec::new(), children: Vec::new(), parent: Vec::new() };
        build_node(rng, budget, &mut t, None);
        t
    }

    fn build_node(
        rng: &mut rand_chacha::ChaCha8Rng,
        budget: &mut usize,
        t: &mut ExecutionTree,
        parent: Option<(usize, u8)>,
    ) -> usize {
        let arity = if *budget == 0 {
            0
        } else {
            *budget -= 1;
            rng.gen_range(0..=2usize.min(*budget + 1)).min(*budget + 1)
        };
        let kind = match arity {
            0 => {
                if rng.gen_bool(0.5) {
                    NodeKind::End
                } else {
                    NodeKind::Ret
                }
            }
            1 => {
                if rng.gen_bool(0.5) {
                    NodeKind::Int
                } else {
                    NodeKind::Call
                }
            }
            _ => {
                if rng.gen_bool(0.5) {
                    NodeKind::Spawn
                } else {
                    NodeKind::CallRet
                }
            }
        };
        let props: BTreeSet<String> =
            if rng.gen_bool(0.5) { BTreeSet::from(["p".to_string()]) } else { BTreeSet::new() };
        let pred = if parent.is_none() { None } else { Some(Move::Int) };
        let id = t.labels.len();
        t.labels.push(TreeLabel { props, kind, pred });
        t.children.push([None, None]);
        t.parent.push(parent);
        for d in 0..arity {
            let c = build_node(rng, budget, t, Some((id, d as u8)));
            t.children[id][d] = Some(c);
        }
        id
    }

    #[test]
    fn matches_alternating_membership_on_random_cases() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for case in 0..40 {
            let n_states = rng.gen_range(1..=3);
            let mut a = TwoWayAta::new(universe(&["p"]));
            for q in 0..n_states {
                a.add_state(format!("s{q}"), rng.gen_range(0..=2));
            }
            a.initial = 0;
            let letters: Vec<Letter> = a.alphabet.letters().collect();
            // formulas depend on the state and on whether p holds
            for q in 0..n_states {
                let with_p = random_form(&mut rng, n_states, q, 2);
                let without = random_form(&mut rng, n_states, q, 2);
                for &l in &letters {
                    let form = if a.alphabet.decode_props(l).contains("p") {
                        with_p.clone()
                    } else {
                        without.clone()
                    };
                    a.set_transition(q, l, form);
                }
            }
            let n = match dealternate(&a, 200_000) {
                Ok(n) => n,
                Err(AutomatonError::StateBudget(_)) => continue,
                Err(e) => panic!("case {case}: {e}"),
            };
            for ti in 0..6 {
                let mut budget = rng.gen_range(1..=6);
                let t = random_tree(&mut rng, &mut budget);
                let expect = a.membership_finite(&t).unwrap();
                let got = n.membership_finite(&t).unwrap();
                assert_eq!(got, expect, "case {case} tree {ti}: {}", t.to_text());
            }
        }
    }
}

/// Keep only minimal satisfying sets that fit the letter's arity, split by
/// direction.
fn to_models(sets: Vec<BTreeSet<Atom>>, arity: usize) -> Vec<Model> {
    let fits = |s: &BTreeSet<Atom>| {
        s.iter().all(|&(d, _, _)| match d {
            Dir::Child0 => arity >= 1,
            Dir::Child1 => arity >= 2,
            Dir::Up => true,
            Dir::Stay => unreachable!("stationary atoms are eliminated"),
        })
    };
    let mut minimal: Vec<BTreeSet<Atom>> = Vec::new();
    for s in sets.into_iter().filter(fits) {
        if minimal.iter().any(|m| m.is_subset(&s) && *m != s) {
            continue;
        }
        minimal.retain(|m| !s.is_subset(m) || *m == s);
        if !minimal.contains(&s) {
            minimal.push(s);
        }
    }
    minimal
        .into_iter()
        .map(|s| {
            let mut m = Model { downs: [Vec::new(), Vec::new()], ups: Vec::new() };
            for (d, q, c) in s {
                match d {
                    Dir::Child0 => m.downs[0].push((q, c)),
                    Dir::Child1 => m.downs[1].push((q, c)),
                    Dir::Up => m.ups.push((q, c)),
                    Dir::Stay => unreachable!(),
                }
            }
            m
        })
        .collect()
}
