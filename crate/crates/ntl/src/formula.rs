//! NTL formulas: concrete syntax, abstract syntax, positive normal form,
//! well-formedness and the parity-priority assignment for fixpoint subformulas.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// The six navigation successor functions on execution graphs.
///
/// `Up` is the global predecessor (written `u` in the concrete syntax),
/// `Caller` is written `-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SuccessorType {
    Global,
    Up,
    Abstract,
    Caller,
    Parent,
    Child,
}

impl SuccessorType {
    pub const ALL: [SuccessorType; 6] = [
        SuccessorType::Global,
        SuccessorType::Up,
        SuccessorType::Abstract,
        SuccessorType::Caller,
        SuccessorType::Parent,
        SuccessorType::Child,
    ];

    pub fn letter(self) -> char {
        match self {
            SuccessorType::Global => 'g',
            SuccessorType::Up => 'u',
            SuccessorType::Abstract => 'a',
            SuccessorType::Caller => '-',
            SuccessorType::Parent => 'p',
            SuccessorType::Child => 'c',
        }
    }

    pub fn from_letter(c: char) -> Option<SuccessorType> {
        Some(match c {
            'g' => SuccessorType::Global,
            'u' => SuccessorType::Up,
            'a' => SuccessorType::Abstract,
            '-' => SuccessorType::Caller,
            'p' => SuccessorType::Parent,
            'c' => SuccessorType::Child,
            _ => return None,
        })
    }
}

/// Designated proposition used to expand `true`/`false` input-independently.
pub const TRUE_PROP: &str = "__t";

/// NTL abstract syntax. Sugar is expanded at parse time, so downstream code
/// only ever sees these nine constructors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Atom(String),
    Not(Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Var(String),
    /// `<f> phi`
    Next(SuccessorType, Box<Formula>),
    /// `[f] phi`, the dual `!<f>!phi`
    DualNext(SuccessorType, Box<Formula>),
    Mu(String, Box<Formula>),
    Nu(String, Box<Formula>),
}

impl Formula {
    pub fn atom(s: &str) -> Formula {
        Formula::Atom(s.to_string())
    }
    pub fn var(s: &str) -> Formula {
        Formula::Var(s.to_string())
    }
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }
    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }
    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }
    pub fn next(f: SuccessorType, p: Formula) -> Formula {
        Formula::Next(f, Box::new(p))
    }
    pub fn dual_next(f: SuccessorType, p: Formula) -> Formula {
        Formula::DualNext(f, Box::new(p))
    }
    pub fn mu(x: &str, p: Formula) -> Formula {
        Formula::Mu(x.to_string(), Box::new(p))
    }
    pub fn nu(x: &str, p: Formula) -> Formula {
        Formula::Nu(x.to_string(), Box::new(p))
    }

    /// `__t | !__t`, the expansion of `true`.
    pub fn tt() -> Formula {
        Formula::or(Formula::atom(TRUE_PROP), Formula::not(Formula::atom(TRUE_PROP)))
    }
    /// `__t & !__t`, the expansion of `false`.
    pub fn ff() -> Formula {
        Formula::and(Formula::atom(TRUE_PROP), Formula::not(Formula::atom(TRUE_PROP)))
    }

    /// All atomic propositions occurring in the formula.
    pub fn propositions(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| {
            if let Formula::Atom(a) = f {
                out.insert(a.clone());
            }
        });
        out
    }

    fn walk(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Atom(_) | Formula::Var(_) => {}
            Formula::Not(p) | Formula::Next(_, p) | Formula::DualNext(_, p) => p.walk(f),
            Formula::Or(a, b) | Formula::And(a, b) => {
                a.walk(f);
                b.walk(f);
            }
            Formula::Mu(_, p) | Formula::Nu(_, p) => p.walk(f),
        }
    }

    pub fn is_pnf(&self) -> bool {
        match self {
            Formula::Atom(_) | Formula::Var(_) => true,
            Formula::Not(p) => matches!(**p, Formula::Atom(_)),
            Formula::Or(a, b) | Formula::And(a, b) => a.is_pnf() && b.is_pnf(),
            Formula::Next(_, p) | Formula::DualNext(_, p) => p.is_pnf(),
            Formula::Mu(_, p) | Formula::Nu(_, p) => p.is_pnf(),
        }
    }
}

/// Free fixpoint variables.
pub fn free_variables(f: &Formula) -> BTreeSet<String> {
    fn go(f: &Formula, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match f {
            Formula::Atom(_) => {}
            Formula::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            Formula::Not(p) | Formula::Next(_, p) | Formula::DualNext(_, p) => go(p, bound, out),
            Formula::Or(a, b) | Formula::And(a, b) => {
                go(a, bound, out);
                go(b, bound, out);
            }
            Formula::Mu(x, p) | Formula::Nu(x, p) => {
                bound.push(x.clone());
                go(p, bound, out);
                bound.pop();
            }
        }
    }
    let mut out = BTreeSet::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

/// The set of (distinct) subformulae; `|phi|` is its size.
pub fn subformulae(f: &Formula) -> BTreeSet<Formula> {
    let mut out = BTreeSet::new();
    f.walk(&mut |g| {
        out.insert(g.clone());
    });
    out
}

fn fresh_name(taken: &BTreeSet<String>, hint: &str) -> String {
    for i in 0.. {
        let cand = format!("__f{i}{hint}");
        if !taken.contains(&cand) {
            return cand;
        }
    }
    unreachable!()
}

/// Capture-avoiding substitution of `psi` for every free occurrence of `x`.
pub fn substitute(f: &Formula, psi: &Formula, x: &str) -> Formula {
    let psi_free = free_variables(psi);
    fn go(f: &Formula, psi: &Formula, x: &str, psi_free: &BTreeSet<String>) -> Formula {
        match f {
            Formula::Atom(_) => f.clone(),
            Formula::Var(y) => {
                if y == x {
                    psi.clone()
                } else {
                    f.clone()
                }
            }
            Formula::Not(p) => Formula::not(go(p, psi, x, psi_free)),
            Formula::Or(a, b) => Formula::or(go(a, psi, x, psi_free), go(b, psi, x, psi_free)),
            Formula::And(a, b) => Formula::and(go(a, psi, x, psi_free), go(b, psi, x, psi_free)),
            Formula::Next(s, p) => Formula::next(*s, go(p, psi, x, psi_free)),
            Formula::DualNext(s, p) => Formula::dual_next(*s, go(p, psi, x, psi_free)),
            Formula::Mu(y, p) | Formula::Nu(y, p) => {
                let is_mu = matches!(f, Formula::Mu(..));
                if y == x {
                    // x is shadowed here; nothing to substitute below.
                    return f.clone();
                }
                let (y2, body) = if psi_free.contains(y) && free_variables(p).contains(x) {
                    // Renaming needed to avoid capturing psi's free y.
                    let mut taken: BTreeSet<String> = free_variables(p);
                    taken.extend(psi_free.iter().cloned());
                    taken.insert(x.to_string());
                    let y2 = fresh_name(&taken, "");
                    let body = go(p, &Formula::Var(y2.clone()), y, &BTreeSet::new());
                    (y2, body)
                } else {
                    (y.clone(), (**p).clone())
                };
                let inner = go(&body, psi, x, psi_free);
                if is_mu {
                    Formula::Mu(y2, Box::new(inner))
                } else {
                    Formula::Nu(y2, Box::new(inner))
                }
            }
        }
    }
    go(f, psi, x, &psi_free)
}

/// Positive normal form: negation pushed down to atoms, using the dual next
/// operators and `nu X. phi = !mu X. !phi[!X/X]`.
pub fn to_pnf(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) | Formula::Var(_) => f.clone(),
        Formula::Or(a, b) => Formula::or(to_pnf(a), to_pnf(b)),
        Formula::And(a, b) => Formula::and(to_pnf(a), to_pnf(b)),
        Formula::Next(s, p) => Formula::next(*s, to_pnf(p)),
        Formula::DualNext(s, p) => Formula::dual_next(*s, to_pnf(p)),
        Formula::Mu(x, p) => Formula::Mu(x.clone(), Box::new(to_pnf(p))),
        Formula::Nu(x, p) => Formula::Nu(x.clone(), Box::new(to_pnf(p))),
        Formula::Not(p) => negate_pnf(p),
    }
}

fn negate_pnf(f: &Formula) -> Formula {
    match f {
        Formula::Atom(_) => Formula::not(f.clone()),
        Formula::Var(x) => Formula::not(Formula::Var(x.clone())),
        Formula::Not(p) => to_pnf(p),
        Formula::Or(a, b) => Formula::and(negate_pnf(a), negate_pnf(b)),
        Formula::And(a, b) => Formula::or(negate_pnf(a), negate_pnf(b)),
        Formula::Next(s, p) => Formula::dual_next(*s, negate_pnf(p)),
        Formula::DualNext(s, p) => Formula::next(*s, negate_pnf(p)),
        Formula::Mu(x, p) => {
            let flipped = substitute(p, &Formula::not(Formula::Var(x.clone())), x);
            Formula::Nu(x.clone(), Box::new(negate_pnf(&flipped)))
        }
        Formula::Nu(x, p) => {
            let flipped = substitute(p, &Formula::not(Formula::Var(x.clone())), x);
            Formula::Mu(x.clone(), Box::new(negate_pnf(&flipped)))
        }
    }
}

/// A single well-formedness violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WfError {
    /// Condition (i): the binder name occurs in more than one fixpoint.
    DuplicateBinder(String),
    /// Condition (ii): a bound occurrence sits under an odd number of
    /// negations inside its fixpoint.
    OddNegations(String),
    /// Condition (iii): a bound occurrence is not guarded by a next operator
    /// inside its fixpoint.
    Unguarded(String),
    /// A variable occurrence with no binder (only reported by the closed check).
    FreeVariable(String),
}

impl fmt::Display for WfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WfError::DuplicateBinder(x) => write!(f, "variable {x} is bound by more than one fixpoint"),
            WfError::OddNegations(x) => write!(f, "bound variable {x} occurs under an odd number of negations"),
            WfError::Unguarded(x) => write!(f, "bound variable {x} is not guarded by a next operator"),
            WfError::FreeVariable(x) => write!(f, "variable {x} is free"),
        }
    }
}

/// Check well-formedness conditions (i)-(iii). Closedness is separate; use
/// [`check_closed`] when a closed formula is required.
pub fn check_well_formed(f: &Formula) -> Result<(), Vec<WfError>> {
    let mut errs = Vec::new();
    // (i) every binder name used at most once
    let mut binders: BTreeMap<String, usize> = BTreeMap::new();
    f.walk(&mut |g| {
        if let Formula::Mu(x, _) | Formula::Nu(x, _) = g {
            *binders.entry(x.clone()).or_insert(0) += 1;
        }
    });
    for (x, n) in &binders {
        if *n > 1 {
            errs.push(WfError::DuplicateBinder(x.clone()));
        }
    }
    // (ii)+(iii): walk each fixpoint body tracking negations and guards
    fn scan(f: &Formula, x: &str, negs: usize, guarded: bool, bad_neg: &mut bool, bad_guard: &mut bool) {
        match f {
            Formula::Atom(_) => {}
            Formula::Var(y) => {
                if y == x {
                    if negs % 2 == 1 {
                        *bad_neg = true;
                    }
                    if !guarded {
                        *bad_guard = true;
                    }
                }
            }
            Formula::Not(p) => scan(p, x, negs + 1, guarded, bad_neg, bad_guard),
            Formula::Or(a, b) | Formula::And(a, b) => {
                scan(a, x, negs, guarded, bad_neg, bad_guard);
                scan(b, x, negs, guarded, bad_neg, bad_guard);
            }
            Formula::Next(_, p) | Formula::DualNext(_, p) => {
                scan(p, x, negs, true, bad_neg, bad_guard)
            }
            Formula::Mu(y, p) | Formula::Nu(y, p) => {
                if y != x {
                    scan(p, x, negs, guarded, bad_neg, bad_guard);
                }
            }
        }
    }
    let mut seen = BTreeSet::new();
    f.walk(&mut |g| {
        if let Formula::Mu(x, p) | Formula::Nu(x, p) = g {
            if !seen.insert((x.clone(), (**p).clone())) {
                return;
            }
            let (mut bad_neg, mut bad_guard) = (false, false);
            scan(p, x, 0, false, &mut bad_neg, &mut bad_guard);
            if bad_neg {
                errs.push(WfError::OddNegations(x.clone()));
            }
            if bad_guard {
                errs.push(WfError::Unguarded(x.clone()));
            }
        }
    });
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Well-formed and closed.
pub fn check_closed(f: &Formula) -> Result<(), Vec<WfError>> {
    let mut errs = match check_well_formed(f) {
        Ok(()) => Vec::new(),
        Err(e) => e,
    };
    for x in free_variables(f) {
        errs.push(WfError::FreeVariable(x));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Priorities for the parity acceptance of the formula automaton.
///
/// Fixpoint subformulas are keyed by their (unique) binder name. All other
/// automaton states receive [`PriorityAssignment::max`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorityAssignment {
    pub by_binder: BTreeMap<String, u32>,
    pub max: u32,
}

impl PriorityAssignment {
    pub fn of_binder(&self, x: &str) -> u32 {
        self.by_binder[x]
    }
}

/// Assign parity priorities to the fixpoint subformulas of a closed,
/// well-formed PNF formula.
///
/// `X < X'` holds when X is free in fp(X'). Along every maximal chain the
/// outermost fixpoint gets 1 if it is a mu, 0 if a nu; the priority is kept
/// while the fixpoint type is unchanged and incremented on a type change.
/// A fixpoint on conflicting chains takes the maximum. Mu-formulas always end
/// up odd and nu-formulas even.
pub fn assign_priorities(f: &Formula) -> PriorityAssignment {
    // Collect fixpoints: binder -> (is_mu, body)
    let mut fps: BTreeMap<String, (bool, Formula)> = BTreeMap::new();
    f.walk(&mut |g| match g {
        Formula::Mu(x, p) => {
            fps.insert(x.clone(), (true, (**p).clone()));
        }
        Formula::Nu(x, p) => {
            fps.insert(x.clone(), (false, (**p).clone()));
        }
        _ => {}
    });
    // Predecessors: Y < X iff Y free in fp(X).
    let mut prio: BTreeMap<String, u32> = BTreeMap::new();
    fn compute(
        x: &str,
        fps: &BTreeMap<String, (bool, Formula)>,
        prio: &mut BTreeMap<String, u32>,
    ) -> u32 {
        if let Some(p) = prio.get(x) {
            return *p;
        }
        let (is_mu, body) = &fps[x];
        let base = if *is_mu { 1 } else { 0 };
        let mut best = base;
        for y in free_variables(body) {
            if y == x || !fps.contains_key(&y) {
                continue;
            }
            // y < x: y is free in fp(x)
            let py = compute(&y, fps, prio);
            let (y_mu, _) = fps[&y];
            let cand = if y_mu == *is_mu { py } else { py + 1 };
            best = best.max(cand);
        }
        prio.insert(x.to_string(), best);
        best
    }
    let names: Vec<String> = fps.keys().cloned().collect();
    for x in &names {
        compute(x, &fps, &mut prio);
    }
    let max = prio.values().copied().max().unwrap_or(0);
    PriorityAssignment { by_binder: prio, max }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Core-syntax printer; parse(print(f)) == f.
        fn prec(f: &Formula) -> u8 {
            match f {
                Formula::Mu(..) | Formula::Nu(..) => 0,
                Formula::Or(..) => 2,
                Formula::And(..) => 3,
                _ => 5,
            }
        }
        fn go(f: &Formula, min: u8, w: &mut fmt::Formatter<'_>) -> fmt::Result {
            let p = prec(f);
            let paren = p < min;
            if paren {
                write!(w, "(")?;
            }
            match f {
                Formula::Atom(a) => write!(w, "{a}")?,
                Formula::Var(x) => write!(w, "{x}")?,
                Formula::Not(q) => {
                    write!(w, "!")?;
                    go(q, 5, w)?;
                }
                Formula::Or(a, b) => {
                    go(a, 3, w)?;
                    write!(w, " | ")?;
                    go(b, 2, w)?;
                }
                Formula::And(a, b) => {
                    go(a, 4, w)?;
                    write!(w, " & ")?;
                    go(b, 3, w)?;
                }
                Formula::Next(s, q) => {
                    write!(w, "<{}> ", s.letter())?;
                    go(q, 5, w)?;
                }
                Formula::DualNext(s, q) => {
                    write!(w, "[{}] ", s.letter())?;
                    go(q, 5, w)?;
                }
                Formula::Mu(x, q) => {
                    write!(w, "mu {x}. ")?;
                    go(q, 0, w)?;
                }
                Formula::Nu(x, q) => {
                    write!(w, "nu {x}. ")?;
                    go(q, 0, w)?;
                }
            }
            if paren {
                write!(w, ")")?;
            }
            Ok(())
        }
        go(self, 0, f)
    }
}

mod parse;
pub use parse::{parse_formula, ParseError};

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse_formula(s).unwrap()
    }

    #[test]
    fn parse_core_fixpoint() {
        // direct grammar reading
        assert_eq!(
            p("mu X. p | <g> X"),
            Formula::mu("X", Formula::or(Formula::atom("p"), Formula::next(SuccessorType::Global, Formula::var("X"))))
        );
    }

    #[test]
    fn parse_finally_sugar() {
        // F{a} q  ==  true U{a} q  ==  mu X0. q | (true & <a> X0)
        let f = p("F{a} q");
        let Formula::Mu(x, body) = &f else { panic!("expected mu") };
        let expected = Formula::or(
            Formula::atom("q"),
            Formula::and(Formula::tt(), Formula::next(SuccessorType::Abstract, Formula::Var(x.clone()))),
        );
        assert_eq!(**body, expected);
    }

    #[test]
    fn parse_gr_worker_sugar() {
        // Gr (worker -> <p>(main & accept)) desugars through !Fr!.
        // Fr phi = mu X. phi | (<g>X | <c>X); Gr phi = !Fr !phi.
        let f = p("Gr (worker -> <p>(main & accept))");
        let inner = Formula::or(
            Formula::not(Formula::atom("worker")),
            Formula::next(
                SuccessorType::Parent,
                Formula::and(Formula::atom("main"), Formula::atom("accept")),
            ),
        );
        let Formula::Not(muf) = &f else { panic!("expected negation") };
        let Formula::Mu(x, body) = &**muf else { panic!("expected mu") };
        let expected = Formula::or(
            Formula::not(inner),
            Formula::or(
                Formula::next(SuccessorType::Global, Formula::Var(x.clone())),
                Formula::next(SuccessorType::Child, Formula::Var(x.clone())),
            ),
        );
        assert_eq!(**body, expected);
    }

    #[test]
    fn pnf_examples() {
        // hand application of nu X. phi = !mu X. !phi[!X/X]
        assert_eq!(to_pnf(&p("!(mu X. !p & <g> X)")), p("nu X. p | [g] X"));
        assert_eq!(to_pnf(&p("!!p")), p("p"));
        assert_eq!(to_pnf(&p("![c] q")), p("<c> !q"));
    }

    #[test]
    fn pnf_idempotent_and_shape() {
        for s in ["!(mu X. !p & <g> X)", "!(p -> q)", "!(nu Y. (mu X. p | <g>X) & [g] Y)"] {
            let f = to_pnf(&p(s));
            assert!(f.is_pnf(), "{f} not in PNF");
            assert_eq!(to_pnf(&f), f);
        }
    }

    #[test]
    fn well_formed_examples() {
        assert!(matches!(
            check_well_formed(&p("mu X. <g>X | mu X. p")),
            Err(errs) if errs.contains(&WfError::DuplicateBinder("X".into()))
        ));
        assert!(matches!(
            check_well_formed(&p("mu X. X")),
            Err(errs) if errs.contains(&WfError::Unguarded("X".into()))
        ));
        assert!(check_closed(&p("mu X. p | <g>X")).is_ok());
        assert!(matches!(
            check_well_formed(&p("mu X. <g> !X")),
            Err(errs) if errs.contains(&WfError::OddNegations("X".into()))
        ));
    }

    #[test]
    fn substitute_examples() {
        // open formulas are built as ASTs; the parser only sees closed input
        assert_eq!(substitute(&Formula::var("X"), &p("p"), "X"), p("p"));
        let open = Formula::mu("X", Formula::or(Formula::var("X"), Formula::var("Y")));
        assert_eq!(
            substitute(&open, &p("q"), "Y"),
            Formula::mu("X", Formula::or(Formula::var("X"), Formula::atom("q")))
        );
        // capture avoidance: (mu X. <g> Y)[X/Y] renames the binder
        let f = substitute(
            &Formula::mu("X", Formula::next(SuccessorType::Global, Formula::var("Y"))),
            &Formula::var("X"),
            "Y",
        );
        let Formula::Mu(x2, body) = &f else { panic!() };
        assert_ne!(x2, "X");
        assert_eq!(**body, Formula::next(SuccessorType::Global, Formula::var("X")));
        assert_eq!(free_variables(&f), BTreeSet::from(["X".to_string()]));
    }

    #[test]
    fn free_vars_and_subformulae() {
        let open = Formula::mu("X", Formula::or(Formula::var("X"), Formula::var("Y")));
        assert_eq!(free_variables(&open), BTreeSet::from(["Y".to_string()]));
        assert_eq!(subformulae(&p("p | p")).len(), 2);
        assert!(free_variables(&p("mu X. p | <g>X")).is_empty());
    }

    #[test]
    fn priorities_examples() {
        let f = p("mu X. p | <g>X");
        let pa = assign_priorities(&f);
        assert_eq!(pa.of_binder("X"), 1);
        assert_eq!(pa.max, 1);

        let f = p("nu Y. q & [g]Y");
        let pa = assign_priorities(&f);
        assert_eq!(pa.of_binder("Y"), 0);
        assert_eq!(pa.max, 0);

        // independent chains [X], [Y]
        let f = p("nu Y. (mu X. p | <g>X) & [g]Y");
        let pa = assign_priorities(&f);
        assert_eq!(pa.of_binder("X"), 1);
        assert_eq!(pa.of_binder("Y"), 0);
        assert_eq!(pa.max, 1);

        // genuine alternation: X refers to Y's variable
        let f = p("nu Y. mu X. (p & <g>Y) | <g>X");
        let pa = assign_priorities(&f);
        assert_eq!(pa.of_binder("Y"), 0);
        assert_eq!(pa.of_binder("X"), 1);

        let f = p("mu Y. nu X. (p | <g>Y) & <g>X");
        let pa = assign_priorities(&f);
        assert_eq!(pa.of_binder("Y"), 1);
        assert_eq!(pa.of_binder("X"), 2);
    }

    #[test]
    fn priority_monotone_along_nesting() {
        let f = p("nu Y. mu X. (p & <g>Y) | <g>X");
        let pa = assign_priorities(&f);
        // Y < X requires priority(X) >= priority(Y)
        assert!(pa.of_binder("X") >= pa.of_binder("Y"));
    }

    #[test]
    fn print_parse_roundtrip() {
        for s in [
            "mu X. p | <g> X",
            "nu Y. (mu X. p | <g>X) & [g]Y",
            "!(p & (q | !r))",
            "<c> (p -> q)",
            "[u] <a> aa <-> [p] p",
            "p U{g} (q U{c} r)",
            "F{-} lock1",
            "Gr (x | y)",
        ] {
            let f = p(s);
            assert_eq!(parse_formula(&f.to_string()).unwrap(), f, "roundtrip failed for {s}");
        }
    }
}
