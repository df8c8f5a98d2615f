//! End-to-end decision procedures: model checking and satisfiability through
//! the automata pipeline, and the single-indexed LTL embedding.

use std::collections::{BTreeMap, BTreeSet};

use crate::automata::alphabet::{Alphabet, MAX_PROPS};
use crate::automata::npta::AutomatonError;
use crate::construct::{
    build_dpn_automaton, build_formula_npta, build_formula_npta_restricted, synthesize_dpn,
    ConstructError,
};
use crate::dpn::{Dpn, Rule};
use crate::exec::RegularTree;
use crate::formula::{check_closed, to_pnf, Formula, SuccessorType, TRUE_PROP};

/// Default bound on dealternation states before giving up with a resource
/// verdict.
pub const DEFAULT_STATE_CAP: usize = 2_000_000;

#[derive(Debug, PartialEq, Eq, thiserror::Error)]
pub enum CheckError {
    #[error("formula is not closed and well-formed: {0}")]
    IllFormed(String),
    #[error("proposition universe has {0} propositions, automata support at most {MAX_PROPS}")]
    TooManyProps(usize),
    #[error("name clash in embedding: {0}")]
    NameClash(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

#[derive(Debug)]
pub enum CheckResult {
    Holds,
    Violated {
        /// An execution tree of the model violating the formula.
        counterexample: RegularTree,
        /// A single-run DPN reproducing the counterexample.
        model: Option<Dpn>,
    },
    ResourceLimit(String),
}

#[derive(Debug)]
pub enum SatResult {
    Sat {
        witness: RegularTree,
        /// A DPN whose unique execution graph satisfies the formula;
        /// round-trip verified through the model checker.
        model: Dpn,
    },
    Unsat,
    ResourceLimit(String),
}

/// The shared proposition universe of a pipeline run: the formula's atoms,
/// the model's labels, and the designated truth proposition.
pub fn proposition_universe(phi: &Formula, m: Option<&Dpn>) -> BTreeSet<String> {
    let mut props = phi.propositions();
    if let Some(m) = m {
        props.extend(m.propositions());
    }
    props.insert(TRUE_PROP.to_string());
    props
}

fn alphabet_for(phi: &Formula, m: Option<&Dpn>) -> Result<Alphabet, CheckError> {
    let props = proposition_universe(phi, m);
    if props.len() > MAX_PROPS {
        return Err(CheckError::TooManyProps(props.len()));
    }
    Ok(Alphabet::new(props))
}

fn require_closed(phi: &Formula) -> Result<(), CheckError> {
    check_closed(phi).map_err(|errs| {
        CheckError::IllFormed(errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))
    })
}

/// Decide whether every execution graph of `m` satisfies `phi`: the automaton
/// of the negation is intersected with the model automaton, and the formula
/// holds exactly when the product is empty. A nonempty product yields a
/// regular counterexample tree.
pub fn model_check(m: &Dpn, phi: &Formula, state_cap: usize) -> Result<CheckResult, CheckError> {
    require_closed(phi)?;
    let psi = to_pnf(&Formula::not(phi.clone()));
    let alphabet = alphabet_for(phi, Some(m))?;
    let am = build_dpn_automaton(m, alphabet.clone());
    // only letters realizable in the model's trees can matter in the product,
    // which spares the negation automaton the bulk of its transition work
    let letters: Vec<_> = {
        let occurring: std::collections::BTreeSet<_> = am
            .trans
            .iter()
            .flat_map(|per_letter| {
                per_letter.iter().filter(|(_, d)| !d.is_empty()).map(|(&l, _)| l)
            })
            .collect();
        occurring.into_iter().collect()
    };
    let negated = match build_formula_npta_restricted(&psi, alphabet, &letters, state_cap) {
        Ok(a) => a,
        Err(ConstructError::Automaton(AutomatonError::StateBudget(n))) => {
            return Ok(CheckResult::ResourceLimit(format!("state budget exceeded ({n} states)")))
        }
        Err(e) => return Err(e.into()),
    };
    let product = negated.intersect(&am).map_err(ConstructError::from)?;
    if product.is_empty() {
        return Ok(CheckResult::Holds);
    }
    let counterexample = product
        .extract_witness()
        .ok_or_else(|| CheckError::Internal("nonempty product without witness".to_string()))?;
    let model = synthesize_dpn(&counterexample).ok();
    Ok(CheckResult::Violated { counterexample, model })
}

/// Decide whether some execution graph (equivalently, some DPN) satisfies
/// `phi`. A positive answer comes with a regular witness tree and a
/// synthesized DPN that is verified to model-check `phi` as holding.
pub fn satisfiable(phi: &Formula, state_cap: usize) -> Result<SatResult, CheckError> {
    require_closed(phi)?;
    let pnf = to_pnf(phi);
    let alphabet = alphabet_for(phi, None)?;
    let a = match build_formula_npta(&pnf, alphabet, state_cap) {
        Ok(a) => a,
        Err(ConstructError::Automaton(AutomatonError::StateBudget(n))) => {
            return Ok(SatResult::ResourceLimit(format!("state budget exceeded ({n} states)")))
        }
        Err(e) => return Err(e.into()),
    };
    let Some(witness) = a.extract_witness() else {
        return Ok(SatResult::Unsat);
    };
    let model = synthesize_dpn(&witness)?;
    match model_check(&model, phi, state_cap)? {
        CheckResult::Holds => Ok(SatResult::Sat { witness, model }),
        CheckResult::Violated { .. } => Err(CheckError::Internal(
            "synthesized model does not satisfy the witnessed formula".to_string(),
        )),
        CheckResult::ResourceLimit(msg) => Ok(SatResult::ResourceLimit(msg)),
    }
}

/// Embed a single-indexed LTL instance: each component is a pushdown system
/// with its own stack alphabet (component identity lives in the stack symbols,
/// so spawn rules may start threads in other components) together with a
/// formula its local runs must satisfy. Returns the union model, with every
/// head of component i tagged by a fresh proposition, and the violation
/// formula; the original instance holds iff the returned pair model-checks as
/// violated.
pub fn embed_single_indexed(
    components: &[(Dpn, Formula)],
) -> Result<(Dpn, Formula), CheckError> {
    if components.is_empty() {
        return Err(CheckError::NameClash("no components".to_string()));
    }
    for (_, phi) in components {
        require_closed(phi)?;
    }
    // stack alphabets must be disjoint: a thread's component is read off its
    // stack symbols
    for (i, (a, _)) in components.iter().enumerate() {
        for (b, _) in &components[i + 1..] {
            if let Some(g) = a.stack.intersection(&b.stack).next() {
                return Err(CheckError::NameClash(format!("stack symbol {g} in two components")));
            }
        }
    }
    let tags: Vec<String> = (1..=components.len()).map(|i| format!("p{i}")).collect();
    for (i, (m, phi)) in components.iter().enumerate() {
        let used: BTreeSet<String> =
            m.propositions().into_iter().chain(phi.propositions()).collect();
        if let Some(t) = tags.iter().find(|t| used.contains(*t)) {
            return Err(CheckError::NameClash(format!(
                "component {} already uses the tag proposition {t}",
                i + 1
            )));
        }
    }

    let mut union = Dpn {
        locations: BTreeSet::new(),
        stack: BTreeSet::new(),
        init_location: components[0].0.init_location.clone(),
        init_symbol: components[0].0.init_symbol.clone(),
        rules: Vec::new(),
        labels: components.iter().flat_map(|(m, _)| m.labels.clone()).collect(),
    };
    for (m, _) in components {
        union.locations.extend(m.locations.iter().cloned());
        union.stack.extend(m.stack.iter().cloned());
        union.rules.extend(m.rules.iter().cloned());
        // spawn targets may live in another component
        for r in &m.rules {
            if let Rule::Spawn { sn, gn, .. } = r {
                union.locations.insert(sn.clone());
                union.stack.insert(gn.clone());
            }
        }
    }
    union.rules.sort();
    union.rules.dedup();
    let all_locations: Vec<String> = union.locations.iter().cloned().collect();
    for (i, (m, _)) in components.iter().enumerate() {
        for s in &all_locations {
            for g in &m.stack {
                union
                    .labels
                    .entry((s.clone(), g.clone()))
                    .or_default()
                    .insert(tags[i].clone());
            }
        }
    }

    // every copy of a component formula gets fresh binder names so the
    // combined formula keeps unique binders
    let mut counter = 0usize;
    let mut violation = |i: usize| {
        let renamed = alpha_rename(&components[i].1, &BTreeMap::new(), &mut counter);
        Formula::and(Formula::atom(&tags[i]), Formula::not(renamed))
    };
    let var = "__R".to_string();
    let root_violation = violation(0);
    let spawned = (0..components.len())
        .map(|i| Formula::next(SuccessorType::Child, violation(i)))
        .reduce(Formula::or)
        .expect("at least one component");
    // reachability over global and child successors of a spawned violation
    let fr = Formula::mu(
        &var,
        Formula::or(
            spawned,
            Formula::or(
                Formula::next(SuccessorType::Global, Formula::var(&var)),
                Formula::next(SuccessorType::Child, Formula::var(&var)),
            ),
        ),
    );
    Ok((union, Formula::or(root_violation, fr)))
}

fn alpha_rename(f: &Formula, map: &BTreeMap<String, String>, counter: &mut usize) -> Formula {
    match f {
        Formula::Atom(_) => f.clone(),
        Formula::Var(x) => Formula::var(map.get(x).unwrap_or(x)),
        Formula::Not(p) => Formula::not(alpha_rename(p, map, counter)),
        Formula::Or(a, b) => {
            Formula::or(alpha_rename(a, map, counter), alpha_rename(b, map, counter))
        }
        Formula::And(a, b) => {
            Formula::and(alpha_rename(a, map, counter), alpha_rename(b, map, counter))
        }
        Formula::Next(s, p) => Formula::next(*s, alpha_rename(p, map, counter)),
        Formula::DualNext(s, p) => Formula::dual_next(*s, alpha_rename(p, map, counter)),
        Formula::Mu(x, p) | Formula::Nu(x, p) => {
            let fresh = format!("__v{counter}");
            *counter += 1;
            let mut inner = map.clone();
            inner.insert(x.clone(), fresh.clone());
            let body = alpha_rename(p, &inner, counter);
            if matches!(f, Formula::Mu(..)) {
                Formula::mu(&fresh, body)
            } else {
                Formula::nu(&fresh, body)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::build_exec_tree_automaton;
    use crate::exec::{tree_representation, unfold_regular, NodeKind};
    use crate::formula::parse_formula;
    use crate::oracle::{dpn_models_oracle, OracleVerdict};

    fn dpn(text: &str) -> Dpn {
        crate::dpn::parse_dpn(text).unwrap()
    }

    fn f(text: &str) -> Formula {
        parse_formula(text).unwrap()
    }

    const SMALL: &str = "dpn { locations: s0 s1; stack: g0 g1; init: s0 g0;
        label s0 g0 { p }
        rule s0 g0 -> s1 g1 }";

    #[test]
    fn trivial_truth_holds() {
        let m = dpn(SMALL);
        let r = model_check(&m, &f("Gr (__t | !__t)"), DEFAULT_STATE_CAP).unwrap();
        assert!(matches!(r, CheckResult::Holds));
    }

    #[test]
    fn missing_atom_violated_with_exact_counterexample() {
        let m = dpn(SMALL);
        let r = model_check(&m, &f("q"), DEFAULT_STATE_CAP).unwrap();
        let CheckResult::Violated { counterexample, model } = r else {
            panic!("expected violation")
        };
        // the unique execution tree is the counterexample
        let graphs = crate::exec::enumerate_execution_graphs(&m, 10, 10);
        assert_eq!(graphs.len(), 1);
        let (t, _) = tree_representation(&graphs[0]).unwrap();
        assert_eq!(
            unfold_regular(&counterexample, 20).unwrap(),
            unfold_regular(&(&t).into(), 20).unwrap()
        );
        // and it re-validates against all three automata
        let alphabet = alphabet_for(&f("q"), Some(&m)).unwrap();
        assert!(build_exec_tree_automaton(alphabet.clone())
            .membership_regular(&counterexample)
            .unwrap());
        assert!(build_dpn_automaton(&m, alphabet.clone())
            .membership_regular(&counterexample)
            .unwrap());
        let negated =
            build_formula_npta(&to_pnf(&Formula::not(f("q"))), alphabet, DEFAULT_STATE_CAP)
                .unwrap();
        assert!(negated.membership_regular(&counterexample).unwrap());
        assert!(model.is_some());
    }

    #[test]
    fn verdicts_match_oracle_on_samples() {
        let spawned = dpn("dpn { locations: s0 s1; stack: g0 g1 g2; init: s0 g0;
            label s0 g0 { main }
            label s1 g2 { worker }
            rule s0 g0 -> s0 g1 spawn s1 g2 }");
        let cases = [
            (dpn(SMALL), f("p")),
            (dpn(SMALL), f("<g> p")),
            (dpn(SMALL), f("F{g} !p")),
            (spawned.clone(), f("<c> worker")),
            (spawned.clone(), f("<c> main")),
            (spawned, f("Gr (worker -> <p> main)")),
        ];
        for (m, phi) in cases {
            let pipeline = model_check(&m, &phi, DEFAULT_STATE_CAP).unwrap();
            let oracle = dpn_models_oracle(&m, &phi, 50, 200).unwrap();
            match (pipeline, oracle) {
                (CheckResult::Holds, OracleVerdict::Holds) => {}
                (CheckResult::Violated { .. }, OracleVerdict::Violated(_)) => {}
                (p, o) => panic!("pipeline {p:?} vs oracle {o:?} on {phi}"),
            }
        }
    }

    #[test]
    fn satisfiability_verdicts() {
        assert!(matches!(
            satisfiable(&f("p & !p"), DEFAULT_STATE_CAP).unwrap(),
            SatResult::Unsat
        ));
        assert!(matches!(
            satisfiable(&f("mu X. <g> X"), DEFAULT_STATE_CAP).unwrap(),
            SatResult::Unsat
        ));
        let SatResult::Sat { witness, model } =
            satisfiable(&f("<c> (__t | !__t)"), DEFAULT_STATE_CAP).unwrap()
        else {
            panic!("expected sat");
        };
        // a child successor requires a spawn at the root
        assert_eq!(witness.labels[witness.root].kind, NodeKind::Spawn);
        assert!(model.rules.iter().any(|r| matches!(r, Rule::Spawn { .. })));
    }

    #[test]
    fn embedding_reproduces_local_verdicts() {
        // main spawns one worker; the worker makes a single internal step
        let main = Dpn {
            locations: BTreeSet::from(["m0".to_string()]),
            stack: BTreeSet::from(["a0".to_string(), "a1".to_string()]),
            init_location: "m0".to_string(),
            init_symbol: "a0".to_string(),
            rules: vec![Rule::Spawn {
                s: "m0".to_string(),
                g: "a0".to_string(),
                s2: "m0".to_string(),
                g2: "a1".to_string(),
                sn: "w0".to_string(),
                gn: "b0".to_string(),
            }],
            labels: BTreeMap::from([(
                ("m0".to_string(), "a0".to_string()),
                BTreeSet::from(["ok".to_string()]),
            )]),
        };
        let worker = Dpn {
            locations: BTreeSet::from(["w0".to_string()]),
            stack: BTreeSet::from(["b0".to_string(), "b1".to_string()]),
            init_location: "w0".to_string(),
            init_symbol: "b0".to_string(),
            rules: vec![Rule::Int {
                s: "w0".to_string(),
                g: "b0".to_string(),
                s2: "w0".to_string(),
                g2: "b1".to_string(),
            }],
            labels: BTreeMap::new(),
        };
        // both components trivially satisfied: the instance holds, so the
        // embedded pair must come back violated
        let (m_bar, phi_bar) =
            embed_single_indexed(&[(main.clone(), f("__t | !__t")), (worker.clone(), f("__t | !__t"))])
                .unwrap();
        let heads_tagged = m_bar.label_of_head("m0", "a0").contains("p1")
            && m_bar.label_of_head("w0", "b0").contains("p2");
        assert!(heads_tagged);
        assert!(matches!(
            model_check(&m_bar, &phi_bar, DEFAULT_STATE_CAP).unwrap(),
            CheckResult::Violated { .. }
        ));
        // a trivially false worker obligation flips the embedded verdict
        let (m_bar, phi_bar) =
            embed_single_indexed(&[(main.clone(), f("__t | !__t")), (worker.clone(), f("__t & !__t"))])
                .unwrap();
        assert!(matches!(
            model_check(&m_bar, &phi_bar, DEFAULT_STATE_CAP).unwrap(),
            CheckResult::Holds
        ));
        // single component: G ok fails because the step leaves the label
        let (m_bar, phi_bar) =
            embed_single_indexed(&[(main, f("nu X. ok & [g] X"))]).unwrap();
        let embedded = model_check(&m_bar, &phi_bar, DEFAULT_STATE_CAP).unwrap();
        let oracle = dpn_models_oracle(&m_bar, &phi_bar, 50, 100).unwrap();
        assert!(
            matches!(embedded, CheckResult::Holds),
            "local run violates G ok, so the violation formula holds"
        );
        assert_eq!(oracle, OracleVerdict::Holds);
    }

    #[test]
    fn embedding_rejects_clashes() {
        let m = dpn(SMALL);
        assert!(matches!(
            embed_single_indexed(&[(m.clone(), f("__t | !__t")), (m, f("__t | !__t"))]),
            Err(CheckError::NameClash(_))
        ));
    }
}
