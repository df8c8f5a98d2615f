//! Dynamic pushdown networks: model definition, textual format, and the
//! configuration-level step relation of the graph semantics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Rule kinds. A DPN's rule set splits into four disjoint classes by shape.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rule {
    /// `s g -> s' g'`
    Int { s: String, g: String, s2: String, g2: String },
    /// `s g -> s' g' g''`
    Call { s: String, g: String, s2: String, g2: String, g3: String },
    /// `s g -> s'`
    Ret { s: String, g: String, s2: String },
    /// `s g -> s' g' > sn gn`: rewrite the top and spawn a new thread with
    /// stack `gn` (over the implicit bottom symbol).
    Spawn { s: String, g: String, s2: String, g2: String, sn: String, gn: String },
}

impl Rule {
    pub fn head(&self) -> (&str, &str) {
        match self {
            Rule::Int { s, g, .. }
            | Rule::Call { s, g, .. }
            | Rule::Ret { s, g, .. }
            | Rule::Spawn { s, g, .. } => (s, g),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Int { s, g, s2, g2 } => write!(f, "rule {s} {g} -> {s2} {g2}"),
            Rule::Call { s, g, s2, g2, g3 } => write!(f, "rule {s} {g} -> {s2} {g2} {g3}"),
            Rule::Ret { s, g, s2 } => write!(f, "rule {s} {g} -> {s2}"),
            Rule::Spawn { s, g, s2, g2, sn, gn } => {
                write!(f, "rule {s} {g} -> {s2} {g2} spawn {sn} {gn}")
            }
        }
    }
}

/// A dynamic pushdown network. The bottom-of-stack symbol is implicit and
/// never part of `stack`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dpn {
    pub locations: BTreeSet<String>,
    pub stack: BTreeSet<String>,
    pub init_location: String,
    pub init_symbol: String,
    /// Kept sorted and duplicate-free; iteration order is the canonical order.
    pub rules: Vec<Rule>,
    /// Labelling of heads; heads not present are labelled with the empty set.
    pub labels: BTreeMap<(String, String), BTreeSet<String>>,
}

/// A configuration `(s, u)`: control location plus stack word, top leftmost.
/// The bottom symbol is implicit below the last element of `stack`; a
/// configuration with an empty `stack` (bottom only) is stuck.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub location: String,
    pub stack: Vec<String>,
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}⊥)", self.location, self.stack.join(" "))
    }
}

/// One move out of a configuration.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Step {
    pub kind: StepKind,
    pub target: Configuration,
    /// Present exactly for spawn steps: the new thread's configuration.
    pub spawned: Option<Configuration>,
    /// Index of the applied rule in the canonical rule order.
    pub rule: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StepKind {
    Int,
    Call,
    Ret,
    Spawn,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DpnError {
    #[error("{0}: syntax error: {1}")]
    Syntax(usize, String),
    #[error("undeclared identifier '{0}'")]
    Undeclared(String),
    #[error("duplicate '{0}' declaration")]
    Duplicate(String),
    #[error("rule listed twice: {0}")]
    DuplicateRule(String),
}

impl Dpn {
    pub fn initial_configuration(&self) -> Configuration {
        Configuration {
            location: self.init_location.clone(),
            stack: vec![self.init_symbol.clone()],
        }
    }

    /// `L(s, g)` for the top symbol of `c`; the empty set on a bottom-only
    /// stack.
    pub fn label_of(&self, c: &Configuration) -> BTreeSet<String> {
        match c.stack.first() {
            Some(g) => self.label_of_head(&c.location, g),
            None => BTreeSet::new(),
        }
    }

    pub fn label_of_head(&self, s: &str, g: &str) -> BTreeSet<String> {
        self.labels
            .get(&(s.to_string(), g.to_string()))
            .cloned()
            .unwrap_or_default()
    }

    /// All propositions used by the labelling.
    pub fn propositions(&self) -> BTreeSet<String> {
        self.labels.values().flatten().cloned().collect()
    }

    /// All successors of `c` under the four rule classes, in canonical rule
    /// order. A bottom-only stack has no steps.
    pub fn config_steps(&self, c: &Configuration) -> Vec<Step> {
        let Some(top) = c.stack.first() else { return Vec::new() };
        let rest = &c.stack[1..];
        let mut out = Vec::new();
        for (i, r) in self.rules.iter().enumerate() {
            if r.head() != (c.location.as_str(), top.as_str()) {
                continue;
            }
            let step = match r {
                Rule::Int { s2, g2, .. } => Step {
                    kind: StepKind::Int,
                    target: Configuration {
                        location: s2.clone(),
                        stack: std::iter::once(g2.clone()).chain(rest.iter().cloned()).collect(),
                    },
                    spawned: None,
                    rule: i,
                },
                Rule::Call { s2, g2, g3, .. } => Step {
                    kind: StepKind::Call,
                    target: Configuration {
                        location: s2.clone(),
                        stack: [g2.clone(), g3.clone()]
                            .into_iter()
                            .chain(rest.iter().cloned())
                            .collect(),
                    },
                    spawned: None,
                    rule: i,
                },
                Rule::Ret { s2, .. } => Step {
                    kind: StepKind::Ret,
                    target: Configuration { location: s2.clone(), stack: rest.to_vec() },
                    spawned: None,
                    rule: i,
                },
                Rule::Spawn { s2, g2, sn, gn, .. } => Step {
                    kind: StepKind::Spawn,
                    target: Configuration {
                        location: s2.clone(),
                        stack: std::iter::once(g2.clone()).chain(rest.iter().cloned()).collect(),
                    },
                    spawned: Some(Configuration { location: sn.clone(), stack: vec![gn.clone()] }),
                    rule: i,
                },
            };
            out.push(step);
        }
        out
    }
}

/// Parse the textual DPN format:
///
/// ```text
/// dpn {
///   locations: s0 s1; stack: g0 g1; init: s0 g0;
///   label s0 g0 { p q }
///   rule s0 g0 -> s1 g1
///   rule s0 g0 -> s1 g1 g0          # call
///   rule s1 g1 -> s0                # return
///   rule s0 g0 -> s0 g1 spawn s1 g0
/// }
/// ```
pub fn parse_dpn(text: &str) -> Result<Dpn, DpnError> {
    let mut toks: Vec<(String, usize)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap();
        let line = line
            .replace('{', " { ")
            .replace('}', " } ")
            .replace(';', " ; ")
            .replace(':', " : ")
            .replace("->", " -> ");
        for w in line.split_whitespace() {
            toks.push((w.to_string(), ln + 1));
        }
    }
    let mut i = 0usize;
    let err = |i: usize, toks: &[(String, usize)], msg: &str| {
        let ln = toks.get(i).or(toks.last()).map(|(_, l)| *l).unwrap_or(0);
        DpnError::Syntax(ln, msg.to_string())
    };
    let expect = |want: &str, i: &mut usize, toks: &[(String, usize)]| -> Result<(), DpnError> {
        if toks.get(*i).map(|(w, _)| w.as_str()) == Some(want) {
            *i += 1;
            Ok(())
        } else {
            Err(err(*i, toks, &format!("expected '{want}'")))
        }
    };
    let ident = |i: &mut usize, toks: &[(String, usize)]| -> Result<String, DpnError> {
        match toks.get(*i) {
            Some((w, _))
                if !matches!(w.as_str(), "{" | "}" | ";" | ":" | "->" | "rule" | "label") =>
            {
                *i += 1;
                Ok(w.clone())
            }
            _ => Err(err(*i, toks, "expected identifier")),
        }
    };

    expect("dpn", &mut i, &toks)?;
    expect("{", &mut i, &toks)?;

    let mut locations = BTreeSet::new();
    let mut stack = BTreeSet::new();
    let mut init: Option<(String, String)> = None;
    let mut rules: Vec<Rule> = Vec::new();
    let mut labels: BTreeMap<(String, String), BTreeSet<String>> = BTreeMap::new();

    while let Some((w, _)) = toks.get(i) {
        match w.as_str() {
            "}" => break,
            ";" => {
                i += 1;
            }
            "locations" => {
                i += 1;
                expect(":", &mut i, &toks)?;
                while let Ok(s) = ident(&mut i, &toks) {
                    locations.insert(s);
                }
            }
            "stack" => {
                i += 1;
                expect(":", &mut i, &toks)?;
                while let Ok(s) = ident(&mut i, &toks) {
                    stack.insert(s);
                }
            }
            "init" => {
                i += 1;
                expect(":", &mut i, &toks)?;
                let s = ident(&mut i, &toks)?;
                let g = ident(&mut i, &toks)?;
                if init.is_some() {
                    return Err(DpnError::Duplicate("init".to_string()));
                }
                init = Some((s, g));
            }
            "label" => {
                i += 1;
                let s = ident(&mut i, &toks)?;
                let g = ident(&mut i, &toks)?;
                expect("{", &mut i, &toks)?;
                let mut props = BTreeSet::new();
                while toks.get(i).map(|(w, _)| w.as_str()) != Some("}") {
                    props.insert(ident(&mut i, &toks)?);
                }
                expect("}", &mut i, &toks)?;
                if labels.insert((s.clone(), g.clone()), props).is_some() {
                    return Err(DpnError::Duplicate(format!("label {s} {g}")));
                }
            }
            "rule" => {
                i += 1;
                let s = ident(&mut i, &toks)?;
                let g = ident(&mut i, &toks)?;
                expect("->", &mut i, &toks)?;
                let s2 = ident(&mut i, &toks)?;
                // Remaining shape decides the rule class.
                let mut rhs = Vec::new();
                while let Some((w, _)) = toks.get(i) {
                    if matches!(w.as_str(), "rule" | "label" | "}" | ";" | "locations" | "stack" | "init")
                    {
                        break;
                    }
                    rhs.push(ident(&mut i, &toks)?);
                }
                let rule = match rhs.as_slice() {
                    [] => Rule::Ret { s, g, s2 },
                    [g2] => Rule::Int { s, g, s2, g2: g2.clone() },
                    [g2, g3] => Rule::Call { s, g, s2, g2: g2.clone(), g3: g3.clone() },
                    [g2, kw, sn, gn] if kw == "spawn" => Rule::Spawn {
                        s,
                        g,
                        s2,
                        g2: g2.clone(),
                        sn: sn.clone(),
                        gn: gn.clone(),
                    },
                    _ => return Err(err(i, &toks, "malformed rule right-hand side")),
                };
                rules.push(rule);
            }
            w => {
                return Err(err(i, &toks, &format!("unexpected '{w}'")));
            }
        }
    }

    let Some((init_location, init_symbol)) = init else {
        return Err(DpnError::Syntax(0, "missing init declaration".to_string()));
    };

    // Validate references.
    let chk_loc = |s: &String| -> Result<(), DpnError> {
        if locations.contains(s) {
            Ok(())
        } else {
            Err(DpnError::Undeclared(s.clone()))
        }
    };
    let chk_sym = |g: &String| -> Result<(), DpnError> {
        if stack.contains(g) {
            Ok(())
        } else {
            Err(DpnError::Undeclared(g.clone()))
        }
    };
    chk_loc(&init_location)?;
    chk_sym(&init_symbol)?;
    for ((s, g), _) in &labels {
        chk_loc(s)?;
        chk_sym(g)?;
    }
    for r in &rules {
        match r {
            Rule::Int { s, g, s2, g2 } => {
                chk_loc(s)?;
                chk_sym(g)?;
                chk_loc(s2)?;
                chk_sym(g2)?;
            }
            Rule::Call { s, g, s2, g2, g3 } => {
                chk_loc(s)?;
                chk_sym(g)?;
                chk_loc(s2)?;
                chk_sym(g2)?;
                chk_sym(g3)?;
            }
            Rule::Ret { s, g, s2 } => {
                chk_loc(s)?;
                chk_sym(g)?;
                chk_loc(s2)?;
            }
            Rule::Spawn { s, g, s2, g2, sn, gn } => {
                chk_loc(s)?;
                chk_sym(g)?;
                chk_loc(s2)?;
                chk_sym(g2)?;
                chk_loc(sn)?;
                chk_sym(gn)?;
            }
        }
    }
    rules.sort();
    for w in rules.windows(2) {
        if w[0] == w[1] {
            return Err(DpnError::DuplicateRule(w[0].to_string()));
        }
    }
    Ok(Dpn { locations, stack, init_location, init_symbol, rules, labels })
}

impl fmt::Display for Dpn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dpn {{")?;
        writeln!(
            f,
            "  locations: {};",
            self.locations.iter().cloned().collect::<Vec<_>>().join(" ")
        )?;
        writeln!(f, "  stack: {};", self.stack.iter().cloned().collect::<Vec<_>>().join(" "))?;
        writeln!(f, "  init: {} {};", self.init_location, self.init_symbol)?;
        for ((s, g), props) in &self.labels {
            writeln!(f, "  label {s} {g} {{ {} }}", props.iter().cloned().collect::<Vec<_>>().join(" "))?;
        }
        for r in &self.rules {
            writeln!(f, "  {r}")?;
        }
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple(rules: &str) -> String {
        format!("dpn {{ locations: s0 s1; stack: g0 g1; init: s0 g0;\n{rules}\n}}")
    }

    #[test]
    fn parse_int_rule() {
        let m = parse_dpn(&simple("rule s0 g0 -> s1 g1")).unwrap();
        assert_eq!(m.rules, vec![Rule::Int {
            s: "s0".into(), g: "g0".into(), s2: "s1".into(), g2: "g1".into()
        }]);
    }

    #[test]
    fn parse_spawn_rule() {
        let m = parse_dpn(&simple("rule s0 g0 -> s0 g0 spawn s1 g1")).unwrap();
        assert_eq!(m.rules.len(), 1);
        assert!(matches!(m.rules[0], Rule::Spawn { .. }));
    }

    #[test]
    fn undeclared_location_rejected() {
        let e = parse_dpn(&simple("rule s0 g0 -> s9 g1")).unwrap_err();
        assert_eq!(e, DpnError::Undeclared("s9".into()));
    }

    #[test]
    fn duplicate_rule_rejected() {
        let e = parse_dpn(&simple("rule s0 g0 -> s1 g1 rule s0 g0 -> s1 g1")).unwrap_err();
        assert!(matches!(e, DpnError::DuplicateRule(_)));
    }

    #[test]
    fn ret_pops() {
        // Delta_R = {s0 g0 -> s1}, c = (s0, g0 g1 bot) steps to (s1, g1 bot)
        let m = parse_dpn(&simple("rule s0 g0 -> s1")).unwrap();
        let c = Configuration { location: "s0".into(), stack: vec!["g0".into(), "g1".into()] };
        let steps = m.config_steps(&c);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].kind, StepKind::Ret);
        assert_eq!(steps[0].target, Configuration { location: "s1".into(), stack: vec!["g1".into()] });
    }

    #[test]
    fn bottom_only_is_stuck() {
        let m = parse_dpn(&simple("rule s0 g0 -> s1")).unwrap();
        let c = Configuration { location: "s0".into(), stack: vec![] };
        assert!(m.config_steps(&c).is_empty());
    }

    #[test]
    fn call_pushes() {
        let m = parse_dpn(&simple("rule s0 g0 -> s1 g1 g0")).unwrap();
        let c = m.initial_configuration();
        let steps = m.config_steps(&c);
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].kind, StepKind::Call);
        assert_eq!(
            steps[0].target,
            Configuration { location: "s1".into(), stack: vec!["g1".into(), "g0".into()] }
        );
    }

    #[test]
    fn spawn_emits_fresh_thread() {
        let m = parse_dpn(&simple("rule s0 g0 -> s0 g1 spawn s1 g0")).unwrap();
        let steps = m.config_steps(&m.initial_configuration());
        assert_eq!(steps.len(), 1);
        assert_eq!(
            steps[0].spawned,
            Some(Configuration { location: "s1".into(), stack: vec!["g0".into()] })
        );
    }

    #[test]
    fn label_conventions() {
        let m = parse_dpn(
            "dpn { locations: s0; stack: g0; init: s0 g0; label s0 g0 { p q } }",
        )
        .unwrap();
        let c = m.initial_configuration();
        assert_eq!(m.label_of(&c), BTreeSet::from(["p".to_string(), "q".to_string()]));
        let stuck = Configuration { location: "s0".into(), stack: vec![] };
        assert!(m.label_of(&stuck).is_empty());
    }

    #[test]
    fn steps_canonical_and_deterministic() {
        let m = parse_dpn(&simple("rule s0 g0 -> s1 g1\nrule s0 g0 -> s0 g1")).unwrap();
        let a = m.config_steps(&m.initial_configuration());
        let b = m.config_steps(&m.initial_configuration());
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(a[0].rule < a[1].rule);
    }

    #[test]
    fn display_roundtrip() {
        let m = parse_dpn(&simple(
            "rule s0 g0 -> s1 g1 g0\nrule s1 g1 -> s0\nlabel s0 g0 { p }",
        ))
        .unwrap();
        assert_eq!(parse_dpn(&m.to_string()).unwrap(), m);
    }
}
