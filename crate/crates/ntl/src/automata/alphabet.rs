//! Interned tree-label alphabet.
//!
//! Automata work over labels `(P, d, p)` where `P` ranges over subsets of a
//! fixed proposition universe. Letters are packed into integers so transition
//! tables stay dense: `((subset << 3 | kind) << 3) | pred`.

use std::collections::BTreeSet;

use crate::exec::{NodeKind, TreeLabel};
use crate::exec::Move;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    props: Vec<String>,
}

pub type Letter = u32;

/// Upper bound on universe size; letters must fit comfortably in 32 bits and
/// automata enumerate all subsets.
pub const MAX_PROPS: usize = 16;

impl Alphabet {
    pub fn new(props: BTreeSet<String>) -> Alphabet {
        assert!(props.len() <= MAX_PROPS, "proposition universe too large");
        Alphabet { props: props.into_iter().collect() }
    }

    pub fn props(&self) -> &[String] {
        &self.props
    }

    pub fn num_letters(&self) -> usize {
        (1 << self.props.len()) * 64
    }

    /// All letters in canonical order (only meaningful kind/pred codes).
    pub fn letters(&self) -> impl Iterator<Item = Letter> + '_ {
        (0..1u32 << self.props.len()).flat_map(|subset| {
            (0..6u32).flat_map(move |kind| {
                (0..5u32).map(move |pred| (subset << 3 | kind) << 3 | pred)
            })
        })
    }

    pub fn encode(&self, label: &TreeLabel) -> Option<Letter> {
        let mut subset = 0u32;
        for p in &label.props {
            let i = self.props.binary_search(p).ok()?;
            subset |= 1 << i;
        }
        let kind = label.kind as u32;
        let pred = match label.pred {
            None => 0,
            Some(m) => m as u32 + 1,
        };
        Some((subset << 3 | kind) << 3 | pred)
    }

    pub fn decode(&self, letter: Letter) -> TreeLabel {
        TreeLabel { props: self.decode_props(letter), kind: kind_of(letter), pred: pred_of(letter) }
    }

    pub fn decode_props(&self, letter: Letter) -> BTreeSet<String> {
        let subset = letter >> 6;
        self.props
            .iter()
            .enumerate()
            .filter(|(i, _)| subset & (1 << i) != 0)
            .map(|(_, p)| p.clone())
            .collect()
    }
}

pub fn kind_of(letter: Letter) -> NodeKind {
    NodeKind::ALL[(letter >> 3 & 0x7) as usize]
}

pub fn pred_of(letter: Letter) -> Option<Move> {
    match letter & 0x7 {
        0 => None,
        c => Some(Move::ALL[c as usize - 1]),
    }
}

pub fn arity_of(letter: Letter) -> usize {
    kind_of(letter).arity()
}
