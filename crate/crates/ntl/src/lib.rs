//! Navigation temporal logic (NTL) over dynamic pushdown networks (DPNs).
//!
//! The library decides model checking and satisfiability through a tree-automata
//! pipeline: execution graphs of a DPN are encoded as binary execution trees, NTL
//! formulas become two-way alternating parity tree automata, and both are reduced
//! to emptiness of nondeterministic parity tree automata. A direct fixpoint
//! evaluator on finite execution graphs serves as an independent oracle.

pub mod automata;
pub mod check;
pub mod construct;
pub mod dpn;
pub mod exec;
pub mod formula;
pub mod gen;
pub mod oracle;
