//! Tree and word automata plus the parity games used to run them.

pub mod alphabet;
pub mod game;
pub mod ata;
pub mod npta;
pub mod words;
pub mod dealternate;
