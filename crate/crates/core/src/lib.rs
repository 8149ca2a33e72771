//! Weighted monadic second-order logic on finite words under the abstract
//! semantics of multisets of weight strings.

pub mod compiler;
pub mod gen;
pub mod mso_automata;
pub mod proof;
pub mod semantics;
pub mod weighted_automata;
pub mod syntax;
