//! Proof kernel for Σ formulas: sequent calculi, a deep-inference rewriting
//! system, translations between them, built-in theories and a finite-model
//! auditor.

pub mod calculus;
pub mod cut;
pub mod formula;
pub mod parser;
pub mod rewrite;
pub mod search;
pub mod semantics;
pub mod theories;
pub mod translate;

pub use formula::{ContextPath, Formula, FunSym, Implication, Selector, Term, Vocabulary};
pub use theories::{AxiomRef, Theory};
