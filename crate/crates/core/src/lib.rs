//! A workbench for the strictly positive quantified reflection calculus
//! with one modality.
//!
//! * [`syntax`]: formulas, parsing, substitution, depth measures, closure.
//! * [`calculus`]: derivation certificates, their checker, and a bounded
//!   backward prover.
//! * [`semantics`]: adequate relational models, satisfaction, bounded model
//!   enumeration and a complete decision procedure.
//! * [`countermodel`]: maximal consistent witnessed pairs and the
//!   constant-domain term model built from them.
//! * [`arith`]: the two arithmetical interpretations, emitted symbolically,
//!   plus a finite shadow evaluation of the world-indexed one.
//! * [`corpus`]: seeded random formulas and sequents.

pub mod arith;
pub mod calculus;
pub mod corpus;
pub mod countermodel;
pub mod semantics;
pub mod syntax;

pub use calculus::{check_derivation, prove, Derivation, Rule, Sequent};
pub use semantics::{decide, satisfies, DecideOptions, KripkeModel, Verdict};
pub use syntax::{parse_formula, Formula, Signature, Term};
