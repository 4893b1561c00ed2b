//! Arithmetical interpretations of strictly positive formulas, kept
//! symbolic: provability predicates, Gödel quotes and the Solovay sentences
//! `Lam(i)` are uninterpreted constructors.
//!
//! ASCII syntax of printed formulas:
//!
//! ```text
//! true  false  (A & B)  (A | B)  (A -> B)  ~A
//! forall y0 . A   exists y0 . A
//! Box[tau] A   Dia[tau] A   Box[<axiomatization>] A
//! Lam(3)  tau(u)  tau_isig1(u)  sigma_S(u, y0, z1)  u = godel<A>
//! s = t   (y0 mod 4)   [2]  (the code of a domain element)   7  (a numeral)
//! ```
//!
//! QRC variables `x<k>` become `y<k>` and constants `c<k>` become `z<k>`;
//! other names are prefixed, `v` becoming `y_v` and `e` becoming `z_e`.

mod realize;
mod shadow;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use realize::{
    completeness_star, psi_family, qrc1_t_statement, solovay_atom_prime, solovay_star, star_realization,
};
pub use shadow::{shadow_env, shadow_eval, ShadowStructure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{0} is outside the fragment the shadow semantics evaluates")]
    OutsideFragment(String),
    #[error("variable `{0}` has no value")]
    Unbound(String),
    #[error("shadow structures need a constant-domain model with identity eta: {0}")]
    UnsuitableModel(String),
    #[error("{0} is not an atomic formula")]
    NotAtom(String),
    #[error("no world {0}")]
    UnknownWorld(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithTerm {
    Var(String),
    Numeral(u64),
    Mod(Box<ArithTerm>, u64),
    /// The code of a domain element, below the domain size.
    CodedElement(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TauTag {
    /// `tau_isig1(u)`: a standard axiomatization of the base theory.
    ISigma1,
    /// `tau(u)`: the axiomatization of the ambient theory `T`.
    Tau,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoxIndex {
    Tau,
    /// Provability in the theory axiomatized by this formula (in `u`).
    Realization(Box<ArithFormula>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ArithFormula {
    Truth,
    Falsity,
    Eq(ArithTerm, ArithTerm),
    LambdaAtom(usize),
    TauAxiom(TauTag),
    /// `var = godel<quoted>`.
    GodelEq(String, Box<ArithFormula>),
    /// The opaque Sigma-1 formula realizing a relation symbol; the first
    /// argument is always `u`.
    Sigma(String, Vec<ArithTerm>),
    /// A schematic formula variable such as `theta`.
    Schematic(String),
    Not(Box<ArithFormula>),
    And(Vec<ArithFormula>),
    Or(Vec<ArithFormula>),
    Implies(Box<ArithFormula>, Box<ArithFormula>),
    Forall(String, Box<ArithFormula>),
    Exists(String, Box<ArithFormula>),
    Box(BoxIndex, Box<ArithFormula>),
    Diamond(BoxIndex, Box<ArithFormula>),
}

/// Arithmetic variable standing for a QRC variable.
pub fn y_var(x: &str) -> String {
    match x.strip_prefix('x') {
        Some(k) if !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) => format!("y{k}"),
        _ => format!("y_{x}"),
    }
}

/// Arithmetic variable standing for a QRC constant.
pub fn z_var(c: &str) -> String {
    match c.strip_prefix('c') {
        Some(k) if !k.is_empty() && k.bytes().all(|b| b.is_ascii_digit()) => format!("z{k}"),
        _ => format!("z_{c}"),
    }
}

/// The theory parameter.
pub const U: &str = "u";

impl ArithTerm {
    pub fn var(name: impl Into<String>) -> Self {
        ArithTerm::Var(name.into())
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            ArithTerm::Var(v) => {
                out.insert(v.clone());
            }
            ArithTerm::Mod(t, _) => t.collect_vars(out),
            ArithTerm::Numeral(_) | ArithTerm::CodedElement(_) => {}
        }
    }

    fn substitute(&self, var: &str, by: &ArithTerm) -> ArithTerm {
        match self {
            ArithTerm::Var(v) if v == var => by.clone(),
            ArithTerm::Mod(t, m) => ArithTerm::Mod(Box::new(t.substitute(var, by)), *m),
            other => other.clone(),
        }
    }

    /// Evaluates `t mod m` where `t` is a closed code or numeral below `m`.
    fn reduce(&self) -> ArithTerm {
        match self {
            ArithTerm::Mod(t, m) => match t.reduce() {
                ArithTerm::CodedElement(n) if n < *m => ArithTerm::CodedElement(n),
                ArithTerm::Numeral(n) => ArithTerm::Numeral(n % m),
                inner => ArithTerm::Mod(Box::new(inner), *m),
            },
            other => other.clone(),
        }
    }
}

impl ArithFormula {
    /// Conjunction, flattening nested conjunctions; `true` when empty.
    pub fn and(items: Vec<ArithFormula>) -> Self {
        let mut flat = Vec::new();
        for f in items {
            match f {
                ArithFormula::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => ArithFormula::Truth,
            1 => flat.pop().expect("one item"),
            _ => ArithFormula::And(flat),
        }
    }

    /// Disjunction, flattening nested disjunctions; `false` when empty.
    pub fn or(items: Vec<ArithFormula>) -> Self {
        let mut flat = Vec::new();
        for f in items {
            match f {
                ArithFormula::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => ArithFormula::Falsity,
            1 => flat.pop().expect("one item"),
            _ => ArithFormula::Or(flat),
        }
    }

    pub fn implies(a: ArithFormula, b: ArithFormula) -> Self {
        ArithFormula::Implies(Box::new(a), Box::new(b))
    }

    pub fn forall(v: impl Into<String>, body: ArithFormula) -> Self {
        ArithFormula::Forall(v.into(), Box::new(body))
    }

    pub fn exists(v: impl Into<String>, body: ArithFormula) -> Self {
        ArithFormula::Exists(v.into(), Box::new(body))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out);
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<String>) {
        match self {
            ArithFormula::Truth | ArithFormula::Falsity | ArithFormula::LambdaAtom(_) | ArithFormula::Schematic(_) => {}
            ArithFormula::Eq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            ArithFormula::TauAxiom(_) => {
                out.insert(U.to_string());
            }
            ArithFormula::GodelEq(v, _) => {
                out.insert(v.clone());
            }
            ArithFormula::Sigma(_, args) => args.iter().for_each(|t| t.collect_vars(out)),
            ArithFormula::Not(a) => a.collect_free(out),
            ArithFormula::And(items) | ArithFormula::Or(items) => items.iter().for_each(|f| f.collect_free(out)),
            ArithFormula::Implies(a, b) => {
                a.collect_free(out);
                b.collect_free(out);
            }
            ArithFormula::Forall(v, a) | ArithFormula::Exists(v, a) => {
                let mut inner = a.free_vars();
                inner.remove(v);
                out.extend(inner);
            }
            ArithFormula::Box(i, a) | ArithFormula::Diamond(i, a) => {
                if let BoxIndex::Realization(r) = i {
                    let mut idx = r.free_vars();
                    idx.remove(U);
                    out.extend(idx);
                }
                a.collect_free(out);
            }
        }
    }

    /// Replaces free occurrences of `var` by `by` (no capture check: `by`
    /// is a closed term in every use here). Quotes are left untouched.
    pub fn substitute(&self, var: &str, by: &ArithTerm) -> ArithFormula {
        let rec = |f: &ArithFormula| f.substitute(var, by);
        match self {
            ArithFormula::Eq(a, b) => ArithFormula::Eq(a.substitute(var, by), b.substitute(var, by)),
            ArithFormula::Sigma(s, args) => {
                ArithFormula::Sigma(s.clone(), args.iter().map(|t| t.substitute(var, by)).collect())
            }
            ArithFormula::Not(a) => ArithFormula::Not(Box::new(rec(a))),
            ArithFormula::And(items) => ArithFormula::And(items.iter().map(rec).collect()),
            ArithFormula::Or(items) => ArithFormula::Or(items.iter().map(rec).collect()),
            ArithFormula::Implies(a, b) => ArithFormula::implies(rec(a), rec(b)),
            ArithFormula::Forall(v, _) | ArithFormula::Exists(v, _) if v == var => self.clone(),
            ArithFormula::Forall(v, a) => ArithFormula::forall(v.clone(), rec(a)),
            ArithFormula::Exists(v, a) => ArithFormula::exists(v.clone(), rec(a)),
            ArithFormula::Box(i, a) => ArithFormula::Box(i.clone(), Box::new(rec(a))),
            ArithFormula::Diamond(i, a) => ArithFormula::Diamond(i.clone(), Box::new(rec(a))),
            other => other.clone(),
        }
    }

    /// Evaluates `mod` on closed codes and numerals everywhere.
    pub fn reduce_numerals(&self) -> ArithFormula {
        let rec = |f: &ArithFormula| f.reduce_numerals();
        match self {
            ArithFormula::Eq(a, b) => ArithFormula::Eq(a.reduce(), b.reduce()),
            ArithFormula::Sigma(s, args) => {
                ArithFormula::Sigma(s.clone(), args.iter().map(ArithTerm::reduce).collect())
            }
            ArithFormula::Not(a) => ArithFormula::Not(Box::new(rec(a))),
            ArithFormula::And(items) => ArithFormula::And(items.iter().map(rec).collect()),
            ArithFormula::Or(items) => ArithFormula::Or(items.iter().map(rec).collect()),
            ArithFormula::Implies(a, b) => ArithFormula::implies(rec(a), rec(b)),
            ArithFormula::Forall(v, a) => ArithFormula::forall(v.clone(), rec(a)),
            ArithFormula::Exists(v, a) => ArithFormula::exists(v.clone(), rec(a)),
            ArithFormula::Box(i, a) => ArithFormula::Box(i.clone(), Box::new(rec(a))),
            ArithFormula::Diamond(i, a) => ArithFormula::Diamond(i.clone(), Box::new(rec(a))),
            other => other.clone(),
        }
    }
}

impl fmt::Display for ArithTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithTerm::Var(v) => f.write_str(v),
            ArithTerm::Numeral(n) => write!(f, "{n}"),
            ArithTerm::Mod(t, m) => write!(f, "({t} mod {m})"),
            ArithTerm::CodedElement(n) => write!(f, "[{n}]"),
        }
    }
}

impl fmt::Display for BoxIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoxIndex::Tau => f.write_str("tau"),
            BoxIndex::Realization(r) => write!(f, "{r}"),
        }
    }
}

fn join(f: &mut fmt::Formatter<'_>, items: &[ArithFormula], sep: &str) -> fmt::Result {
    f.write_str("(")?;
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{item}")?;
    }
    f.write_str(")")
}

impl fmt::Display for ArithFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithFormula::Truth => f.write_str("true"),
            ArithFormula::Falsity => f.write_str("false"),
            ArithFormula::Eq(a, b) => write!(f, "{a} = {b}"),
            ArithFormula::LambdaAtom(i) => write!(f, "Lam({i})"),
            ArithFormula::TauAxiom(TauTag::ISigma1) => write!(f, "tau_isig1({U})"),
            ArithFormula::TauAxiom(TauTag::Tau) => write!(f, "tau({U})"),
            ArithFormula::GodelEq(v, q) => write!(f, "{v} = godel<{q}>"),
            ArithFormula::Sigma(s, args) => {
                write!(f, "sigma_{s}(")?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            ArithFormula::Schematic(name) => f.write_str(name),
            ArithFormula::Not(a) => write!(f, "~{a}"),
            ArithFormula::And(items) => join(f, items, " & "),
            ArithFormula::Or(items) => join(f, items, " | "),
            ArithFormula::Implies(a, b) => write!(f, "({a} -> {b})"),
            ArithFormula::Forall(v, a) => write!(f, "forall {v} . {a}"),
            ArithFormula::Exists(v, a) => write!(f, "exists {v} . {a}"),
            ArithFormula::Box(i, a) => write!(f, "Box[{i}] {a}"),
            ArithFormula::Diamond(i, a) => write!(f, "Dia[{i}] {a}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variable_naming() {
        assert_eq!(y_var("x0"), "y0");
        assert_eq!(y_var("x12"), "y12");
        assert_eq!(y_var("x"), "y_x");
        assert_eq!(y_var("x#1"), "y_x#1");
        assert_eq!(z_var("c3"), "z3");
        assert_eq!(z_var("c"), "z_c");
        assert_eq!(z_var("d"), "z_d");
    }

    #[test]
    fn smart_connectives() {
        assert_eq!(ArithFormula::and(vec![]), ArithFormula::Truth);
        assert_eq!(ArithFormula::or(vec![]), ArithFormula::Falsity);
        let a = ArithFormula::LambdaAtom(1);
        assert_eq!(ArithFormula::or(vec![a.clone()]), a);
        let nested = ArithFormula::or(vec![ArithFormula::or(vec![a.clone(), a.clone()]), a.clone()]);
        assert_eq!(nested, ArithFormula::Or(vec![a.clone(), a.clone(), a]));
    }

    #[test]
    fn printing() {
        let eq = ArithFormula::Eq(
            ArithTerm::CodedElement(1),
            ArithTerm::Mod(Box::new(ArithTerm::var("y0")), 3),
        );
        let f = ArithFormula::Diamond(
            BoxIndex::Tau,
            Box::new(ArithFormula::forall(
                "y0",
                ArithFormula::and(vec![ArithFormula::LambdaAtom(2), eq]),
            )),
        );
        assert_eq!(f.to_string(), "Dia[tau] forall y0 . (Lam(2) & [1] = (y0 mod 3))");
    }

    #[test]
    fn free_variables_and_binding() {
        let body = ArithFormula::Eq(ArithTerm::var("y0"), ArithTerm::var("y1"));
        let f = ArithFormula::exists("y0", body);
        assert_eq!(f.free_vars(), BTreeSet::from(["y1".to_string()]));
        let g = ArithFormula::GodelEq(
            U.into(),
            Box::new(ArithFormula::Eq(ArithTerm::var("y5"), ArithTerm::Numeral(0))),
        );
        assert_eq!(g.free_vars(), BTreeSet::from([U.to_string()]));
    }

    #[test]
    fn substitution_and_reduction() {
        let f = ArithFormula::Eq(
            ArithTerm::CodedElement(2),
            ArithTerm::Mod(Box::new(ArithTerm::var("z0")), 5),
        );
        let g = f.substitute("z0", &ArithTerm::CodedElement(2)).reduce_numerals();
        assert_eq!(
            g,
            ArithFormula::Eq(ArithTerm::CodedElement(2), ArithTerm::CodedElement(2))
        );
        let bound = ArithFormula::forall("z0", f.clone());
        assert_eq!(bound.substitute("z0", &ArithTerm::Numeral(1)), bound);
    }
}
