//! Strictly positive formulas: terms, formulas, signatures, substitution,
//! depth measures and closure under a set of constants.

mod closure;
mod parser;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub use closure::closure;
pub use parser::{parse_formula, parse_formula_lenient};

/// A set of formulas kept in canonical order.
pub type FormulaSet = BTreeSet<Formula>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxError {
    #[error("syntax error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },
    #[error("unknown symbol `{name}` at byte {pos}")]
    UnknownSymbol { name: String, pos: usize },
    #[error("relation `{symbol}` has arity {expected} but is applied to {found} terms")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("`{term}` is not free for `{var}` in {formula}")]
    Capture { formula: String, var: String, term: String },
    #[error("formula {0} is not closed")]
    OpenFormula(String),
    #[error("no constant given for free variable `{0}`")]
    MissingNaming(String),
    #[error("invalid signature: {0}")]
    Signature(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn name(&self) -> &str {
        match self {
            Term::Var(n) | Term::Const(n) => n,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Top,
    Rel(String, Vec<Term>),
    And(Box<Formula>, Box<Formula>),
    Diamond(Box<Formula>),
    Forall(String, Box<Formula>),
}

/// Modal, quantifier and constant depth of a formula (or of a set, as the
/// componentwise maximum).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Depths {
    pub mdepth: usize,
    pub udepth: usize,
    pub cdepth: usize,
}

impl Formula {
    pub fn rel(symbol: impl Into<String>, args: Vec<Term>) -> Self {
        Formula::Rel(symbol.into(), args)
    }

    pub fn and(left: Formula, right: Formula) -> Self {
        Formula::And(Box::new(left), Box::new(right))
    }

    pub fn diamond(body: Formula) -> Self {
        Formula::Diamond(Box::new(body))
    }

    pub fn forall(var: impl Into<String>, body: Formula) -> Self {
        Formula::Forall(var.into(), Box::new(body))
    }

    /// Right-nested conjunction of the given formulas; `T` when empty.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(items: I) -> Self {
        let mut items: Vec<Formula> = items.into_iter().collect();
        let Some(mut acc) = items.pop() else {
            return Formula::Top;
        };
        while let Some(f) = items.pop() {
            acc = Formula::and(f, acc);
        }
        acc
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a str>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Top => {}
            Formula::Rel(_, args) => {
                for t in args {
                    if let Term::Var(x) = t {
                        if !bound.contains(&x.as_str()) {
                            out.insert(x.clone());
                        }
                    }
                }
            }
            Formula::And(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Diamond(a) => a.collect_free(bound, out),
            Formula::Forall(x, a) => {
                bound.push(x);
                a.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn has_free(&self, x: &str) -> bool {
        match self {
            Formula::Top => false,
            Formula::Rel(_, args) => args.iter().any(|t| matches!(t, Term::Var(v) if v == x)),
            Formula::And(a, b) => a.has_free(x) || b.has_free(x),
            Formula::Diamond(a) => a.has_free(x),
            Formula::Forall(y, a) => y != x && a.has_free(x),
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Every variable name occurring in the formula, bound or free.
    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| match f {
            Formula::Rel(_, args) => out.extend(args.iter().filter(|t| t.is_var()).map(|t| t.name().to_string())),
            Formula::Forall(x, _) => {
                out.insert(x.clone());
            }
            _ => {}
        });
        out
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Rel(_, args) = f {
                for t in args {
                    if let Term::Const(c) = t {
                        out.insert(c.clone());
                    }
                }
            }
        });
        out
    }

    pub fn mentions_constant(&self, c: &str) -> bool {
        match self {
            Formula::Top => false,
            Formula::Rel(_, args) => args.iter().any(|t| matches!(t, Term::Const(d) if d == c)),
            Formula::And(a, b) => a.mentions_constant(c) || b.mentions_constant(c),
            Formula::Diamond(a) | Formula::Forall(_, a) => a.mentions_constant(c),
        }
    }

    /// Relation symbols with the arity they are used at. The first use wins
    /// when a symbol is (incorrectly) used at two arities.
    pub fn relations(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        self.visit(&mut |f| {
            if let Formula::Rel(s, args) = f {
                out.entry(s.clone()).or_insert(args.len());
            }
        });
        out
    }

    /// All terms occurring in the formula (free variables and constants;
    /// bound occurrences are skipped).
    pub fn free_terms(&self) -> BTreeSet<Term> {
        let mut out: BTreeSet<Term> = self.constants().into_iter().map(Term::Const).collect();
        out.extend(self.free_vars().into_iter().map(Term::Var));
        out
    }

    fn visit<F: FnMut(&Formula)>(&self, f: &mut F) {
        f(self);
        match self {
            Formula::Top | Formula::Rel(..) => {}
            Formula::And(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::Diamond(a) | Formula::Forall(_, a) => a.visit(f),
        }
    }

    pub fn mdepth(&self) -> usize {
        match self {
            Formula::Top | Formula::Rel(..) => 0,
            Formula::And(a, b) => a.mdepth().max(b.mdepth()),
            Formula::Diamond(a) => a.mdepth() + 1,
            Formula::Forall(_, a) => a.mdepth(),
        }
    }

    pub fn udepth(&self) -> usize {
        match self {
            Formula::Top | Formula::Rel(..) => 0,
            Formula::And(a, b) => a.udepth().max(b.udepth()),
            Formula::Diamond(a) => a.udepth(),
            Formula::Forall(_, a) => a.udepth() + 1,
        }
    }

    /// Number of distinct constants.
    pub fn cdepth(&self) -> usize {
        self.constants().len()
    }

    pub fn depths(&self) -> Depths {
        Depths {
            mdepth: self.mdepth(),
            udepth: self.udepth(),
            cdepth: self.cdepth(),
        }
    }

    /// Whether substituting `t` for the free occurrences of `x` captures no
    /// variable of `t`.
    pub fn free_for(&self, x: &str, t: &Term) -> bool {
        match t {
            Term::Const(_) => true,
            Term::Var(y) => self.free_for_var(x, y, &mut Vec::new()),
        }
    }

    fn free_for_var<'a>(&'a self, x: &str, y: &str, bound: &mut Vec<&'a str>) -> bool {
        match self {
            Formula::Top => true,
            Formula::Rel(_, args) => {
                let occurs = args.iter().any(|t| matches!(t, Term::Var(v) if v == x));
                !occurs || !bound.contains(&y)
            }
            Formula::And(a, b) => a.free_for_var(x, y, bound) && b.free_for_var(x, y, bound),
            Formula::Diamond(a) => a.free_for_var(x, y, bound),
            Formula::Forall(z, a) => {
                if z == x {
                    return true;
                }
                bound.push(z);
                let ok = a.free_for_var(x, y, bound);
                bound.pop();
                ok
            }
        }
    }

    /// `self[x/t]`, failing when `t` is not free for `x`.
    pub fn substitute(&self, x: &str, t: &Term) -> Result<Formula, SyntaxError> {
        if !self.free_for(x, t) {
            return Err(SyntaxError::Capture {
                formula: self.to_string(),
                var: x.to_string(),
                term: t.to_string(),
            });
        }
        Ok(self.replace_free(x, t))
    }

    /// Replaces free occurrences of `x` without a capture check.
    pub(crate) fn replace_free(&self, x: &str, t: &Term) -> Formula {
        match self {
            Formula::Top => Formula::Top,
            Formula::Rel(s, args) => Formula::Rel(
                s.clone(),
                args.iter()
                    .map(|a| match a {
                        Term::Var(v) if v == x => t.clone(),
                        other => other.clone(),
                    })
                    .collect(),
            ),
            Formula::And(a, b) => Formula::and(a.replace_free(x, t), b.replace_free(x, t)),
            Formula::Diamond(a) => Formula::diamond(a.replace_free(x, t)),
            Formula::Forall(y, a) if y == x => self.clone(),
            Formula::Forall(y, a) => Formula::forall(y.clone(), a.replace_free(x, t)),
        }
    }

    /// Substitutes a constant for `x`; constants are always free for `x`.
    pub fn instantiate(&self, x: &str, c: &str) -> Formula {
        self.replace_free(x, &Term::Const(c.to_string()))
    }

    /// `self^g`: every free variable replaced by its constant in `naming`.
    pub fn close_with_constants(&self, naming: &BTreeMap<String, String>) -> Result<Formula, SyntaxError> {
        let mut out = self.clone();
        for x in self.free_vars() {
            let c = naming.get(&x).ok_or_else(|| SyntaxError::MissingNaming(x.clone()))?;
            out = out.instantiate(&x, c);
        }
        Ok(out)
    }

    /// The alpha-variant whose bound variables are renamed, in traversal
    /// order, to `x{k}` for consecutive `k`, starting past every free
    /// variable of that shape. Alpha-equivalent formulas share one canonical
    /// form.
    pub fn canonical(&self) -> Formula {
        let offset = self
            .free_vars()
            .iter()
            .filter_map(|v| v.strip_prefix('x').and_then(|n| n.parse::<usize>().ok()))
            .map(|n| n + 1)
            .max()
            .unwrap_or(0);
        let mut next = offset;
        self.rename_binders(&mut Vec::new(), &mut || {
            let name = format!("x{next}");
            next += 1;
            name
        })
    }

    fn rename_binders(&self, scope: &mut Vec<(String, String)>, fresh: &mut dyn FnMut() -> String) -> Formula {
        match self {
            Formula::Top => Formula::Top,
            Formula::Rel(s, args) => Formula::Rel(
                s.clone(),
                args.iter()
                    .map(|t| match t {
                        Term::Var(v) => scope
                            .iter()
                            .rev()
                            .find(|(old, _)| old == v)
                            .map(|(_, new)| Term::Var(new.clone()))
                            .unwrap_or_else(|| t.clone()),
                        Term::Const(_) => t.clone(),
                    })
                    .collect(),
            ),
            Formula::And(a, b) => {
                let a = a.rename_binders(scope, fresh);
                let b = b.rename_binders(scope, fresh);
                Formula::and(a, b)
            }
            Formula::Diamond(a) => Formula::diamond(a.rename_binders(scope, fresh)),
            Formula::Forall(x, a) => {
                let new = fresh();
                scope.push((x.clone(), new.clone()));
                let body = a.rename_binders(scope, fresh);
                scope.pop();
                Formula::forall(new, body)
            }
        }
    }

    /// An alpha-variant whose binders avoid `avoid` and every variable
    /// already present in the formula.
    pub fn rename_bound_apart(&self, avoid: &BTreeSet<String>) -> Formula {
        let mut used: BTreeSet<String> = avoid.clone();
        used.extend(self.all_vars());
        self.rename_binders(&mut Vec::new(), &mut || {
            let v = fresh_var(&used);
            used.insert(v.clone());
            v
        })
    }

    pub fn alpha_eq(&self, other: &Formula) -> bool {
        self == other || self.canonical() == other.canonical()
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            other => vec![other],
        }
    }
}

impl Depths {
    /// Componentwise maximum over a set of formulas.
    pub fn of_set<'a, I: IntoIterator<Item = &'a Formula>>(set: I) -> Depths {
        set.into_iter().fold(Depths::default(), |acc, f| {
            let d = f.depths();
            Depths {
                mdepth: acc.mdepth.max(d.mdepth),
                udepth: acc.udepth.max(d.udepth),
                cdepth: acc.cdepth.max(d.cdepth),
            }
        })
    }
}

/// Least variable `x#k` not in `used`.
pub fn fresh_var(used: &BTreeSet<String>) -> String {
    (0..)
        .map(|k| format!("x#{k}"))
        .find(|v| !used.contains(v))
        .expect("unbounded supply")
}

/// Least constant `c#k` not in `used`.
pub fn fresh_constant(used: &BTreeSet<String>) -> String {
    (0..)
        .map(|k| format!("c#{k}"))
        .find(|c| !used.contains(c))
        .expect("unbounded supply")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unicode = f.alternate();
        match self {
            Formula::Top => f.write_str(if unicode { "⊤" } else { "T" }),
            Formula::Rel(s, args) => {
                write!(f, "{s}(")?;
                for (i, t) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{t}")?;
                }
                f.write_str(")")
            }
            Formula::And(a, b) if unicode => write!(f, "({a:#} ∧ {b:#})"),
            Formula::And(a, b) => write!(f, "({a} & {b})"),
            Formula::Diamond(a) if unicode => write!(f, "◇{a:#}"),
            Formula::Diamond(a) => write!(f, "<>{a}"),
            Formula::Forall(x, a) if unicode => write!(f, "∀{x} . {a:#}"),
            Formula::Forall(x, a) => write!(f, "A {x} . {a}"),
        }
    }
}

impl std::str::FromStr for Formula {
    type Err = SyntaxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_formula_lenient(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_formula_lenient(&text).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parser::classify_term(&text).map_err(serde::de::Error::custom)
    }
}

/// Constants and relation symbols (with arities) of a language.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    #[serde(default)]
    pub constants: BTreeSet<String>,
    #[serde(default)]
    pub relations: BTreeMap<String, usize>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_constant(mut self, c: impl Into<String>) -> Self {
        self.constants.insert(c.into());
        self
    }

    pub fn with_relation(mut self, s: impl Into<String>, arity: usize) -> Self {
        self.relations.insert(s.into(), arity);
        self
    }

    pub fn from_json(text: &str) -> Result<Self, SyntaxError> {
        let sig: Signature = serde_json::from_str(text).map_err(|e| SyntaxError::Signature(e.to_string()))?;
        sig.validate()?;
        Ok(sig)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("signature serializes")
    }

    pub fn validate(&self) -> Result<(), SyntaxError> {
        for c in &self.constants {
            if !parser::is_term_ident(c) {
                return Err(SyntaxError::Signature(format!("bad constant name `{c}`")));
            }
        }
        for s in self.relations.keys() {
            if !parser::is_relation_ident(s) {
                return Err(SyntaxError::Signature(format!("bad relation name `{s}`")));
            }
        }
        Ok(())
    }

    /// Checks that every symbol of `phi` is declared with the right arity.
    pub fn check(&self, phi: &Formula) -> Result<(), SyntaxError> {
        for c in phi.constants() {
            if !self.constants.contains(&c) {
                return Err(SyntaxError::UnknownSymbol { name: c, pos: 0 });
            }
        }
        let mut bad = None;
        phi.visit(&mut |f| {
            if let Formula::Rel(s, args) = f {
                if bad.is_none() {
                    match self.relations.get(s) {
                        None => {
                            bad = Some(SyntaxError::UnknownSymbol {
                                name: s.clone(),
                                pos: 0,
                            })
                        }
                        Some(&n) if n != args.len() => {
                            bad = Some(SyntaxError::ArityMismatch {
                                symbol: s.clone(),
                                expected: n,
                                found: args.len(),
                            })
                        }
                        _ => {}
                    }
                }
            }
        });
        bad.map_or(Ok(()), Err)
    }

    /// Adds the symbols of `phi`, failing on an arity clash.
    pub fn absorb(&mut self, phi: &Formula) -> Result<(), SyntaxError> {
        self.constants.extend(phi.constants());
        let mut clash = None;
        phi.visit(&mut |f| {
            if let Formula::Rel(s, args) = f {
                match self.relations.get(s) {
                    Some(&n) if n != args.len() => {
                        clash.get_or_insert(SyntaxError::ArityMismatch {
                            symbol: s.clone(),
                            expected: n,
                            found: args.len(),
                        });
                    }
                    Some(_) => {}
                    None => {
                        self.relations.insert(s.clone(), args.len());
                    }
                }
            }
        });
        clash.map_or(Ok(()), Err)
    }

    /// Smallest signature containing all symbols of the given formulas.
    pub fn infer<'a, I: IntoIterator<Item = &'a Formula>>(formulas: I) -> Result<Self, SyntaxError> {
        let mut sig = Signature::new();
        for f in formulas {
            sig.absorb(f)?;
        }
        Ok(sig)
    }

    pub fn fresh_constant(&self, avoid: &BTreeSet<String>) -> String {
        let used: BTreeSet<String> = self.constants.union(avoid).cloned().collect();
        fresh_constant(&used)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(s: &str) -> Formula {
        s.parse().unwrap()
    }

    #[test]
    fn substitution_examples() {
        assert_eq!(
            f("A x . S(x, y)").substitute("y", &Term::constant("c")).unwrap(),
            f("A x . S(x, c)")
        );
        assert_eq!(f("S(x)").substitute("x", &Term::constant("c")).unwrap(), f("S(c)"));
        let err = f("A y . S(x, y)").substitute("x", &Term::var("y"));
        assert!(matches!(err, Err(SyntaxError::Capture { .. })));
    }

    #[test]
    fn free_for_examples() {
        assert!(!f("A y . S(x, y)").free_for("x", &Term::var("y")));
        assert!(f("S(x)").free_for("x", &Term::constant("c")));
        assert!(f("A x . S(x)").free_for("x", &Term::var("y")));
    }

    #[test]
    fn depth_examples() {
        let d = f("<><>T").depths();
        assert_eq!((d.mdepth, d.udepth, d.cdepth), (2, 0, 0));
        let d = f("A x . <>S(x, c)").depths();
        assert_eq!((d.mdepth, d.udepth, d.cdepth), (1, 1, 1));
        assert_eq!(f("T").depths(), Depths::default());
    }

    #[test]
    fn close_with_constants_examples() {
        let naming: BTreeMap<_, _> = [("x".to_string(), "c_x".to_string())].into();
        assert_eq!(f("S(x)").close_with_constants(&naming).unwrap(), f("S(c_x)"));
        assert_eq!(f("T").close_with_constants(&naming).unwrap(), Formula::Top);
        let naming: BTreeMap<_, _> = [("y".to_string(), "c_y".to_string())].into();
        assert_eq!(
            f("A x . S(x, y)").close_with_constants(&naming).unwrap(),
            f("A x . S(x, c_y)")
        );
        assert_eq!(
            f("S(z)").close_with_constants(&naming),
            Err(SyntaxError::MissingNaming("z".into()))
        );
    }

    #[test]
    fn canonical_identifies_alpha_variants() {
        assert_eq!(f("A y . S(y)").canonical(), f("A z . S(z)").canonical());
        assert_ne!(f("A y . S(y, x)").canonical(), f("A x . S(x, y)").canonical());
        // a free x0 must not be captured by the canonical binder names
        let g = f("A y . S(y, x0)");
        let c = g.canonical();
        assert_eq!(c.free_vars(), g.free_vars());
        assert_eq!(c, f("A x1 . S(x1, x0)"));
    }

    #[test]
    fn rename_apart_avoids_names() {
        let g = f("A y . S(x, y)");
        let avoid: BTreeSet<String> = ["y".to_string()].into();
        let r = g.rename_bound_apart(&avoid);
        assert!(r.alpha_eq(&g));
        assert!(r.free_for("x", &Term::var("y")));
    }

    #[test]
    fn fresh_names_are_least() {
        let used: BTreeSet<String> = ["c#0".to_string(), "c#2".to_string()].into();
        assert_eq!(fresh_constant(&used), "c#1");
        assert_eq!(fresh_var(&BTreeSet::new()), "x#0");
    }

    #[test]
    fn signature_check_and_absorb() {
        let sig = Signature::new().with_relation("S", 1).with_constant("c");
        assert!(sig.check(&f("A x . S(x)")).is_ok());
        assert!(matches!(
            sig.check(&f("S(c, c)")),
            Err(SyntaxError::ArityMismatch { .. })
        ));
        let mut s = Signature::new();
        s.absorb(&f("S(c)")).unwrap();
        let clash = Formula::rel("S", vec![Term::constant("c"), Term::constant("c")]);
        assert!(s.absorb(&clash).is_err());
    }

    #[test]
    fn signature_json() {
        let sig = Signature::from_json(r#"{"constants":["c","d"],"relations":{"S":1,"R":2}}"#).unwrap();
        assert_eq!(sig.relations["R"], 2);
        assert_eq!(Signature::from_json(&sig.to_json()).unwrap(), sig);
        assert!(Signature::from_json(r#"{"constants":["Bad"]}"#).is_err());
    }
}
