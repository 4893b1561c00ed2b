//! Derivation certificates for the sequent calculus, an independent checker,
//! and bounded backward proof search.
//!
//! Every comparison between a conclusion and what a rule schema or premise
//! demands is made up to renaming of bound variables; side conditions on
//! free variables and constants are checked on the literal formulas.

mod derived;
mod search;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Formula, Term};

pub use derived::{derived_rule_instances, expand_derived};
pub use search::{prove, search, SearchOutcome, DEFAULT_DEPTH_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Sequent {
    pub lhs: Formula,
    pub rhs: Formula,
}

impl Sequent {
    pub fn new(lhs: Formula, rhs: Formula) -> Self {
        Sequent { lhs, rhs }
    }

    pub fn canonical(&self) -> Sequent {
        Sequent::new(self.lhs.canonical(), self.rhs.canonical())
    }
}

impl fmt::Display for Sequent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if f.alternate() {
            write!(f, "{:#} ⊢ {:#}", self.lhs, self.rhs)
        } else {
            write!(f, "{} |- {}", self.lhs, self.rhs)
        }
    }
}

/// Primitive axioms and rules, followed by the derived rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// `phi |- T`
    #[serde(rename = "i-left")]
    Top,
    /// `phi |- phi`
    #[serde(rename = "i-refl")]
    Refl,
    /// `phi & psi |- phi`
    #[serde(rename = "ii-left")]
    AndElimLeft,
    /// `phi & psi |- psi`
    #[serde(rename = "ii-right")]
    AndElimRight,
    /// from `phi |- psi` and `phi |- chi` infer `phi |- psi & chi`
    #[serde(rename = "iii")]
    AndIntro,
    /// from `phi |- psi` and `psi |- chi` infer `phi |- chi`
    #[serde(rename = "iv")]
    Cut,
    /// from `phi |- psi` infer `<>phi |- <>psi`
    #[serde(rename = "v")]
    DiamondMono,
    /// `<><>phi |- <>phi`
    #[serde(rename = "vi")]
    Transitivity,
    /// from `phi |- psi` infer `phi |- A x . psi`, x not free in phi
    #[serde(rename = "vii")]
    ForallRight,
    /// from `phi[x/t] |- psi` infer `A x . phi |- psi`, t free for x in phi
    #[serde(rename = "viii")]
    ForallLeft,
    /// from `phi |- psi` infer `phi[x/t] |- psi[x/t]`
    #[serde(rename = "ix")]
    TermInstantiation,
    /// from `phi[x/c] |- psi[x/c]` infer `phi |- psi`, c in neither
    #[serde(rename = "x")]
    ConstantGeneralization,
    /// `<>A x . phi |- A x . <>phi`
    #[serde(rename = "L2.i")]
    DiamondForall,
    /// `A x . A y . phi |- A y . A x . phi`
    #[serde(rename = "L2.ii")]
    ForallSwap,
    /// `A x . phi |- phi[x/t]`
    #[serde(rename = "L2.iii")]
    ForallElim,
    /// `A x . phi |- A y . phi[x/y]`
    #[serde(rename = "L2.iv")]
    ForallRename,
    /// from `phi |- psi` infer `phi |- psi[x/t]`, x not free in phi
    #[serde(rename = "L2.v")]
    RhsInstantiation,
    /// from `phi |- psi[x/c]` infer `phi |- A x . psi`
    #[serde(rename = "L2.vi")]
    ConstantForallRight,
}

impl Rule {
    pub const PRIMITIVE: [Rule; 12] = [
        Rule::Top,
        Rule::Refl,
        Rule::AndElimLeft,
        Rule::AndElimRight,
        Rule::AndIntro,
        Rule::Cut,
        Rule::DiamondMono,
        Rule::Transitivity,
        Rule::ForallRight,
        Rule::ForallLeft,
        Rule::TermInstantiation,
        Rule::ConstantGeneralization,
    ];

    pub const DERIVED: [Rule; 6] = [
        Rule::DiamondForall,
        Rule::ForallSwap,
        Rule::ForallElim,
        Rule::ForallRename,
        Rule::RhsInstantiation,
        Rule::ConstantForallRight,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Rule::Top => "i-left",
            Rule::Refl => "i-refl",
            Rule::AndElimLeft => "ii-left",
            Rule::AndElimRight => "ii-right",
            Rule::AndIntro => "iii",
            Rule::Cut => "iv",
            Rule::DiamondMono => "v",
            Rule::Transitivity => "vi",
            Rule::ForallRight => "vii",
            Rule::ForallLeft => "viii",
            Rule::TermInstantiation => "ix",
            Rule::ConstantGeneralization => "x",
            Rule::DiamondForall => "L2.i",
            Rule::ForallSwap => "L2.ii",
            Rule::ForallElim => "L2.iii",
            Rule::ForallRename => "L2.iv",
            Rule::RhsInstantiation => "L2.v",
            Rule::ConstantForallRight => "L2.vi",
        }
    }

    pub fn is_derived(self) -> bool {
        Rule::DERIVED.contains(&self)
    }

    pub fn premise_count(self) -> usize {
        match self {
            Rule::Top
            | Rule::Refl
            | Rule::AndElimLeft
            | Rule::AndElimRight
            | Rule::Transitivity
            | Rule::DiamondForall
            | Rule::ForallSwap
            | Rule::ForallElim
            | Rule::ForallRename => 0,
            Rule::AndIntro | Rule::Cut => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// The term (and, where the conclusion does not determine it, the variable)
/// used by the quantifier and substitution rules.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var: Option<String>,
    pub term: Term,
}

impl Witness {
    pub fn term(term: Term) -> Self {
        Witness { var: None, term }
    }

    pub fn substitution(var: impl Into<String>, term: Term) -> Self {
        Witness {
            var: Some(var.into()),
            term,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub conclusion: Sequent,
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<Derivation>,
}

impl Derivation {
    pub fn axiom(rule: Rule, lhs: Formula, rhs: Formula) -> Self {
        Derivation {
            conclusion: Sequent::new(lhs, rhs),
            rule,
            witness: None,
            premises: Vec::new(),
        }
    }

    pub fn infer(rule: Rule, lhs: Formula, rhs: Formula, premises: Vec<Derivation>) -> Self {
        Derivation {
            conclusion: Sequent::new(lhs, rhs),
            rule,
            witness: None,
            premises,
        }
    }

    pub fn with_witness(mut self, w: Witness) -> Self {
        self.witness = Some(w);
        self
    }

    pub fn lhs(&self) -> &Formula {
        &self.conclusion.lhs
    }

    pub fn rhs(&self) -> &Formula {
        &self.conclusion.rhs
    }

    /// Chains `self` with a cut so that the conclusion reads literally
    /// `lhs |- rhs`, which must be alpha-equivalent to the current one.
    pub fn retarget(self, lhs: &Formula, rhs: &Formula) -> Derivation {
        let mut d = self;
        if d.lhs() != lhs {
            let refl = Derivation::axiom(Rule::Refl, lhs.clone(), d.lhs().clone());
            let r = d.rhs().clone();
            d = Derivation::infer(Rule::Cut, lhs.clone(), r, vec![refl, d]);
        }
        if d.rhs() != rhs {
            let refl = Derivation::axiom(Rule::Refl, d.rhs().clone(), rhs.clone());
            let l = d.lhs().clone();
            d = Derivation::infer(Rule::Cut, l, rhs.clone(), vec![d, refl]);
        }
        d
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    pub fn height(&self) -> usize {
        1 + self.premises.iter().map(Derivation::height).max().unwrap_or(0)
    }

    pub fn uses_only_primitive_rules(&self) -> bool {
        !self.rule.is_derived() && self.premises.iter().all(Derivation::uses_only_primitive_rules)
    }

    /// Pretty JSON. Formulas are stored as text, which on its own reads
    /// identifiers starting with `c` as constants and everything else as
    /// variables; constants named otherwise are listed under a top-level
    /// `constants` key so that they read back as constants.
    pub fn to_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("derivation serializes");
        let mut odd = BTreeSet::new();
        self.collect_constants(&mut odd);
        odd.retain(|c: &String| !c.starts_with('c'));
        if !odd.is_empty() {
            let obj = value.as_object_mut().expect("derivation is an object");
            obj.insert("constants".into(), serde_json::json!(odd));
        }
        serde_json::to_string_pretty(&value).expect("derivation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut value: serde_json::Value = serde_json::from_str(text)?;
        let declared: BTreeSet<String> = match value.as_object_mut().and_then(|o| o.remove("constants")) {
            Some(list) => serde_json::from_value(list)?,
            None => BTreeSet::new(),
        };
        let mut d: Derivation = serde_json::from_value(value)?;
        if !declared.is_empty() {
            d.declare_constants(&declared);
        }
        Ok(d)
    }

    fn collect_constants(&self, out: &mut BTreeSet<String>) {
        out.extend(self.conclusion.lhs.constants());
        out.extend(self.conclusion.rhs.constants());
        if let Some(Witness {
            term: Term::Const(c), ..
        }) = &self.witness
        {
            out.insert(c.clone());
        }
        self.premises.iter().for_each(|p| p.collect_constants(out));
    }

    /// Reads free variables with a declared name as constants.
    fn declare_constants(&mut self, names: &BTreeSet<String>) {
        for n in names {
            self.conclusion.lhs = self.conclusion.lhs.instantiate(n, n);
            self.conclusion.rhs = self.conclusion.rhs.instantiate(n, n);
        }
        if let Some(Witness { term, .. }) = &mut self.witness {
            if let Term::Var(v) = term {
                if names.contains(v) {
                    *term = Term::Const(v.clone());
                }
            }
        }
        self.premises.iter_mut().for_each(|p| p.declare_constants(names));
    }

    /// Indented human-readable tree, one node per line.
    pub fn render_tree(&self) -> String {
        let mut out = String::new();
        self.render_into(0, &mut out);
        out
    }

    fn render_into(&self, indent: usize, out: &mut String) {
        use std::fmt::Write;
        let w = match &self.witness {
            Some(Witness { var: Some(x), term }) => format!(" {x}:={term}"),
            Some(Witness { var: None, term }) => format!(" t={term}"),
            None => String::new(),
        };
        let _ = writeln!(
            out,
            "{:indent$}[{}{}] {}",
            "",
            self.rule,
            w,
            self.conclusion,
            indent = indent * 2
        );
        for p in &self.premises {
            p.render_into(indent + 1, out);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid {rule} step at {path:?} concluding {sequent}: {reason}")]
pub struct CheckFailure {
    /// Premise indices from the root to the offending node.
    pub path: Vec<usize>,
    pub rule: Rule,
    pub sequent: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CalculusError {
    #[error("no derived-rule schema matches {0}")]
    NoSchemaMatches(String),
}

/// Checks that every node is an instance of its rule, side conditions
/// included. Derived-rule nodes must additionally expand into a correct
/// primitive derivation.
pub fn check_derivation(d: &Derivation) -> Result<(), CheckFailure> {
    check_at(d, &mut Vec::new())
}

fn check_at(d: &Derivation, path: &mut Vec<usize>) -> Result<(), CheckFailure> {
    let fail = |reason: String| CheckFailure {
        path: path.clone(),
        rule: d.rule,
        sequent: d.conclusion.to_string(),
        reason,
    };
    if d.premises.len() != d.rule.premise_count() {
        return Err(fail(format!(
            "expected {} premises, found {}",
            d.rule.premise_count(),
            d.premises.len()
        )));
    }
    check_node(d).map_err(fail)?;
    if d.rule.is_derived() {
        let expansion =
            expand_derived(d).ok_or_else(|| fail("derived rule does not expand to primitive rules".into()))?;
        return check_at(&expansion, path);
    }
    for (i, p) in d.premises.iter().enumerate() {
        path.push(i);
        check_at(p, path)?;
        path.pop();
    }
    Ok(())
}

fn same(a: &Formula, b: &Formula, what: &str) -> Result<(), String> {
    if a.alpha_eq(b) {
        Ok(())
    } else {
        Err(format!("{what}: expected {b}, found {a}"))
    }
}

fn witness_term(d: &Derivation) -> Result<&Term, String> {
    d.witness
        .as_ref()
        .map(|w| &w.term)
        .ok_or_else(|| "missing witness term".to_string())
}

fn witness_subst(d: &Derivation) -> Result<(&str, &Term), String> {
    match &d.witness {
        Some(Witness { var: Some(x), term }) => Ok((x, term)),
        _ => Err("missing witness variable and term".into()),
    }
}

fn check_node(d: &Derivation) -> Result<(), String> {
    let (lhs, rhs) = (d.lhs(), d.rhs());
    let prem = |i: usize| &d.premises[i].conclusion;
    match d.rule {
        Rule::Top => match rhs {
            Formula::Top => Ok(()),
            _ => Err("right-hand side must be T".into()),
        },
        Rule::Refl => same(rhs, lhs, "right-hand side"),
        Rule::AndElimLeft | Rule::AndElimRight => match lhs {
            Formula::And(a, b) => {
                let kept = if d.rule == Rule::AndElimLeft { a } else { b };
                same(rhs, kept, "right-hand side")
            }
            _ => Err("left-hand side must be a conjunction".into()),
        },
        Rule::AndIntro => match rhs {
            Formula::And(a, b) => {
                same(&prem(0).lhs, lhs, "first premise lhs")?;
                same(&prem(1).lhs, lhs, "second premise lhs")?;
                same(&prem(0).rhs, a, "first premise rhs")?;
                same(&prem(1).rhs, b, "second premise rhs")
            }
            _ => Err("right-hand side must be a conjunction".into()),
        },
        Rule::Cut => {
            same(&prem(0).lhs, lhs, "first premise lhs")?;
            same(&prem(1).lhs, &prem(0).rhs, "cut formula")?;
            same(&prem(1).rhs, rhs, "second premise rhs")
        }
        Rule::DiamondMono => match (lhs, rhs) {
            (Formula::Diamond(a), Formula::Diamond(b)) => {
                same(&prem(0).lhs, a, "premise lhs")?;
                same(&prem(0).rhs, b, "premise rhs")
            }
            _ => Err("both sides must be diamonds".into()),
        },
        Rule::Transitivity => match lhs {
            Formula::Diamond(inner) if matches!(**inner, Formula::Diamond(_)) => same(rhs, inner, "right-hand side"),
            _ => Err("left-hand side must be a double diamond".into()),
        },
        Rule::ForallRight => match rhs {
            Formula::Forall(x, body) => {
                if lhs.has_free(x) {
                    return Err(format!("`{x}` is free in the left-hand side"));
                }
                same(&prem(0).lhs, lhs, "premise lhs")?;
                same(&prem(0).rhs, body, "premise rhs")
            }
            _ => Err("right-hand side must be universal".into()),
        },
        Rule::ForallLeft => match lhs {
            Formula::Forall(x, body) => {
                let t = witness_term(d)?;
                let inst = body.substitute(x, t).map_err(|e| e.to_string())?;
                same(&prem(0).lhs, &inst, "premise lhs")?;
                same(&prem(0).rhs, rhs, "premise rhs")
            }
            _ => Err("left-hand side must be universal".into()),
        },
        Rule::TermInstantiation => {
            let (x, t) = witness_subst(d)?;
            let l = prem(0).lhs.substitute(x, t).map_err(|e| e.to_string())?;
            let r = prem(0).rhs.substitute(x, t).map_err(|e| e.to_string())?;
            same(lhs, &l, "left-hand side")?;
            same(rhs, &r, "right-hand side")
        }
        Rule::ConstantGeneralization => {
            let (x, t) = witness_subst(d)?;
            let Term::Const(c) = t else {
                return Err("witness must be a constant".into());
            };
            if lhs.mentions_constant(c) || rhs.mentions_constant(c) {
                return Err(format!("constant `{c}` occurs in the conclusion"));
            }
            same(&prem(0).lhs, &lhs.instantiate(x, c), "premise lhs")?;
            same(&prem(0).rhs, &rhs.instantiate(x, c), "premise rhs")
        }
        Rule::DiamondForall => match lhs {
            Formula::Diamond(inner) => match &**inner {
                Formula::Forall(x, phi) => same(
                    rhs,
                    &Formula::forall(x.clone(), Formula::diamond((**phi).clone())),
                    "right-hand side",
                ),
                _ => Err("left-hand side must be <>A x . phi".into()),
            },
            _ => Err("left-hand side must be <>A x . phi".into()),
        },
        Rule::ForallSwap => match lhs {
            Formula::Forall(x, inner) => match &**inner {
                Formula::Forall(y, phi) => same(
                    rhs,
                    &Formula::forall(y.clone(), Formula::forall(x.clone(), (**phi).clone())),
                    "right-hand side",
                ),
                _ => Err("left-hand side must be A x . A y . phi".into()),
            },
            _ => Err("left-hand side must be A x . A y . phi".into()),
        },
        Rule::ForallElim => match lhs {
            Formula::Forall(x, phi) => {
                let t = witness_term(d)?;
                let inst = phi.substitute(x, t).map_err(|e| e.to_string())?;
                same(rhs, &inst, "right-hand side")
            }
            _ => Err("left-hand side must be universal".into()),
        },
        Rule::ForallRename => match (lhs, rhs) {
            (Formula::Forall(x, phi), Formula::Forall(y, chi)) => {
                if phi.has_free(y) {
                    return Err(format!("`{y}` is free in {phi}"));
                }
                let inst = phi.substitute(x, &Term::Var(y.clone())).map_err(|e| e.to_string())?;
                same(chi, &inst, "renamed body")
            }
            _ => Err("both sides must be universal".into()),
        },
        Rule::RhsInstantiation => {
            let (x, t) = witness_subst(d)?;
            if lhs.has_free(x) {
                return Err(format!("`{x}` is free in the left-hand side"));
            }
            same(&prem(0).lhs, lhs, "premise lhs")?;
            let inst = prem(0).rhs.substitute(x, t).map_err(|e| e.to_string())?;
            same(rhs, &inst, "right-hand side")
        }
        Rule::ConstantForallRight => match rhs {
            Formula::Forall(x, psi) => {
                let Term::Const(c) = witness_term(d)? else {
                    return Err("witness must be a constant".into());
                };
                if lhs.has_free(x) {
                    return Err(format!("`{x}` is free in the left-hand side"));
                }
                if lhs.mentions_constant(c) || psi.mentions_constant(c) {
                    return Err(format!("constant `{c}` is not fresh"));
                }
                same(&prem(0).lhs, lhs, "premise lhs")?;
                same(&prem(0).rhs, &psi.instantiate(x, c), "premise rhs")
            }
            _ => Err("right-hand side must be universal".into()),
        },
    }
}
